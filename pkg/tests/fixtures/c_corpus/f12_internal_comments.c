/* Copy n bytes from src to dst. */
void copy_bytes(char *dst, const char *src, int n)
{
    /* Walk forward one byte at a time,
       destroying nothing. */
    while (n-- > 0) {
        // copy current byte
        *dst++ = *src++;
    }
}
void tail_call(char *dst)
{
    copy_bytes(dst, dst, 0);
}
