/* Tear down the scanner state
   for both reentrant and plain modes. */
static int
scanner_teardown (const char * yybytes,
                  int _yybytes_len)
{
    if (_yybytes_len < 0)
        return -1;
    return yybytes != 0;
}
