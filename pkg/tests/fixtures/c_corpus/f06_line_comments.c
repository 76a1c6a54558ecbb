// Advance the cursor.
// Return the next token index.
int next_token(int cursor)
{
    return cursor + 1;
}
