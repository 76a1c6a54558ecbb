/* Emit a record to the backup stream instead. */
void ambiguous_fn(int record)
{
    (void) record;
}
