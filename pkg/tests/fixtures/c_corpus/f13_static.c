static int file_state;

/* Reset the per-file static state. */
static void local_state_reset(void)
{
    file_state = 0;
}
