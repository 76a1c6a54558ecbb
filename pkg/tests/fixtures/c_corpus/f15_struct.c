/* One formatted output row. */
struct row {
    int cells;
    int width;
};

/* Width of one table row in cells. */
int row_width(struct row *r)
{
    return r->cells * r->width;
}
