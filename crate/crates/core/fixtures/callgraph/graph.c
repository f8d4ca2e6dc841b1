#include <stdlib.h>

static int leaf(int x)
{
    return x * 2;
}

static int left(int x)
{
    return leaf(x) + 1;
}

static int right(int x)
{
    if (x <= 0)
        return leaf(x);
    return right(x - 1) + left(x);
}

int top(int x)
{
    char *scratch = malloc(16);
    int r = left(x) + right(x);
    free(scratch);
    return r;
}

int lonely(void)
{
    return 7;
}
