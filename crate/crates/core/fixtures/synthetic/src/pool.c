#include <stdlib.h>
#include <string.h>
#include "pool.h"

Pool *pool_create(size_t n)
{
    Pool *p = malloc(sizeof(Pool));
    if (!p)
        return NULL;
    p->chunks = calloc(n, sizeof(Chunk));
    if (!p->chunks) {
        free(p);
        return NULL;
    }
    p->n = n;
    return p;
}

Chunk *pool_get_chunk(Pool *pool, unsigned idx)
{
    Chunk *c = &pool->chunks[idx];
    return c;
}

size_t pool_size(const Pool *pool)
{
    return pool->n;
}

void process(Pool *pool)
{
    size_t i;
    char *tmp = malloc(pool->n + 1);
    if (!tmp)
        return;
    for (i = 0; i < pool->n; i++)
        tmp[i] = pool->chunks[i].used ? 'x' : '.';
    tmp[pool->n] = '\0';
    free(tmp);
}
