#ifndef POOL_H
#define POOL_H

#include <stddef.h>

typedef struct {
    int used;
    char tag[8];
} Chunk;

typedef struct Pool {
    Chunk *chunks;
    size_t n;
} Pool;

Pool *pool_create(size_t n);
Chunk *pool_get_chunk(Pool *pool, unsigned idx);
size_t pool_size(const Pool *pool);
void process(Pool *pool);

void my_free(void *buf);
char *dup_string(const char *s);
void *xmalloc(size_t n);
unsigned checksum(const char *s);
void log_message(const char *msg);

#endif
