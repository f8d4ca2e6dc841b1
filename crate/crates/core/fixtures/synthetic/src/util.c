#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include "pool.h"

void my_free(void *buf)
{
    if (buf)
        free(buf);
}

char *dup_string(const char *s)
{
    size_t len = strlen(s) + 1;
    char *copy = malloc(len);
    if (!copy)
        return NULL;
    memcpy(copy, s, len);
    return copy;
}

void *xmalloc(size_t n)
{
    void *p = malloc(n);
    if (p == NULL)
        abort();
    return p;
}

static int clamp(int v, int lo, int hi)
{
    if (v < lo)
        return lo;
    if (v > hi)
        return hi;
    return v;
}

unsigned checksum(const char *s)
{
    unsigned h = 5381;
    while (*s)
        h = h * 33 + (unsigned char)*s++;
    return (unsigned)clamp((int)(h & 0x7fff), 0, 0x7fff);
}

void log_message(const char *msg)
{
    char *buf = malloc(64);
    if (!buf)
        return;
    snprintf(buf, 64, "[%u] %s", checksum(msg), msg);
    puts(buf);
}
