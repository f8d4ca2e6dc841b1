#include "pool.h"

int run_job(Pool *pool, const char *name)
{
    char *label = dup_string(name);
    if (!label)
        return -1;
    log_message(label);
    process(pool);
    return 0;
}

int app_main(void)
{
    Pool *pool = pool_create(16);
    if (!pool)
        return 1;
    Chunk *first = pool_get_chunk(pool, 0);
    first->used = 1;
    run_job(pool, "demo");
    my_free(pool->chunks);
    my_free(pool);
    return 0;
}
