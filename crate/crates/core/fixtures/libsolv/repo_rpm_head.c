#include <stdio.h>
#include <string.h>
#include "chksum.h"

struct Pool;
struct Repo {
    struct Pool *pool;
};

extern int pool_error(struct Pool *pool, int ret, const char *fmt, ...);

int
repo_add_rpm_head(struct Repo *repo, FILE *fp, int chksumtype, int flags)
{
    struct Pool *pool = repo->pool;
    Chksum *chksumh = 0;
    Chksum *leadsigchksumh = 0;
    unsigned char lead[4096];
    unsigned int sigcnt;

    if (chksumtype)
        chksumh = solv_chksum_create(chksumtype);
    if ((flags & RPM_ADD_WITH_LEADSIGID) != 0)
        leadsigchksumh = solv_chksum_create(REPOKEY_TYPE_MD5);
    if (fread(lead, 96 + 16, 1, fp) != 1)
    {
        pool_error(pool, -1, "short read");
        fclose(fp);
        solv_chksum_free(chksumh, 0);
        return 0;
    }
    if (chksumh)
        solv_chksum_add(chksumh, lead, 96 + 16);
    if (leadsigchksumh)
        solv_chksum_add(leadsigchksumh, lead, 96 + 16);
    sigcnt = lead[96 + 8] << 24 | lead[96 + 9] << 16 | lead[96 + 10] << 8 | lead[96 + 11];
    if (sigcnt > 1024)
    {
        pool_error(pool, -1, "bad signature count");
        fclose(fp);
        solv_chksum_free(chksumh, 0);
        return 0;
    }
    if (chksumh)
        solv_chksum_add(chksumh, &sigcnt, sizeof(sigcnt));
    solv_chksum_free(chksumh, 0);
    fclose(fp);
    return 1;
}
