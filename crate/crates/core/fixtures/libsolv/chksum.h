#ifndef CHKSUM_H
#define CHKSUM_H

#define REPOKEY_TYPE_MD5 1
#define RPM_ADD_WITH_LEADSIGID (1 << 10)

typedef struct s_Chksum Chksum;

Chksum *solv_chksum_create(int type);
void solv_chksum_add(Chksum *chk, const void *data, int len);
void *solv_chksum_free(Chksum *chk, unsigned char *cp);

#endif
