#include <math.h>
#include <stdio.h>
#include "hardedge.h"

int main(void) {
    double det = 0.0;
    if (he_laguerre_det(1.0, 1, 0, &det) != HE_STATUS_OK || fabs(det - exp(-1.0)) > 1e-8) {
        return 1;
    }
    double c[1] = {-1.0};
    if (he_fredholm_limit_det(1.0, 0, c, 1, &det) != HE_STATUS_DOMAIN || he_last_error() == NULL) {
        return 2;
    }
    HeSamples *s = NULL;
    size_t n = 0;
    if (he_finite_n_samples(20, 0.0, 2.0, INFINITY, 50, 7, &s) != HE_STATUS_OK || he_samples_len(s, &n) != HE_STATUS_OK || n != 50) {
        return 3;
    }
    he_samples_free(s);
    printf("ok %s\n", he_version());
    return 0;
}
