#include <math.h>
#include <stdio.h>
#include "ubw1.h"

int main(void) {
    Ubw1Discrepancy *tv = NULL;
    if (ubw1_discrepancy_new("tv", &tv) != UBW1_STATUS_OK) return 1;
    double v = 0.0;
    if (ubw1_discrepancy_eval(tv, 1.0, 3.0, &v) != UBW1_STATUS_OK || v != 2.0) return 2;
    if (ubw1_discrepancy_eval(tv, -1.0, 3.0, &v) != UBW1_STATUS_NEGATIVE_MASS) return 3;
    if (ubw1_last_error_message() == NULL) return 4;

    double points[] = {0.0, 1.0};
    double rho0[] = {1.0, 0.0};
    double rho1[] = {0.0, 1.0};
    Ubw1Solution *sol = NULL;
    if (ubw1_solve_static(tv, points, 2, 1, rho0, rho1, 65, &sol) != UBW1_STATUS_OK) return 5;
    double primal = 0.0, dual = 0.0;
    ubw1_solution_values(sol, &primal, &dual);
    if (fabs(primal - 1.0) > 1e-9 || fabs(dual - 1.0) > 1e-9) return 6;
    ubw1_solution_free(sol);
    ubw1_discrepancy_free(tv);
    printf("ok %s\n", ubw1_version());
    return 0;
}
