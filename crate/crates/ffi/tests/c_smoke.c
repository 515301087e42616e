#include <math.h>
#include <stdio.h>

#include "fraclane.h"

int main(void) {
    FlProblem *problem = NULL;
    if (fl_problem_new(3, 0.5, 0.0, 3.0, false, &problem) != FL_STATUS_OK) return 1;
    double kappa = 0.0;
    if (fl_problem_kappa(problem, &kappa) != FL_STATUS_OK) return 2;
    double c = 0.0;
    fl_spectral_constant(3, 0.5, -fl_problem_beta(problem), &c);
    if (fabs(kappa * kappa - c) > 1e-12) return 3;

    FlProfile *u = NULL;
    if (fl_solve_minimal(problem, 0.1, 1e-3, 1.0, 24, &u) != FL_STATUS_OK) return 4;
    FlSolveInfo info;
    fl_profile_info(u, &info);
    if (!info.converged || fl_profile_len(u) != 24) return 5;
    fl_profile_free(u);
    fl_problem_free(problem);

    if (fl_problem_new(3, 0.5, 0.0, 1.1, false, &problem) != FL_STATUS_REGIME_VIOLATION) return 6;
    char msg[128];
    if (fl_last_error(msg, sizeof msg) == 0) return 7;
    printf("ok %s\n", fl_version());
    return 0;
}
