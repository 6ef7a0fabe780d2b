/* Ground state and a short evolution through the C interface. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "snls.h"

static int check(SnlsStatus st, const char *what) {
    if (st != SNLS_STATUS_OK) {
        char msg[256];
        snls_last_error(msg, sizeof msg);
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)st, msg);
        return 1;
    }
    return 0;
}

int main(void) {
    SnlsGrid *grid = NULL;
    SnlsGroundState *gs = NULL;
    SnlsState *profile = NULL, *data = NULL;
    SnlsTrajectory *traj = NULL;
    SnlsGroundStateConstants c;
    SnlsVerdict verdict;

    if (check(snls_grid_radial(2048, 16.0, &grid), "grid")) return 1;
    if (check(snls_ground_state_solve(3.0, grid, 0.0, 0, &gs), "ground state")) return 1;
    if (check(snls_ground_state_constants(gs, &c), "constants")) return 1;
    printf("K_gs %.10e M_gs %.10e C_opt %.10e\n", c.k_gs, c.m_gs, c.c_opt);

    size_t n = snls_grid_len(grid);
    double *u = malloc(n * sizeof *u), *v = malloc(n * sizeof *v);
    if (check(snls_ground_state_profile(gs, &profile), "profile")) return 1;
    if (check(snls_state_copy(profile, u, NULL, v, NULL, n), "copy")) return 1;
    for (size_t i = 0; i < n; i++) {
        u[i] *= 0.5;
        v[i] *= 0.5;
    }
    if (check(snls_state_new(grid, 3.0, 9.0, u, NULL, v, NULL, n, &data), "state")) return 1;
    if (check(snls_classify(data, &c, SNLS_SYMMETRY_RADIAL, &verdict), "classify")) return 1;
    printf("verdict %d basis %d\n", (int)verdict.kind, (int)verdict.basis);

    SnlsEvolveOptions opts = snls_evolve_options_default();
    opts.dt = 2e-4;
    opts.t_end = 0.02;
    opts.output_stride = 20;
    if (check(snls_evolve(data, &opts, &traj), "evolve")) return 1;
    size_t m = snls_trajectory_len(traj);
    double *energy = malloc(m * sizeof *energy);
    if (check(snls_trajectory_series(traj, "energy_mu", energy, m), "series")) return 1;
    printf("energy %.12e -> %.12e over %zu reports\n", energy[0], energy[m - 1], m);

    int ok = verdict.kind == SNLS_VERDICT_KIND_GLOBAL_SCATTERING && fabs(energy[m - 1] - energy[0]) < 1e-5 * fabs(energy[0]);
    free(energy);
    free(u);
    free(v);
    snls_trajectory_free(traj);
    snls_state_free(data);
    snls_state_free(profile);
    snls_ground_state_free(gs);
    snls_grid_free(grid);
    return ok ? 0 : 2;
}
