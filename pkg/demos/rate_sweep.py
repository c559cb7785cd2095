"""
Empirical growth rates of static regret and cumulative violation.

For each trade-off parameter kappa, the violation should grow no faster than
T^(1 - kappa/2). Slopes come from a least-squares fit of log(value) on
log(T) across horizons 2^6 ... T, averaged over seeds. Regret slopes print
as nan when the seed-mean regret is not positive at every horizon.

    python demos/rate_sweep.py [T] [n_seeds]
"""

import sys

from distoco.harness import ExperimentConfig, checkpoints, sweep

T = int(sys.argv[1]) if len(sys.argv) > 1 else 4096
seeds = range(int(sys.argv[2]) if len(sys.argv) > 2 else 3)

table = sweep(ExperimentConfig(T=T), kappas=[0.3, 0.5, 0.7], horizons=checkpoints(T), seeds=seeds)

print(f"{'kappa':>6} {'violation slope':>16} {'bound':>6} {'regret slope':>13} {'bound':>6}")
for row in table:
    print(f"{row['kappa']:6.1f} {row['violation_slope']:16.3f} {row['theory_violation']:6.2f} "
          f"{row['regret_slope']:13.3f} {row['theory_regret']:6.2f}")

#%% the raw regret series explains a nan slope
for row in table:
    print(f"kappa={row['kappa']}: mean static regret", [round(v, 1) for v in row["regret_series"]])
