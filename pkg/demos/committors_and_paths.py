"""Committors, simulated paths, and the well process seen by a walker.

First the exact committor probabilities (one linear solve), then Monte
Carlo cross-checks: hitting frequencies from a transient start, and the
rate matrix of the process of wells visited over a long run, which should
reproduce the limit generator entry by entry.
"""

import numpy as np

from metaspec import chain, mesh, paths, potential

ALPHA, EPS = 1.8, 0.01

p = potential.example_potential(halfwidth=1e-4)
m = mesh.build_uniform(p, R=5.0, N=203, h=10 / 203)
P = chain.transition_matrix(m, ALPHA, EPS)
QL = chain.limit_generator(p, ALPHA)

K = paths.committors(P)
print(f"committor partition-of-unity defect: {np.abs(K.sum(axis=1) - 1).max():.2e}")
for j in (1, 2, 3):
    inwell = K[m.wells == j, j - 1]
    print(f"  well {j}: min committor to its own minimum {inwell.min():.4f}")

x0 = 60  # uphill inside well 1
st = paths.return_time_stats(P, x0, n_samples=20000, seed=42)
print(f"\nfrom state {x0}: exact committors {np.round(K[x0], 4)}")
print(f"          MC hit frequencies {np.round(st.hit_freq, 4)} "
      f"({st.n_samples} samples)")
print(f"return time: mean {st.tau_samples.mean():.1f} steps, "
      f"deterministic horizon t_max = {st.t_max}, "
      f"fraction beyond it {st.excess_frac:.3f}")

wr = paths.well_process_rates(P, int(m.minima_idx[0]), horizon_rescaled=500.0, seed=11)
print(f"\nwell process over 500 rescaled time units at eps = {EPS:g}:")
print(f"occupation fractions {np.round(wr.occupation, 4)}")
off = ~np.eye(3, dtype=bool)
print(f"{'pair':>6} {'estimated':>11} {'limit':>9} {'CI half-width':>14}")
for i in range(3):
    for j in range(3):
        if i != j:
            print(f"  {i + 1}->{j + 1} {wr.rates[i, j]:>11.4f} "
                  f"{QL.matrix[i, j]:>9.4f} {wr.ci_halfwidth[i, j]:>14.4f}")
if wr.wide_ci:
    print("(some pairs have fewer than 10 switches; widen the horizon "
          "for tighter intervals)")
