"""
Dynamic programming against brute force
=======================================

On instances small enough to enumerate, the DP optimum must match the
exhaustive search exactly. The DP touches far fewer states.
"""

# %%
from d2dalloc import GenConfig, dp_solve, exhaustive_solve, generate
from d2dalloc.exhaustive import search_space_size

rows = []
for seed in range(12):
    sc = generate(GenConfig(n_d=1 + seed % 3, master_seed=seed))
    dp, ex = dp_solve(sc), exhaustive_solve(sc)
    rows.append((seed, sc.n_d, dp.objective, ex.objective, dp.stats.states_visited, search_space_size(sc)))

print(" seed  n_d        dp  exhaustive  dp states  leaves")
for seed, n_d, a, b, states, leaves in rows:
    fmt = lambda v: "  infeasible" if v is None else f"{v:10.4f}"
    print(f"{seed:5d} {n_d:4d} {fmt(a)} {fmt(b)} {states:10d} {leaves:7d}")

# %%
# Cellular mode pays off when the two devices are far apart but both
# see the base station well. Forcing D2D mode only shows the cost.
for dist in (30.0, 150.0):
    gaps = []
    for seed in range(40):
        sc = generate(GenConfig(n_d=3, m_u=3, m_d=3, d2d_pair_distance_max_m=dist, master_seed=seed))
        joint, ca = dp_solve(sc), dp_solve(sc, force_d2d_mode_only=True)
        if joint.feasible:
            gaps.append(joint.objective - ca.objective)
    print(f"pair distance <= {dist:5.0f} m: mean gain from mode selection {sum(gaps) / len(gaps):.3f}")

# %%
# The largest size the DP is meant for: 8 D2D pairs, 3 + 3 channels.
import time

sc = generate(GenConfig(n_d=8, m_u=3, m_d=3, master_seed=0))
t0 = time.perf_counter()
res = dp_solve(sc)
print(f"N_d=8: objective {res.objective:.3f}, {res.stats.states_visited} states, "
      f"{time.perf_counter() - t0:.2f}s, within bound: {res.stats.bound_ok}")
