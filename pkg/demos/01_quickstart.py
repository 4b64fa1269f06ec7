"""
Quickstart: one cell, a handful of D2D pairs
============================================

Generate a random scenario, solve it three ways and look at what each
solver decided for every D2D pair.
"""

# %%
# A scenario is a frozen snapshot: links, channels and one gain tensor
# ``gains[channel-1, tx_node, rx_node]``. Node 0 is the base station.
from d2dalloc import GenConfig, generate

cfg = GenConfig(n_uc=1, n_dc=1, n_d=4, m_u=3, m_d=3, master_seed=42)
sc = generate(cfg)
print(f"{sc.n} links ({sc.n_uc} uplink, {sc.n_dc} downlink, {sc.n_d} D2D) on {sc.m} channels")
print("gain tensor shape:", sc.gains.shape)

# %%
# Exact optimum by dynamic programming, the heuristic, and the heuristic
# when each channel may host at most one D2D link.
from d2dalloc import dp_solve, greedy_solve

results = [dp_solve(sc), greedy_solve(sc), greedy_solve(sc, restrict_one_d2d_per_channel=True)]
for res in results:
    cell, d2d, off = res.mode_counts(sc)
    print(f"{res.algo:20s} objective {res.objective:8.3f}  cellular-mode {cell}  d2d-mode {d2d}  inactive {off}")

# %%
# Per-link view of the optimum: channels held and achieved rate.
best = results[0]
for j in sc.d2d_ids:
    chans = sorted(best.assignment.channels_of(j))
    mode = "cellular" if j in best.assignment.cell_mode else ("d2d" if chans else "off")
    print(f"link {j}: {mode:8s} channels {chans}  rate {best.per_link_rate[j]:.3f} b/s/Hz")

# %%
# Any assignment can be checked independently of the solver that built it.
from d2dalloc import Assignment, check_feasible, objective

print("optimum feasible:", check_feasible(sc, best.assignment).ok)
cellular = {(i, j) for i, j in best.assignment.rho if sc.link(j).is_cellular}
crowded = Assignment(cellular | {(1, j) for j in sc.d2d_ids})
verdict = check_feasible(sc, crowded)
print(f"every D2D pair on channel 1: feasible {verdict.ok}, objective {objective(sc, crowded):.3f}")
