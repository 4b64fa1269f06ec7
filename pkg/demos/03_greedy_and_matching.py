"""
The greedy heuristic and its matching seed
==========================================

Cellular links are placed first by a maximum-weight matching; D2D links
are then admitted one by one while a positive gain remains.
"""

# %%
from d2dalloc import GenConfig, INFEASIBLE, generate, greedy_solve, km_match
from d2dalloc.greedy import edge_weight_table

sc = generate(GenConfig(n_uc=2, n_dc=1, n_d=5, m_u=3, m_d=2, master_seed=5))
table = edge_weight_table(sc)
for i, row in enumerate(table, start=1):
    cells = ["   --  " if w is INFEASIBLE else f"{w:7.3f}" for w in row]
    print(f"channel {i}: " + " ".join(cells))
pairs, total = km_match(table)
print("matching (channel, link):", sorted((i + 1, sc.cellular_ids[j]) for i, j in pairs), f"total {total:.3f}")

# %%
res = greedy_solve(sc)
print(f"greedy objective {res.objective:.3f} (matching alone {res.stats.extra['km_total']:.3f}), "
      f"{res.stats.states_visited} admissions")

# %%
# How close is greedy to the optimum, and what does letting several D2D
# links share a channel buy?
from d2dalloc import dp_solve

for n_d in (2, 4, 6):
    ratio, share = [], []
    for seed in range(30):
        s = generate(GenConfig(n_d=n_d, master_seed=seed))
        g, opt = greedy_solve(s), dp_solve(s)
        if opt.feasible and opt.objective > 0:
            ratio.append(g.objective / opt.objective)
            share.append(g.objective - greedy_solve(s, restrict_one_d2d_per_channel=True).objective)
    print(f"N_d={n_d}: greedy/optimum {sum(ratio) / len(ratio):.3f}, "
          f"gain over one-D2D-per-channel {sum(share) / len(share):.3f}")
