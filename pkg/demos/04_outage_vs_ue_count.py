"""How many UEs can one access point carry before delays blow up?

Delay outage is the share of UEs whose mean delay exceeds ``t0 = 20`` slots.
"""

# %%
from scheddelay.cli import ScenarioConfig, cmd_outage_sweep

cfg = ScenarioConfig()
table = cmd_outage_sweep(cfg, range(1, 9), [0.02, 0.10])
by = {(r.policy, int(r.abscissa)): r.analytic for r in table.rows}

# %%
for xi in (0.02, 0.10):
    print(f"\nxi = {xi}")
    print(" K     RS       RR")
    for k in range(1, 9):
        print(f"{k:2d}  {by[(f'rs@xi={xi:g}', k)]:7.4f}  {by[(f'rr@xi={xi:g}', k)]:7.4f}")

# round robin never does worse.  At xi=0.10 and K>=7 random scheduling hits
# outage 1: even a perfect link gives mean delay (1-xi)/(1/K-xi) > 20, while
# round robin still gets the best-placed UEs under the bound
