"""One access point with no interference: where the delay formulas come from.

Run with ``python demos/01_single_cell.py``.
"""

# %%
import numpy as np

from scheddelay import markov
from scheddelay.analytic import mean_delay_rr, mean_delay_rs, rs_rr_gap, tau_a
from scheddelay.queuesim import run_isolated_queue

rng = np.random.default_rng(7)

# three UEs share the access point, each link succeeds with probability 0.6
# and every UE gets a packet with probability 0.1 per slot
mu, xi, k = 0.6, 0.1, 3

# %% closed forms
print(f"random scheduling  : {mean_delay_rs(mu, xi, k):.3f} slots")
print(f"round robin        : {mean_delay_rr(mu, xi, k):.3f} slots")
print(f"difference         : {rs_rr_gap(mu, xi, k):.3f} slots")
print(f"P(queue non-empty) : {tau_a(mu, xi, k):.3f}")

# %% the same numbers from a million simulated slots
for policy in ("rs", "rr"):
    res = run_isolated_queue(mu, xi, k, policy, 10**6, rng)
    print(f"{policy}: simulated {res.pooled_delay:.3f} slots, busy {res.busy_fraction:.3f}")

# %% round robin again, this time from the Markov chain observed once per round
chain, ss = markov.solve_round_chain(xi, mu, k)
print("chain size", chain.q, "tail mass", f"{ss.tail_mass:.1e}")
print("markov (Little's law):", round(markov.rr_mean_delay_numeric(chain, ss), 6))
print("markov (raw round sum):", round(markov.rr_mean_delay_numeric(chain, ss, convention="round"), 6))

# the raw sum reads the queue only at round boundaries and so misses the
# arrivals that pile up while the UE waits for its turn; averaging the
# queue over all K slots of a round and dividing by xi recovers the formula

# %% pushing the load: round robin keeps its edge until the queue saturates
for load in (0.2, 0.5, 0.8, 0.95):
    x = load * mu / k
    print(f"load {load:.2f}: RS {mean_delay_rs(mu, x, k):8.2f}  RR {mean_delay_rr(mu, x, k):8.2f}")
