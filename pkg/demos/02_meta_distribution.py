"""The service-rate distribution across a network, found as a fixed point.

Each access point transmits only when its scheduled UE has a packet, and how
often that happens depends on its own service rate.  The distribution of
rates therefore has to be solved self-consistently.
"""

# %%
import numpy as np

from scheddelay.analytic import FixedPointParams, activity_moment, solve_meta_distribution

delta = 2 / 3.8  # path-loss exponent 3.8
theta = 1.0  # 0 dB SIR threshold
params = FixedPointParams()

# %% light and heavy traffic, three UEs per access point
solutions = {}
for xi in (0.05, 0.20):
    f = solve_meta_distribution(params, delta, theta, xi, 3)
    solutions[xi] = f
    print(f"xi={xi}: {f.iterations} iterations, last change {f.sup_delta:.1e}")

u = np.array([0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
print("\n   u   F(u) light   F(u) heavy")
for ui, a, b in zip(u, solutions[0.05](u), solutions[0.20](u)):
    print(f"{ui:5.2f}   {a:10.4f}   {b:10.4f}")

# heavier traffic keeps more neighbours switched on, which pushes rates down

# %% how busy are the interferers?
for xi, f in solutions.items():
    print(f"xi={xi}: mean activity {activity_moment(f, xi, 3, 1):.3f}, "
          f"share of UEs that cannot keep up {f(xi * 3):.3f}")

# %% the two starting points land on the same solution
idle = solve_meta_distribution(params, delta, theta, 0.05, 3, init="idle")
print("\nall-idle vs all-active start:", np.max(np.abs(idle.f_values - solutions[0.05].f_values)))
