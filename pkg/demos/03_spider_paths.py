"""Simulate spider paths from the junction and watch local time accrue.

The instance charges the running local time at rate 1 (h0 = -1, zero
terminal payoff), so the value from the vertex at t = 0 is
-E[L_T] = -sqrt(2 T / pi); the Monte Carlo estimate should land on it.
"""

import math
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from spiderhjb.model import CATALOG, ControlSets
from spiderhjb.network import NetworkPoint
from spiderhjb.simulate import SimConfig, constant_policy, estimate_value, simulate_path

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

data, controls = CATALOG["local_time_cost"]()
policy = constant_policy(data, controls)
start = (0.0, NetworkPoint(0.0, 1), 0.0)

# a few individual trajectories, drawn on a signed axis (ray 1 up, ray 2 down)
fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
for k in range(6):
    path, reward = simulate_path(data, policy, start, SimConfig(dt=1e-3, n_paths=1, seed=11), path_index=k)
    t = [s.t for s in path.states]
    signed = [s.x if s.i == 1 else -s.x for s in path.states]
    l = [s.l for s in path.states]
    ax1.plot(t, signed, lw=0.7)
    ax2.plot(t, l, lw=0.9)
ax1.axhline(0.0, color="k", lw=0.5)
ax1.set_ylabel("signed position")
ax2.set_ylabel("local time at the junction")
ax2.set_xlabel("t")
fig.tight_layout()
fig.savefig(OUT / "03_spider_paths.png", dpi=120)
print("wrote", OUT / "03_spider_paths.png")

# Monte Carlo value vs the closed form
mean, se = estimate_value(data, policy, start, SimConfig(dt=1e-3, n_paths=20000, seed=11))
target = -math.sqrt(2.0 * data.horizon / math.pi)
print(f"MC estimate from the vertex: {mean:.4f} +- {se:.4f}")
print(f"closed form -sqrt(2T/pi):    {target:.4f}")
