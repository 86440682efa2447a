"""Star-network basics: points, geodesic distances, spinning measures."""

import numpy as np

from spiderhjb.model import SpinningMeasure
from spiderhjb.network import NetworkPoint, StarNetwork

net = StarNetwork(ray_count=3, radius=5.0)

p = NetworkPoint(1.5, 1)
q = NetworkPoint(2.0, 3)
vertex = NetworkPoint(0.0, 2)  # any ray label works at x = 0

print("network:", net)
print(f"d(p, q)      = {net.distance(p, q)}   (through the junction: 1.5 + 2.0)")
print(f"d(p, vertex) = {net.distance(p, vertex)}")
print("junction points compare equal:", vertex == NetworkPoint(0.0, 1))
print("canonical junction label:", net.canonicalize(vertex))

# A spinning measure assigns each ray a weight at every (t, l, theta).
even = SpinningMeasure("constant", weights=np.array([0.5, 0.3, 0.2]))
print("\nconstant spin at any state:", even(0.0, 0.0, 0.0))

# the l_decay_mix family drifts from one weight vector toward another as
# local time accumulates
drifting = SpinningMeasure(
    "l_decay_mix",
    weights_a=np.array([0.7, 0.15, 0.15]),
    weights_b=np.array([0.2, 0.4, 0.4]),
    l_scale=2.0,
)
for l in (0.0, 1.0, 4.0, 16.0):
    w = drifting(0.0, l, 0.0)
    print(f"l_decay_mix at l={l:4.1f}: {np.round(w, 4)}  (sum={w.sum():.1f})")
