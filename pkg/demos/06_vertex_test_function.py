"""Build the vertex super/subsolution test functions and check the slope
bound that lets their local-time term absorb the junction error."""

import dataclasses
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spiderhjb.verify import (
    GadgetParams,
    absorption_slope_bound,
    scaled_drift_constants,
    solve_ode_gadget,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

bounds = (1.2, 0.8, 0.5, 0.25, 1.0)  # sigma_upper, sigma_lower, |b|, |h|, T
rho_super, rho_sub = scaled_drift_constants(1.0, 0.5, bounds[1], bounds[0])
base = GadgetParams(
    lam=1.0,
    eps=0.5,
    kappa=0.5,
    eta=0.3,
    gamma=0.05,
    theta_level=0.5,
    rho_super=rho_super,
    rho_sub=rho_sub,
    super_at_zero=0.2,
    super_at_eps=(0.35, 0.3),
    sub_at_zero=-0.2,
    sub_at_eps=(-0.35, -0.3),
    slope_super=0.0,
    slope_sub=0.0,
)

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, which in zip(axes, ("super", "sub")):
    # first solve flat in l, bound the profile slope, then re-solve with a
    # designed local-time slope 5% above the absorption bound
    flat = solve_ode_gadget(base, bounds, which)
    mid = flat.l_grid.size // 2
    dphi_sup = max(
        float(np.max(np.abs(np.gradient(flat.values[r, :, mid], flat.x_grid))))
        for r in range(2)
    )
    slope = 1.05 * absorption_slope_bound(base, bounds, which, dphi_sup, spin_sup=1.0)
    key = "slope_super" if which == "super" else "slope_sub"
    tf = solve_ode_gadget(dataclasses.replace(base, **{key: slope}), bounds, which)

    print(f"{which:5s}: residual={tf.residual:.2e}  dl_slope={tf.dl_slope:+.4f}  "
          f"dx_at_zero={np.round(tf.dx_at_zero, 4)}")
    for j, l in enumerate(tf.l_grid):
        ax.plot(tf.x_grid, tf.values[0, :, j], lw=1.0, label=f"l = {l:+.2f}")
    ax.set_title(f"{which}solution gadget, ray 1")
    ax.set_xlabel("x")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(OUT / "06_vertex_test_function.png", dpi=120)
print("wrote", OUT / "06_vertex_test_function.png")
