"""Problem data for controlled diffusions on a star network.

A problem instance consists of, per ray i: a volatility sigma_i(t,x,l,beta),
a drift b_i(t,x,l,beta), a running reward h_i(t,x,l,beta) and a terminal
payoff g_i(x,l); plus, at the junction: a spinning measure S(t,l,theta)
(a probability vector over rays, controlled by theta) and a junction reward
h0(t,l,theta) paid per unit of local time. Controls range over finite grids.

Coefficients come from a closed catalog of parametric families so that every
instance can be written down in a config file and rebuilt exactly:

ray coefficients (sigma/drift/running cost), argument order (t, x, l, beta):
    constant            c0
    affine_x            c0 + cx*x
    trig_tl             c0 + at*sin(wt*t) + al*cos(wl*l)
    control_affine      c0 + cb*beta
    control_quadratic   c0 + cb*beta + cb2*beta**2

terminal payoffs, argument order (x, l):
    constant            c0
    affine_x            c0 + cx*x
    affine_xl           c0 + cx*x + cl*l

junction rewards, argument order (t, l, theta):
    constant            c0
    theta_affine        c0 + cb*theta
    theta_quadratic     c0 + cb*theta + cb2*theta**2
    abs_peak            c0 - ab*|theta - theta0|
    trig_tl             c0 + at*sin(wt*t) + al*cos(wl*l)

spinning measures, argument order (t, l, theta), values in the simplex:
    constant            weights
    theta_mix           theta*weights_a + (1-theta)*weights_b
    l_decay_mix         weights_b + (weights_a-weights_b)*exp(-l/l_scale)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .network import RayIndex

SIMPLEX_TOL = 1e-12
CONTINUITY_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _bshape(*xs) -> tuple[int, ...]:
    return np.broadcast_shapes(*(np.shape(v) for v in xs))


def _as_result(raw, shape):
    """Broadcast a family evaluation to the common argument shape."""
    out = np.broadcast_to(np.asarray(raw, dtype=float), shape)
    if shape == ():
        return float(out)
    return out


def _check_family_fields(obj, allowed: dict[str, tuple[str, ...]]) -> None:
    if obj.family not in allowed:
        raise ValueError(f"unknown coefficient family {obj.family!r}; choose from {sorted(allowed)}")
    active = allowed[obj.family]
    for f in fields(obj):
        if f.name in ("family", "weights", "weights_a", "weights_b"):
            continue
        val = getattr(obj, f.name)
        if f.name not in active and val != 0.0:
            raise ValueError(
                f"field {f.name!r} is not used by family {obj.family!r} (got {val!r}); "
                f"active fields: {active}"
            )


# ---------------------------------------------------------------------------
# coefficient families
# ---------------------------------------------------------------------------

_RAY_FAMILIES = {
    "constant": ("c0",),
    "affine_x": ("c0", "cx"),
    "trig_tl": ("c0", "at", "wt", "al", "wl"),
    "control_affine": ("c0", "cb"),
    "control_quadratic": ("c0", "cb", "cb2"),
}


@dataclass(frozen=True)
class RayCoefficient:
    """One of sigma_i, b_i, h_i as a catalog family; vectorized over numpy inputs."""

    family: str
    c0: float = 0.0
    cx: float = 0.0
    cb: float = 0.0
    cb2: float = 0.0
    at: float = 0.0
    wt: float = 0.0
    al: float = 0.0
    wl: float = 0.0

    def __post_init__(self) -> None:
        _check_family_fields(self, _RAY_FAMILIES)

    @property
    def depends_on_t(self) -> bool:
        return self.family == "trig_tl" and self.at != 0.0 and self.wt != 0.0

    @property
    def depends_on_l(self) -> bool:
        return self.family == "trig_tl" and self.al != 0.0 and self.wl != 0.0

    def __call__(self, t, x, l, beta):
        shape = _bshape(t, x, l, beta)
        if self.family == "constant":
            raw = self.c0
        elif self.family == "affine_x":
            raw = self.c0 + self.cx * np.asarray(x, dtype=float)
        elif self.family == "trig_tl":
            raw = (
                self.c0
                + self.at * np.sin(self.wt * np.asarray(t, dtype=float))
                + self.al * np.cos(self.wl * np.asarray(l, dtype=float))
            )
        elif self.family == "control_affine":
            raw = self.c0 + self.cb * np.asarray(beta, dtype=float)
        else:  # control_quadratic
            b = np.asarray(beta, dtype=float)
            raw = self.c0 + self.cb * b + self.cb2 * b * b
        return _as_result(raw, shape)


_TERMINAL_FAMILIES = {
    "constant": ("c0",),
    "affine_x": ("c0", "cx"),
    "affine_xl": ("c0", "cx", "cl"),
}


@dataclass(frozen=True)
class TerminalPayoff:
    """Terminal payoff g_i(x, l) on one ray."""

    family: str
    c0: float = 0.0
    cx: float = 0.0
    cl: float = 0.0

    def __post_init__(self) -> None:
        _check_family_fields(self, _TERMINAL_FAMILIES)

    @property
    def depends_on_l(self) -> bool:
        return self.family == "affine_xl" and self.cl != 0.0

    def __call__(self, x, l):
        shape = _bshape(x, l)
        raw = self.c0
        if self.family in ("affine_x", "affine_xl"):
            raw = raw + self.cx * np.asarray(x, dtype=float)
        if self.family == "affine_xl":
            raw = raw + self.cl * np.asarray(l, dtype=float)
        return _as_result(raw, shape)


_VERTEX_COST_FAMILIES = {
    "constant": ("c0",),
    "theta_affine": ("c0", "cb"),
    "theta_quadratic": ("c0", "cb", "cb2"),
    "abs_peak": ("c0", "ab", "theta0"),
    "trig_tl": ("c0", "at", "wt", "al", "wl"),
}


@dataclass(frozen=True)
class VertexCost:
    """Junction reward h0(t, l, theta), paid per unit of accumulated local time."""

    family: str
    c0: float = 0.0
    cb: float = 0.0
    cb2: float = 0.0
    ab: float = 0.0
    theta0: float = 0.0
    at: float = 0.0
    wt: float = 0.0
    al: float = 0.0
    wl: float = 0.0

    def __post_init__(self) -> None:
        _check_family_fields(self, _VERTEX_COST_FAMILIES)

    @property
    def depends_on_t(self) -> bool:
        return self.family == "trig_tl" and self.at != 0.0 and self.wt != 0.0

    @property
    def depends_on_l(self) -> bool:
        return self.family == "trig_tl" and self.al != 0.0 and self.wl != 0.0

    def __call__(self, t, l, theta):
        shape = _bshape(t, l, theta)
        if self.family == "constant":
            raw = self.c0
        elif self.family == "theta_affine":
            raw = self.c0 + self.cb * np.asarray(theta, dtype=float)
        elif self.family == "theta_quadratic":
            th = np.asarray(theta, dtype=float)
            raw = self.c0 + self.cb * th + self.cb2 * th * th
        elif self.family == "abs_peak":
            raw = self.c0 - self.ab * np.abs(np.asarray(theta, dtype=float) - self.theta0)
        else:  # trig_tl
            raw = (
                self.c0
                + self.at * np.sin(self.wt * np.asarray(t, dtype=float))
                + self.al * np.cos(self.wl * np.asarray(l, dtype=float))
            )
        return _as_result(raw, shape)


_SPIN_FAMILIES = ("constant", "theta_mix", "l_decay_mix")


def _check_simplex_vector(w: np.ndarray, name: str, strict: bool = True) -> None:
    """Probability-vector sanity; anchors of interpolating families may touch
    the simplex boundary (strict=False) since only realized weights must stay
    above the declared floor, and those are checked at evaluation time."""
    if w.ndim != 1 or w.size < 2:
        raise ValueError(f"{name} must be a 1-D probability vector over >= 2 rays")
    floor_ok = np.all(w > 0.0) if strict else np.all(w >= 0.0)
    if abs(float(w.sum()) - 1.0) > SIMPLEX_TOL or not floor_ok:
        raise ValueError(f"{name} must have nonnegative entries summing to 1, got {w.tolist()}")


@dataclass(frozen=True)
class SpinningMeasure:
    """Junction scattering distribution S(t, l, theta) over the rays.

    Evaluation broadcasts (t, l, theta) to a common shape ``s`` and returns an
    array of shape ``s + (ray_count,)`` whose last axis is a probability vector.
    """

    family: str
    weights: np.ndarray | None = None    # constant
    weights_a: np.ndarray | None = None  # theta_mix / l_decay_mix endpoints
    weights_b: np.ndarray | None = None
    l_scale: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in _SPIN_FAMILIES:
            raise ValueError(f"unknown spinning family {self.family!r}; choose from {_SPIN_FAMILIES}")
        if self.family == "constant":
            if self.weights is None:
                raise ValueError("constant spinning measure needs 'weights'")
            object.__setattr__(self, "weights", _freeze(self.weights))
            _check_simplex_vector(self.weights, "weights")
        else:
            if self.weights_a is None or self.weights_b is None:
                raise ValueError(f"{self.family} spinning measure needs 'weights_a' and 'weights_b'")
            object.__setattr__(self, "weights_a", _freeze(self.weights_a))
            object.__setattr__(self, "weights_b", _freeze(self.weights_b))
            _check_simplex_vector(self.weights_a, "weights_a", strict=False)
            _check_simplex_vector(self.weights_b, "weights_b", strict=False)
            if self.weights_a.shape != self.weights_b.shape:
                raise ValueError("weights_a and weights_b must have the same length")
        if self.family == "l_decay_mix" and self.l_scale <= 0.0:
            raise ValueError("l_decay_mix needs l_scale > 0")
        if self.family != "l_decay_mix" and self.l_scale != 0.0:
            raise ValueError("l_scale is only used by the l_decay_mix family")

    @property
    def ray_count(self) -> int:
        w = self.weights if self.family == "constant" else self.weights_a
        return int(w.size)

    @property
    def depends_on_l(self) -> bool:
        return self.family == "l_decay_mix"

    @property
    def controlled(self) -> bool:
        return self.family == "theta_mix"

    def __call__(self, t, l, theta):
        shape = _bshape(t, l, theta)
        if self.family == "constant":
            return np.broadcast_to(self.weights, shape + (self.ray_count,))
        if self.family == "theta_mix":
            th = np.broadcast_to(np.asarray(theta, dtype=float), shape)[..., None]
            return th * self.weights_a + (1.0 - th) * self.weights_b
        # l_decay_mix
        w = np.broadcast_to(np.exp(-np.asarray(l, dtype=float) / self.l_scale), shape)[..., None]
        return self.weights_b + (self.weights_a - self.weights_b) * w


# ---------------------------------------------------------------------------
# control grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlSets:
    """Finite control grids: one beta grid per ray and one theta grid for the junction.

    Argmax ties are always resolved to the lowest grid index, so grid order is
    part of the contract; the constructors produce increasing grids.
    """

    ray_grids: tuple[np.ndarray, ...]
    vertex_grid: np.ndarray

    def __post_init__(self) -> None:
        grids = tuple(_freeze(g) for g in self.ray_grids)
        object.__setattr__(self, "ray_grids", grids)
        object.__setattr__(self, "vertex_grid", _freeze(self.vertex_grid))
        for g in grids + (self.vertex_grid,):
            if g.ndim != 1 or g.size == 0 or not np.all(np.isfinite(g)):
                raise ValueError("control grids must be non-empty finite 1-D arrays")

    @classmethod
    def uniform(
        cls,
        ray_count: int,
        beta_range: tuple[float, float] = (0.0, 0.0),
        n_beta: int = 1,
        theta_range: tuple[float, float] = (0.0, 0.0),
        n_theta: int = 1,
    ) -> "ControlSets":
        beta = np.linspace(beta_range[0], beta_range[1], n_beta)
        theta = np.linspace(theta_range[0], theta_range[1], n_theta)
        return cls(tuple(beta for _ in range(ray_count)), theta)

    def ray_grid(self, i: RayIndex) -> np.ndarray:
        return self.ray_grids[i - 1]


# ---------------------------------------------------------------------------
# problem data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientBounds:
    """Declared structural constants, checked empirically by validate_assumptions.

    sigma_lower is the ellipticity floor (> 0), spin_lower the uniform lower
    bound on every spinning weight (> 0); sigma_upper / drift_sup / cost_sup
    are sup bounds (cost_sup covers both the running and the junction reward);
    spin_upper caps both the sup and the (t, l) Lipschitz quotients of the
    spinning weights. lipschitz_bound, if given, caps the measured Lipschitz
    quotients of sigma/drift/costs; left None they are recorded only.
    """

    sigma_lower: float
    sigma_upper: float
    drift_sup: float
    cost_sup: float
    spin_lower: float
    spin_upper: float
    lipschitz_bound: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.sigma_lower <= self.sigma_upper):
            raise ValueError("need 0 < sigma_lower <= sigma_upper")
        if not (0.0 < self.spin_lower <= self.spin_upper):
            raise ValueError("need 0 < spin_lower <= spin_upper")
        if self.drift_sup < 0.0 or self.cost_sup < 0.0:
            raise ValueError("sup bounds must be >= 0")


def _per_ray(coeffs, ray_count: int, what: str) -> tuple:
    seq = tuple(coeffs) if isinstance(coeffs, (tuple, list)) else (coeffs,)
    if len(seq) == 1:
        seq = seq * ray_count
    if len(seq) != ray_count:
        raise ValueError(f"{what}: expected 1 or {ray_count} entries, got {len(seq)}")
    return seq


@dataclass(frozen=True)
class ProblemData:
    """A full problem instance on a star network with ``ray_count`` rays."""

    ray_count: int
    horizon: float
    sigma: tuple[RayCoefficient, ...]
    drift: tuple[RayCoefficient, ...]
    running_cost: tuple[RayCoefficient, ...]
    spin: SpinningMeasure
    vertex_cost: VertexCost
    terminal: tuple[TerminalPayoff, ...]
    bounds: CoefficientBounds

    def __post_init__(self) -> None:
        if int(self.ray_count) != self.ray_count or self.ray_count < 2:
            raise ValueError(f"need >= 2 rays, got {self.ray_count!r}")
        object.__setattr__(self, "ray_count", int(self.ray_count))
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon!r}")
        for name in ("sigma", "drift", "running_cost", "terminal"):
            object.__setattr__(self, name, _per_ray(getattr(self, name), self.ray_count, name))
        if self.spin.ray_count != self.ray_count:
            raise ValueError(
                f"spinning measure is over {self.spin.ray_count} rays, data has {self.ray_count}"
            )

    @property
    def depends_on_l(self) -> bool:
        """True if any coefficient (not the local-time bookkeeping) reads l."""
        ray_part = any(
            c.depends_on_l for c in self.sigma + self.drift + self.running_cost
        )
        return (
            ray_part
            or self.spin.depends_on_l
            or self.vertex_cost.depends_on_l
            or any(g.depends_on_l for g in self.terminal)
        )

    @property
    def depends_on_t(self) -> bool:
        return (
            any(c.depends_on_t for c in self.sigma + self.drift + self.running_cost)
            or self.vertex_cost.depends_on_t
        )


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------


def terminal_payoff(data: ProblemData, i: RayIndex, x: float, l: float) -> float:
    """Evaluate g_i(x, l); at the junction, enforce agreement across rays."""
    if not 1 <= i <= data.ray_count:
        raise ValueError(f"ray index {i} out of range 1..{data.ray_count}")
    if x == 0.0:
        vals = np.array([g(0.0, l) for g in data.terminal])
        if float(vals.max() - vals.min()) > CONTINUITY_TOL:
            raise ValueError(
                "terminal payoff is discontinuous at the junction: "
                f"values {vals.tolist()} at l={l}"
            )
    return float(data.terminal[i - 1](x, l))


def ray_hamiltonian(
    data: ProblemData,
    controls: ControlSets,
    i: RayIndex,
    t: float,
    x: float,
    l: float,
    p: float,
    M: float,
) -> tuple[float, float]:
    """max over the beta grid of 0.5*sigma^2*M + b*p + h, with its argmax.

    Ties go to the lowest grid index. ``p`` and ``M`` are the first/second
    space-derivative values the Hamiltonian is evaluated on.
    """
    grid = controls.ray_grid(i)
    sig = data.sigma[i - 1](t, x, l, grid)
    b = data.drift[i - 1](t, x, l, grid)
    h = data.running_cost[i - 1](t, x, l, grid)
    vals = 0.5 * np.asarray(sig) ** 2 * M + np.asarray(b) * p + np.asarray(h)
    k = int(np.argmax(vals))
    return float(vals[k]), float(grid[k])


def ray_hamiltonian_upwind(
    data: ProblemData,
    controls: ControlSets,
    i: RayIndex,
    t: float,
    x: float,
    l: float,
    p_fwd: float,
    p_bwd: float,
    M: float,
) -> tuple[float, float]:
    """Upwind form used by the marching scheme.

    Each candidate control uses the one-sided difference matching the sign of
    its own drift: H(beta) = 0.5 sigma^2 M + b+ * p_fwd - b- * p_bwd + h with
    b+ = max(b, 0), b- = max(-b, 0). This keeps every neighbor coefficient
    nonnegative, which is what the CFL bound of the grid guarantees stability
    and the discrete comparison principle against.
    """
    grid = controls.ray_grid(i)
    sig = np.asarray(data.sigma[i - 1](t, x, l, grid))
    b = np.asarray(data.drift[i - 1](t, x, l, grid))
    h = np.asarray(data.running_cost[i - 1](t, x, l, grid))
    vals = 0.5 * sig**2 * M + np.maximum(b, 0.0) * p_fwd - np.maximum(-b, 0.0) * p_bwd + h
    k = int(np.argmax(vals))
    return float(vals[k]), float(grid[k])


def kirchhoff_hamiltonian(
    data: ProblemData,
    controls: ControlSets,
    t: float,
    l: float,
    p: np.ndarray,
) -> tuple[float, float]:
    """max over the theta grid of sum_i S_i(t,l,theta) p_i + h0(t,l,theta).

    ``p`` holds one first-derivative value per ray. Every evaluation checks
    that the spinning weights are a probability vector (within 1e-12) with all
    entries >= the declared spin_lower, and fails loudly otherwise.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (data.ray_count,):
        raise ValueError(f"expected one derivative per ray, got shape {p.shape}")
    grid = controls.vertex_grid
    S = np.asarray(data.spin(t, l, grid))  # (n_theta, ray_count)
    sums = S.sum(axis=-1)
    if float(np.max(np.abs(sums - 1.0))) > SIMPLEX_TOL:
        raise ValueError(
            f"spinning weights do not sum to 1 within {SIMPLEX_TOL} at t={t}, l={l}"
        )
    if float(S.min()) < data.bounds.spin_lower:
        raise ValueError(
            f"spinning weight {float(S.min())} below declared lower bound "
            f"{data.bounds.spin_lower} at t={t}, l={l}"
        )
    h0 = np.asarray(data.vertex_cost(t, l, grid))
    vals = S @ p + h0
    k = int(np.argmax(vals))
    return float(vals[k]), float(grid[k])


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionEntry:
    condition: str
    measured: float
    declared: float | None
    satisfied: bool


@dataclass(frozen=True)
class AssumptionReport:
    """Empirical check of the structural assumptions on a tensor sample grid."""

    entries: tuple[AssumptionEntry, ...]

    @property
    def satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    def entry(self, condition: str) -> AssumptionEntry:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            mark = "ok  " if e.satisfied else "FAIL"
            decl = "-" if e.declared is None else f"{e.declared:.6g}"
            lines.append(f"[{mark}] {e.condition:<28s} measured={e.measured:.6g} declared={decl}")
        verdict = "all satisfied" if self.satisfied else "VIOLATIONS FOUND"
        lines.append(f"assumptions: {verdict}")
        return "\n".join(lines)


def _max_axis_quotient(values: np.ndarray, nodes: np.ndarray, axis: int) -> float:
    """Largest |difference quotient| of sampled values along one axis."""
    if values.shape[axis] < 2:
        return 0.0
    dv = np.abs(np.diff(values, axis=axis))
    dn = np.diff(nodes).reshape([-1 if a == axis else 1 for a in range(values.ndim)])
    return float((dv / dn).max())


def validate_assumptions(
    data: ProblemData,
    controls: ControlSets,
    x_max: float,
    l_max: float,
    n_samples: int = 9,
) -> AssumptionReport:
    """Sample all coefficients on a tensor grid and test the declared bounds.

    The grid is n_samples points per continuous axis (t in [0, horizon], x in
    [0, x_max], l in [0, l_max]) crossed with the full control grids. Sup
    bounds and lower bounds are compared against the declared constants;
    Lipschitz difference quotients along t/x/l are compared against
    lipschitz_bound when declared (recorded otherwise, and for the spinning
    weights always against spin_upper).
    """
    b = data.bounds
    ts = np.linspace(0.0, data.horizon, n_samples)
    xs = np.linspace(0.0, x_max, n_samples)
    ls = np.linspace(0.0, l_max, n_samples)

    # per-ray coefficient tensors, stacked over rays: (ray, t, x, l, beta)
    def tensor(coeffs):
        out = []
        for i in range(data.ray_count):
            grid = controls.ray_grids[i]
            vals = coeffs[i](
                ts[:, None, None, None], xs[None, :, None, None],
                ls[None, None, :, None], grid[None, None, None, :],
            )
            out.append(np.asarray(vals, dtype=float))
        return out

    sig = tensor(data.sigma)
    dri = tensor(data.drift)
    run = tensor(data.running_cost)
    th_grid = controls.vertex_grid
    h0 = np.asarray(
        data.vertex_cost(ts[:, None, None], ls[None, :, None], th_grid[None, None, :]),
        dtype=float,
    )
    S = np.asarray(
        data.spin(ts[:, None, None], ls[None, :, None], th_grid[None, None, :]),
        dtype=float,
    )  # (t, l, theta, ray)

    def sup(arrs) -> float:
        return float(max(np.abs(a).max() for a in arrs))

    def lip(arrs, which_axes) -> float:
        q = 0.0
        for a in arrs:
            for axis, nodes in which_axes:
                q = max(q, _max_axis_quotient(a, nodes, axis))
        return q

    txl = [(0, ts), (1, xs), (2, ls)]
    tl_vertex = [(0, ts), (1, ls)]

    entries = [
        AssumptionEntry(
            "A_simplex", float(np.abs(S.sum(axis=-1) - 1.0).max()), SIMPLEX_TOL,
            bool(np.abs(S.sum(axis=-1) - 1.0).max() <= SIMPLEX_TOL),
        ),
        AssumptionEntry(
            "A_spin_lower", float(S.min()), b.spin_lower, bool(S.min() >= b.spin_lower)
        ),
        AssumptionEntry(
            "E_ellipticity", float(min(a.min() for a in sig)), b.sigma_lower,
            bool(min(a.min() for a in sig) >= b.sigma_lower),
        ),
        AssumptionEntry(
            "R_i_drift_sup", sup(dri), b.drift_sup, bool(sup(dri) <= b.drift_sup)
        ),
        AssumptionEntry(
            "R_ii_sigma_sup", sup(sig), b.sigma_upper, bool(sup(sig) <= b.sigma_upper)
        ),
        AssumptionEntry(
            "R_iii_running_cost_sup", sup(run), b.cost_sup, bool(sup(run) <= b.cost_sup)
        ),
        AssumptionEntry(
            "R_iv_vertex_cost_sup", sup([h0]), b.cost_sup, bool(sup([h0]) <= b.cost_sup)
        ),
        AssumptionEntry(
            "R_v_spin_sup", float(S.max()), b.spin_upper, bool(S.max() <= b.spin_upper)
        ),
    ]
    lip_rows = [
        ("R_i_drift_lip", lip(dri, txl)),
        ("R_ii_sigma_lip", lip(sig, txl)),
        ("R_iii_running_cost_lip", lip(run, txl)),
        ("R_iv_vertex_cost_lip", lip([h0], tl_vertex)),
    ]
    for name, q in lip_rows:
        cap = b.lipschitz_bound
        entries.append(
            AssumptionEntry(name, q, cap, bool(math.isfinite(q)) if cap is None else q <= cap)
        )
    spin_lip = lip([np.moveaxis(S, -1, 0)[k] for k in range(data.ray_count)], tl_vertex)
    entries.append(
        AssumptionEntry("R_v_spin_lip", spin_lip, b.spin_upper, bool(spin_lip <= b.spin_upper))
    )
    return AssumptionReport(tuple(entries))


# ---------------------------------------------------------------------------
# instance catalog
# ---------------------------------------------------------------------------


def _even_weights(ray_count: int) -> np.ndarray:
    return np.full(ray_count, 1.0 / ray_count)


def reflecting_distance_payoff(
    ray_count: int = 2, sigma: float = 1.0, horizon: float = 1.0
) -> tuple[ProblemData, ControlSets]:
    """Uncontrolled instance: constant volatility, no costs, payoff g = x.

    The radial part is a reflecting diffusion, so the value has the closed
    form E|x + sigma*W_{T-t}| whatever the spinning measure is.
    """
    data = ProblemData(
        ray_count=ray_count,
        horizon=horizon,
        sigma=RayCoefficient("constant", c0=sigma),
        drift=RayCoefficient("constant"),
        running_cost=RayCoefficient("constant"),
        spin=SpinningMeasure("constant", weights=_even_weights(ray_count)),
        vertex_cost=VertexCost("constant"),
        terminal=TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(
            sigma_lower=sigma, sigma_upper=sigma, drift_sup=0.0, cost_sup=0.0,
            spin_lower=1.0 / ray_count, spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(ray_count)


def local_time_cost_instance(
    rate: float = 1.0, ray_count: int = 2, sigma: float = 1.0, horizon: float = 1.0
) -> tuple[ProblemData, ControlSets]:
    """Uncontrolled instance paying -rate per unit of junction local time.

    Zero terminal payoff; the value is -rate * E[local time to the horizon],
    which has the closed form -(E|x + sigma*W_{T-t}| - x).
    """
    data = ProblemData(
        ray_count=ray_count,
        horizon=horizon,
        sigma=RayCoefficient("constant", c0=sigma),
        drift=RayCoefficient("constant"),
        running_cost=RayCoefficient("constant"),
        spin=SpinningMeasure("constant", weights=_even_weights(ray_count)),
        vertex_cost=VertexCost("constant", c0=-rate),
        terminal=TerminalPayoff("constant"),
        bounds=CoefficientBounds(
            sigma_lower=sigma, sigma_upper=sigma, drift_sup=0.0, cost_sup=rate,
            spin_lower=1.0 / ray_count, spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(ray_count)


def controlled_drift_instance(
    ray_count: int = 2, horizon: float = 1.0, n_beta: int = 21
) -> tuple[ProblemData, ControlSets]:
    """Drift control beta in [-1, 1] with quadratic effort cost h = -beta^2."""
    data = ProblemData(
        ray_count=ray_count,
        horizon=horizon,
        sigma=RayCoefficient("constant", c0=1.0),
        drift=RayCoefficient("control_affine", cb=1.0),
        running_cost=RayCoefficient("control_quadratic", cb2=-1.0),
        spin=SpinningMeasure("constant", weights=_even_weights(ray_count)),
        vertex_cost=VertexCost("constant"),
        terminal=TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(
            sigma_lower=1.0, sigma_upper=1.0, drift_sup=1.0, cost_sup=1.0,
            spin_lower=1.0 / ray_count, spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(ray_count, beta_range=(-1.0, 1.0), n_beta=n_beta)


def spin_control_instance(
    horizon: float = 1.0, n_theta: int = 41
) -> tuple[ProblemData, ControlSets]:
    """Two rays with opposite payoff slopes; the junction control steers the
    scattering weights S = (theta, 1 - theta) over theta in [0.3, 0.7]."""
    data = ProblemData(
        ray_count=2,
        horizon=horizon,
        sigma=RayCoefficient("constant", c0=1.0),
        drift=RayCoefficient("constant"),
        running_cost=RayCoefficient("constant"),
        spin=SpinningMeasure(
            "theta_mix",
            weights_a=np.array([1.0, 0.0]),
            weights_b=np.array([0.0, 1.0]),
        ),
        vertex_cost=VertexCost("constant"),
        terminal=(TerminalPayoff("affine_x", cx=1.0), TerminalPayoff("affine_x", cx=-1.0)),
        bounds=CoefficientBounds(
            sigma_lower=1.0, sigma_upper=1.0, drift_sup=0.0, cost_sup=0.0,
            spin_lower=0.3, spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(2, theta_range=(0.3, 0.7), n_theta=n_theta)


def l_dependent_spin_instance(
    horizon: float = 1.0, l_scale: float = 2.0
) -> tuple[ProblemData, ControlSets]:
    """Three rays whose scattering weights relax from weights_a to weights_b
    as local time accumulates: S(l) = b + (a - b) exp(-l / l_scale)."""
    wa = np.array([0.7, 0.15, 0.15])
    wb = np.array([0.2, 0.4, 0.4])
    data = ProblemData(
        ray_count=3,
        horizon=horizon,
        sigma=RayCoefficient("constant", c0=1.0),
        drift=RayCoefficient("constant"),
        running_cost=RayCoefficient("constant"),
        spin=SpinningMeasure("l_decay_mix", weights_a=wa, weights_b=wb, l_scale=l_scale),
        vertex_cost=VertexCost("constant"),
        terminal=TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(
            sigma_lower=1.0, sigma_upper=1.0, drift_sup=0.0, cost_sup=0.0,
            spin_lower=0.15, spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(3)


def diffraction_instance(
    weights=(0.5, 0.3, 0.2), horizon: float = 1.0
) -> tuple[ProblemData, ControlSets]:
    """Uncontrolled three-ray spider with fixed scattering weights."""
    w = np.asarray(weights, dtype=float)
    data = ProblemData(
        ray_count=w.size,
        horizon=horizon,
        sigma=RayCoefficient("constant", c0=1.0),
        drift=RayCoefficient("constant"),
        running_cost=RayCoefficient("constant"),
        spin=SpinningMeasure("constant", weights=w),
        vertex_cost=VertexCost("constant"),
        terminal=TerminalPayoff("constant"),
        bounds=CoefficientBounds(
            sigma_lower=1.0, sigma_upper=1.0, drift_sup=0.0, cost_sup=0.0,
            spin_lower=float(w.min()), spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(w.size)


CATALOG: dict[str, Callable[..., tuple[ProblemData, ControlSets]]] = {
    "reflecting_distance_payoff": reflecting_distance_payoff,
    "local_time_cost": local_time_cost_instance,
    "controlled_drift": controlled_drift_instance,
    "spin_control": spin_control_instance,
    "l_dependent_spin": l_dependent_spin_instance,
    "diffraction": diffraction_instance,
}
