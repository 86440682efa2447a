"""Monotone explicit finite-difference solver for the junction HJB system.

The value u_i(t, x, l) on each ray solves, backward from the terminal payoff,

    du/dt + max_beta { 0.5 sigma^2 d2u/dx2 + b du/dx + h } = 0,   x > 0,

and at the junction the local-time condition

    du/dl + max_theta { sum_i S_i(t,l,theta) du_i/dx(t,0,l) + h0(t,l,theta) } = 0

couples the rays. The scheme marches one explicit Euler step at a time:
central second differences, one-sided first differences chosen per candidate
control by the sign of its drift (so every neighbor enters with a nonnegative
weight under the CFL bound dt <= dx^2/(sigma_upper^2 + drift_sup*dx)), a
ghost-node linear-extrapolation closure at x_max (d2u/dx2 = 0 there), and at
the junction a closed-form update per l level obtained from one-sided
differences in x and l. Because the spinning weights sum to one, the unknown
junction value enters every candidate theta with the same coefficient, so the
maximization decouples from the unknown and the update stays monotone:

    u(t,0,l) = [u(t,0,l+dl)/dl + Q] / (1/dl + 1/dx),
    Q = max_theta { sum_i S_i u_i(t,dx,l)/dx + h0 },

swept from l_max downward, seeded by the zero-slope closure
u(t,0,l_max) = dx * Q. The l axis enters ray updates only through coefficient
dependence; each l slice marches independently between junction sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ControlSets, ProblemData, kirchhoff_hamiltonian, terminal_payoff
from .network import RayIndex


class NumericalError(RuntimeError):
    """Raised when a solve goes numerically bad (NaN, CFL or stability breach)."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _cfl_limit(dx: float, sigma_upper: float, drift_sup: float) -> float:
    return dx * dx / (sigma_upper**2 + drift_sup * dx)


@dataclass(frozen=True)
class Grid:
    """Tensor grid for one solve; the CFL bound is enforced at construction.

    dt must satisfy dt <= dx^2 / (sigma_upper^2 + drift_sup*dx) for the
    declared coefficient bounds the grid was built against.
    """

    x_max: float
    n_x: int
    l_max: float
    n_l: int
    horizon: float
    n_t: int
    sigma_upper: float
    drift_sup: float
    cfl_safety: float = 0.9

    def __post_init__(self) -> None:
        if self.n_x < 3:
            raise ValueError("need n_x >= 3 (junction, one interior, one boundary node)")
        if self.n_l < 2:
            raise ValueError("need n_l >= 2 for the local-time axis")
        if self.n_t < 1:
            raise ValueError("need n_t >= 1")
        for name in ("x_max", "l_max", "horizon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must be in (0, 1]")
        limit = _cfl_limit(self.dx, self.sigma_upper, self.drift_sup)
        if self.dt > limit * (1.0 + 1e-12):
            raise ValueError(
                f"CFL violation: dt={self.dt:.3e} exceeds dx^2/(sigma^2+|b|dx)={limit:.3e}"
            )

    @property
    def dx(self) -> float:
        return self.x_max / (self.n_x - 1)

    @property
    def dl(self) -> float:
        return self.l_max / (self.n_l - 1)

    @property
    def dt(self) -> float:
        return self.horizon / self.n_t

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.n_x)

    @property
    def l_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.l_max, self.n_l)

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_t + 1)


def build_grid(
    data: ProblemData,
    x_max: float,
    n_x: int,
    l_max: float,
    n_l: int,
    cfl_safety: float = 0.9,
) -> Grid:
    """Pick n_t as the smallest step count whose dt clears the CFL bound
    scaled by cfl_safety, then snap dt = horizon/n_t."""
    dx = x_max / (n_x - 1)
    dt_max = cfl_safety * _cfl_limit(dx, data.bounds.sigma_upper, data.bounds.drift_sup)
    n_t = max(1, int(math.ceil(data.horizon / dt_max - 1e-12)))
    return Grid(
        x_max=x_max, n_x=n_x, l_max=l_max, n_l=n_l, horizon=data.horizon, n_t=n_t,
        sigma_upper=data.bounds.sigma_upper, drift_sup=data.bounds.drift_sup,
        cfl_safety=cfl_safety,
    )


@dataclass(frozen=True)
class ValueField:
    """Solved values on the grid. The junction value is stored once per
    (time, l) node and shared by all rays, so continuity at x=0 is structural.

    ray[i-1, k, m-1, n] holds u_i(t_k, x_m, l_n) for m >= 1; vertex[k, n]
    holds u(t_k, 0, l_n).
    """

    t_nodes: np.ndarray
    x_nodes: np.ndarray
    l_nodes: np.ndarray
    vertex: np.ndarray
    ray: np.ndarray

    def __post_init__(self) -> None:
        for name in ("t_nodes", "x_nodes", "l_nodes", "vertex", "ray"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        K, M, N = self.t_nodes.size, self.x_nodes.size, self.l_nodes.size
        if self.vertex.shape != (K, N):
            raise ValueError(f"vertex shape {self.vertex.shape} != {(K, N)}")
        if self.ray.shape[1:] != (K, M - 1, N):
            raise ValueError(f"ray shape {self.ray.shape} incompatible with nodes")

    @property
    def ray_count(self) -> int:
        return self.ray.shape[0]

    @property
    def full(self) -> np.ndarray:
        """Assembled (ray, t, x, l) array including the shared junction row."""
        cached = getattr(self, "_full", None)
        if cached is None:
            I, K, _, N = self.ray.shape
            cached = np.empty((I, K, self.x_nodes.size, N))
            cached[:, :, 0, :] = self.vertex
            cached[:, :, 1:, :] = self.ray
            cached.setflags(write=False)
            object.__setattr__(self, "_full", cached)
        return cached


@dataclass(frozen=True)
class FeedbackPolicy:
    """Argmax controls per grid node.

    ray_control[i-1, k, m, n] is the maximizing beta; the junction column
    m = 0 copies m = 1 (the ray Hamiltonian is not evaluated at x = 0, but
    simulations may look controls up arbitrarily close to it). The terminal
    level copies the last computed level. vertex_control[k, n] is the
    maximizing theta of the junction update.
    """

    t_nodes: np.ndarray
    x_nodes: np.ndarray
    l_nodes: np.ndarray
    ray_control: np.ndarray
    vertex_control: np.ndarray

    def __post_init__(self) -> None:
        for name in ("t_nodes", "x_nodes", "l_nodes", "ray_control", "vertex_control"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def ray_count(self) -> int:
        return self.ray_control.shape[0]

    def _node(self, t: float, x: float, l: float) -> tuple[int, int, int]:
        tn, xn, ln = self.t_nodes, self.x_nodes, self.l_nodes
        k = int(np.clip(round((t - tn[0]) / (tn[1] - tn[0])), 0, tn.size - 1)) if tn.size > 1 else 0
        m = int(np.clip(round(x / (xn[1] - xn[0])), 0, xn.size - 1))
        n = int(np.clip(round(l / (ln[1] - ln[0])), 0, ln.size - 1)) if ln.size > 1 else 0
        return k, m, n

    def ray_control_at(self, t: float, x: float, i: RayIndex, l: float) -> float:
        k, m, n = self._node(t, x, l)
        return float(self.ray_control[i - 1, k, m, n])

    def vertex_control_at(self, t: float, l: float) -> float:
        k, _, n = self._node(t, 0.0, l)
        return float(self.vertex_control[k, n])


def vertex_update(
    data: ProblemData,
    controls: ControlSets,
    t: float,
    l: float,
    u_ray_neighbors: np.ndarray,
    u_next_l: float | None,
    dx: float,
    dl: float,
) -> tuple[float, float]:
    """One junction node update at time t, local time l.

    u_ray_neighbors holds u_i(t, dx, l) per ray (already at the *new* time
    level); u_next_l is u(t, 0, l+dl), or None at the top of the l axis where
    the zero-slope closure applies. Returns (value, argmax theta).
    """
    p = np.asarray(u_ray_neighbors, dtype=float) / dx
    q, theta = kirchhoff_hamiltonian(data, controls, t, l, p)
    if u_next_l is None:
        return dx * q, theta
    val = (u_next_l / dl + q) / (1.0 / dl + 1.0 / dx)
    return val, theta


def _ray_coefficient_tensors(
    data: ProblemData,
    controls: ControlSets,
    i: RayIndex,
    t: float,
    x_eval: np.ndarray,
    l_nodes: np.ndarray,
):
    """Evaluate (0.5 sigma^2, b+, b-, h) on (l, beta, x) for one ray."""
    grid = controls.ray_grids[i - 1]
    X = x_eval[None, None, :]
    L = l_nodes[:, None, None]
    B = grid[None, :, None]
    sig = np.asarray(data.sigma[i - 1](t, X, L, B), dtype=float)
    b = np.asarray(data.drift[i - 1](t, X, L, B), dtype=float)
    h = np.asarray(data.running_cost[i - 1](t, X, L, B), dtype=float)
    shape = np.broadcast_shapes(sig.shape, b.shape, h.shape)
    return (
        np.broadcast_to(0.5 * sig * sig, shape),
        np.broadcast_to(np.maximum(b, 0.0), shape),
        np.broadcast_to(np.maximum(-b, 0.0), shape),
        np.broadcast_to(h, shape),
    )


def _terminal_level(data: ProblemData, x_nodes: np.ndarray, l_nodes: np.ndarray):
    """Terminal payoff on the grid, with the junction-continuity check."""
    vertex = np.array([terminal_payoff(data, 1, 0.0, float(l)) for l in l_nodes])
    ray = np.stack(
        [
            np.asarray(g(x_nodes[1:, None], l_nodes[None, :]), dtype=float)
            + np.zeros((x_nodes.size - 1, l_nodes.size))
            for g in data.terminal
        ]
    )
    return vertex, ray


class _BackwardMarcher:
    """Shared marching loop for the full system and the l-free variant."""

    def __init__(self, data: ProblemData, controls: ControlSets, grid: Grid, l_nodes: np.ndarray):
        self.data = data
        self.controls = controls
        self.grid = grid
        self.l_nodes = l_nodes
        self.x = grid.x_nodes
        self.dx = grid.dx
        self.dt = grid.dt
        # coefficient tensors are t-independent for most of the catalog; they
        # are built once here and rebuilt per step only when data reads t
        self._static = not data.depends_on_t
        self._tensors = None
        limit = _cfl_limit(self.dx, data.bounds.sigma_upper, data.bounds.drift_sup)
        if self.dt > limit * (1.0 + 1e-12):
            raise NumericalError(
                f"grid dt={self.dt:.3e} violates the CFL bound {limit:.3e} "
                "for this instance's declared coefficient bounds"
            )

    def tensors(self, t: float):
        if self._static and self._tensors is not None:
            return self._tensors
        x_eval = self.x[1:]  # interior nodes and the x_max boundary node
        out = [
            _ray_coefficient_tensors(self.data, self.controls, i, t, x_eval, self.l_nodes)
            for i in range(1, self.data.ray_count + 1)
        ]
        if self._static:
            self._tensors = out
        return out

    def step_ray(self, u_slice: np.ndarray, tens, beta_grid: np.ndarray):
        """March one ray one step backward; u_slice is (n_l, n_x) at the old
        level including the junction column. Returns new x>0 values and the
        argmax beta values, both (n_l, n_x-1)."""
        dx, dt = self.dx, self.dt
        half_sig2, bpos, bneg, h = tens
        d2 = (u_slice[:, :-2] - 2.0 * u_slice[:, 1:-1] + u_slice[:, 2:]) / (dx * dx)
        pf = (u_slice[:, 2:] - u_slice[:, 1:-1]) / dx
        pb = (u_slice[:, 1:-1] - u_slice[:, :-2]) / dx
        vals = (
            half_sig2[:, :, :-1] * d2[:, None, :]
            + bpos[:, :, :-1] * pf[:, None, :]
            - bneg[:, :, :-1] * pb[:, None, :]
            + h[:, :, :-1]
        )
        arg = vals.argmax(axis=1)
        new_int = u_slice[:, 1:-1] + dt * np.take_along_axis(vals, arg[:, None, :], 1)[:, 0, :]
        # ghost-node closure at x_max: linear extrapolation kills the second
        # difference and both one-sided slopes collapse to the inner one
        q = (u_slice[:, -1] - u_slice[:, -2]) / dx
        bvals = (bpos[:, :, -1] - bneg[:, :, -1]) * q[:, None] + h[:, :, -1]
        argb = bvals.argmax(axis=1)
        new_last = u_slice[:, -1] + dt * np.take_along_axis(bvals, argb[:, None], 1)[:, 0]
        new_vals = np.concatenate([new_int, new_last[:, None]], axis=1)
        new_beta = beta_grid[np.concatenate([arg, argb[:, None]], axis=1)]
        return new_vals, new_beta


def _stability_bound(data: ProblemData, grid: Grid, g_sup: float, t_back: float) -> float:
    # discrete counterpart of |u| <= |g| + T sup|h| + l_max sup|h0|; the dx
    # term accounts for the zero-slope closure at the top of the l axis
    c = data.bounds.cost_sup
    return g_sup + t_back * c + (grid.l_max + grid.dx) * c + 1e-9 * (1.0 + g_sup)


def _check_level(arrs, i_names, k: int, bound: float) -> None:
    for arr, where in zip(arrs, i_names):
        if np.isnan(arr).any():
            idx = np.argwhere(np.isnan(arr))[0]
            raise NumericalError(
                f"NaN at time level {k}, {where}, node index {tuple(int(j) for j in idx)}"
            )
        top = float(np.abs(arr).max())
        if top > bound:
            raise NumericalError(
                f"stability bound breached at time level {k}, {where}: "
                f"max|u|={top:.6g} > {bound:.6g}"
            )


def solve_backward(
    data: ProblemData, controls: ControlSets, grid: Grid
) -> tuple[ValueField, FeedbackPolicy]:
    """March the coupled system from the terminal payoff back to t = 0.

    Returns the value field and the argmax-control policy. Raises
    NumericalError on NaN, CFL violation against the instance bounds, or a
    breach of the stability bound |u| <= |g| + T sup|h| + (l_max+dx) sup|h0|.
    """
    I = data.ray_count
    l_nodes = grid.l_nodes
    marcher = _BackwardMarcher(data, controls, grid, l_nodes)
    x, t_nodes = grid.x_nodes, grid.t_nodes
    K, M, N = t_nodes.size, x.size, l_nodes.size
    dx, dl = grid.dx, grid.dl

    vertex = np.empty((K, N))
    ray = np.empty((I, K, M - 1, N))
    ray_ctrl = np.empty((I, K, M, N))
    vert_ctrl = np.empty((K, N))

    vertex[-1], ray[:, -1] = _terminal_level(data, x, l_nodes)
    g_sup = max(float(np.abs(ray[:, -1]).max()), float(np.abs(vertex[-1]).max()))

    u_slice = np.empty((N, M))
    for k in range(K - 2, -1, -1):
        t = float(t_nodes[k])
        tens = marcher.tensors(t)
        for i in range(1, I + 1):
            u_slice[:, 0] = vertex[k + 1]
            u_slice[:, 1:] = ray[i - 1, k + 1].T
            new_vals, new_beta = marcher.step_ray(u_slice, tens[i - 1], controls.ray_grids[i - 1])
            ray[i - 1, k] = new_vals.T
            ray_ctrl[i - 1, k, 1:, :] = new_beta.T
        ray_ctrl[:, k, 0, :] = ray_ctrl[:, k, 1, :]
        # junction sweep, top of the l axis first
        neighbors = ray[:, k, 0, :]  # (I, N) values at x = dx
        for n in range(N - 1, -1, -1):
            nxt = None if n == N - 1 else float(vertex[k, n + 1])
            vertex[k, n], vert_ctrl[k, n] = vertex_update(
                data, controls, t, float(l_nodes[n]), neighbors[:, n], nxt, dx, dl
            )
        bound = _stability_bound(data, grid, g_sup, float(t_nodes[-1] - t_nodes[k]))
        _check_level((ray[:, k], vertex[k]), ("ray values", "junction values"), k, bound)

    ray_ctrl[:, -1] = ray_ctrl[:, -2]
    vert_ctrl[-1] = vert_ctrl[-2]
    field = ValueField(t_nodes, x, l_nodes, vertex, ray)
    policy = FeedbackPolicy(t_nodes, x, l_nodes, ray_ctrl, vert_ctrl)
    return field, policy


def _assert_l_free(data: ProblemData, x_max: float) -> None:
    if data.depends_on_l:
        raise ValueError("instance coefficients depend on l; use solve_backward")
    # sample a few l values as an independent confirmation of the family flags;
    # variation is measured along the l axis only
    ts = np.linspace(0.0, data.horizon, 3)
    xs = np.linspace(0.0, x_max, 5)
    ls = np.array([0.0, 0.731, 2.417])
    for i in range(data.ray_count):
        for coeff in (data.sigma[i], data.drift[i], data.running_cost[i]):
            vals = np.asarray(
                coeff(ts[:, None, None], xs[None, :, None], ls[None, None, :], 0.0)
            )
            if float(np.abs(np.diff(vals, axis=-1)).max()) > 1e-12:
                raise ValueError("sampled ray coefficients vary with l; use solve_backward")
        gv = np.asarray(data.terminal[i](xs[:, None], ls[None, :]))
        if float(np.abs(np.diff(gv, axis=-1)).max()) > 1e-12:
            raise ValueError("sampled terminal payoff varies with l; use solve_backward")
    sv = np.asarray(data.spin(ts[:, None, None], ls[None, :, None], np.array([0.0])[None, None, :]))
    hv = np.asarray(data.vertex_cost(ts[:, None, None], ls[None, :, None], 0.0))
    if float(np.abs(np.diff(sv, axis=1)).max()) > 1e-12 or (
        float(np.abs(np.diff(hv, axis=1)).max()) > 1e-12
    ):
        raise ValueError("sampled junction data vary with l; use solve_backward")


def solve_no_localtime(
    data: ProblemData, controls: ControlSets, grid: Grid
) -> tuple[ValueField, FeedbackPolicy]:
    """Solve the l-free reduction of the system (coefficients must not read l).

    The junction condition loses its dl term:
    u(t, 0) = max_theta { sum_i S_i(t, theta) u_i(t, dx) + dx*h0 } — the same
    formula as the zero-slope closure of the full sweep. The returned field
    has a single l node at 0.
    """
    _assert_l_free(data, grid.x_max)
    I = data.ray_count
    l_nodes = np.zeros(1)
    marcher = _BackwardMarcher(data, controls, grid, l_nodes)
    x, t_nodes = grid.x_nodes, grid.t_nodes
    K, M = t_nodes.size, x.size
    dx = grid.dx

    vertex = np.empty((K, 1))
    ray = np.empty((I, K, M - 1, 1))
    ray_ctrl = np.empty((I, K, M, 1))
    vert_ctrl = np.empty((K, 1))

    vertex[-1], ray[:, -1] = _terminal_level(data, x, l_nodes)
    g_sup = max(float(np.abs(ray[:, -1]).max()), float(np.abs(vertex[-1]).max()))

    u_slice = np.empty((1, M))
    for k in range(K - 2, -1, -1):
        t = float(t_nodes[k])
        tens = marcher.tensors(t)
        for i in range(1, I + 1):
            u_slice[:, 0] = vertex[k + 1]
            u_slice[:, 1:] = ray[i - 1, k + 1].T
            new_vals, new_beta = marcher.step_ray(u_slice, tens[i - 1], controls.ray_grids[i - 1])
            ray[i - 1, k] = new_vals.T
            ray_ctrl[i - 1, k, 1:, :] = new_beta.T
        ray_ctrl[:, k, 0, :] = ray_ctrl[:, k, 1, :]
        vertex[k, 0], vert_ctrl[k, 0] = vertex_update(
            data, controls, t, 0.0, ray[:, k, 0, 0], None, dx, grid.dl
        )
        bound = _stability_bound(data, grid, g_sup, float(t_nodes[-1] - t_nodes[k]))
        _check_level((ray[:, k], vertex[k]), ("ray values", "junction values"), k, bound)

    ray_ctrl[:, -1] = ray_ctrl[:, -2]
    vert_ctrl[-1] = vert_ctrl[-2]
    field = ValueField(t_nodes, x, l_nodes, vertex, ray)
    policy = FeedbackPolicy(t_nodes, x, l_nodes, ray_ctrl, vert_ctrl)
    return field, policy


# ---------------------------------------------------------------------------
# evaluation and serialization
# ---------------------------------------------------------------------------


def _bracket(nodes: np.ndarray, v: float, name: str) -> tuple[int, float]:
    lo, hi = float(nodes[0]), float(nodes[-1])
    slack = 1e-9 * max(1.0, abs(hi))
    if v < lo - slack or v > hi + slack:
        raise ValueError(f"{name}={v} outside the field domain [{lo}, {hi}]")
    v = min(max(v, lo), hi)
    step = (hi - lo) / (nodes.size - 1)
    j = min(int((v - lo) / step), nodes.size - 2)
    w = (v - (lo + j * step)) / step
    return j, w


def eval_value(field: ValueField, i: RayIndex, t: float, x: float, l: float) -> float:
    """Multilinear interpolation of u_i at (t, x, l); exact at grid nodes.

    Out-of-domain queries raise ValueError. Fields produced by the l-free
    solver have a single l node and ignore l.
    """
    if not 1 <= i <= field.ray_count:
        raise ValueError(f"ray index {i} out of range 1..{field.ray_count}")
    u = field.full[i - 1]
    k, wt = _bracket(field.t_nodes, float(t), "t")
    m, wx = _bracket(field.x_nodes, float(x), "x")
    if field.l_nodes.size == 1:
        plane = u[:, :, 0]
        v00, v01 = plane[k, m], plane[k, m + 1]
        v10, v11 = plane[k + 1, m], plane[k + 1, m + 1]
        return float(
            (1 - wt) * ((1 - wx) * v00 + wx * v01) + wt * ((1 - wx) * v10 + wx * v11)
        )
    n, wl = _bracket(field.l_nodes, float(l), "l")
    c = u[k : k + 2, m : m + 2, n : n + 2]
    wts = np.array([1 - wt, wt])
    wxs = np.array([1 - wx, wx])
    wls = np.array([1 - wl, wl])
    return float(np.einsum("a,b,c,abc->", wts, wxs, wls, c))


CSV_HEADER = "t,ray,x,l,value,control"


def export_value_csv(
    field: ValueField, policy: FeedbackPolicy, path, meta: dict | None = None
) -> None:
    """Write the field and policy as CSV: one row per (ray, t, x, l) node.

    Floats are written with repr (shortest round-trip), so import_value_csv
    reproduces the arrays bit-exactly. Junction rows repeat the shared value
    for each ray. Leading '#' lines carry grid metadata.
    """
    I = field.ray_count
    K, M, N = field.t_nodes.size, field.x_nodes.size, field.l_nodes.size
    lines = [
        f"# spiderhjb value field v1 ray_count={I} n_levels={K} n_x={M} n_l={N}",
    ]
    for key, val in (meta or {}).items():
        lines.append(f"# {key}={val}")
    lines.append(CSV_HEADER)
    # tolist() hands back Python floats, whose repr is the shortest exact form
    tn, xn, ln = field.t_nodes.tolist(), field.x_nodes.tolist(), field.l_nodes.tolist()
    vals = field.full.tolist()
    rctl = policy.ray_control.tolist()
    vctl = policy.vertex_control.tolist()
    for i in range(I):
        for k in range(K):
            for m in range(M):
                ctrl_row = vctl[k] if m == 0 else rctl[i][k][m]
                val_row = vals[i][k][m]
                for n in range(N):
                    lines.append(
                        f"{tn[k]!r},{i + 1},{xn[m]!r},{ln[n]!r},{val_row[n]!r},{ctrl_row[n]!r}"
                    )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_value_csv(path) -> tuple[ValueField, FeedbackPolicy]:
    """Rebuild (ValueField, FeedbackPolicy) from export_value_csv output."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("# spiderhjb value field v1"):
        raise ValueError(f"{path} is not a value-field CSV")
    dims = dict(tok.split("=") for tok in lines[0].split()[5:])
    I, K, M, N = (int(dims[k]) for k in ("ray_count", "n_levels", "n_x", "n_l"))
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    if rows[0] != CSV_HEADER:
        raise ValueError("missing column header")
    rows = rows[1:]
    if len(rows) != I * K * M * N:
        raise ValueError(f"expected {I * K * M * N} rows, found {len(rows)}")
    tv = np.empty(K)
    xv = np.empty(M)
    lv = np.empty(N)
    full = np.empty((I, K, M, N))
    ray_ctrl = np.empty((I, K, M, N))
    vert_ctrl = np.empty((K, N))
    r = 0
    for i in range(I):
        for k in range(K):
            for m in range(M):
                for n in range(N):
                    t_s, ray_s, x_s, l_s, v_s, c_s = rows[r].split(",")
                    r += 1
                    if int(ray_s) != i + 1:
                        raise ValueError(f"row {r}: ray order mismatch")
                    tv[k], xv[m], lv[n] = float(t_s), float(x_s), float(l_s)
                    full[i, k, m, n] = float(v_s)
                    if m == 0:
                        vert_ctrl[k, n] = float(c_s)
                        ray_ctrl[i, k, m, n] = float(c_s)
                    else:
                        ray_ctrl[i, k, m, n] = float(c_s)
    vertex = full[0, :, 0, :].copy()
    if np.any(full[:, :, 0, :] != vertex[None]):
        raise ValueError("junction rows disagree across rays")
    field = ValueField(tv, xv, lv, vertex, full[:, :, 1:, :].copy())
    # the m=0 ray-control column is a copy of m=1 by construction
    ray_ctrl[:, :, 0, :] = ray_ctrl[:, :, 1, :]
    policy = FeedbackPolicy(tv, xv, lv, ray_ctrl, vert_ctrl)
    return field, policy
