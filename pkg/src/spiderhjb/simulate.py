"""Monte Carlo engine for the controlled spider diffusion.

Paths live on the star network: Euler increments along the current ray, and a
symmetrized reflection at the junction. With y = x + b dt + sigma sqrt(dt) Z:

* interior step (y > 0 and x > 0): the path stays on its ray at y;
* junction event (otherwise): the new position is |y|, the local time grows
  by |y| - y, and the ray is resampled from the spinning measure by inverse
  CDF on an independent uniform draw.

The increment |y| - y is the discrete Skorokhod regulator: x(k) minus the
accumulated increments minus l(k) stays a martingale, which is the
normalization under which the driftless unit-volatility walk satisfies
E[l(tau_h)] -> h (see spiderhjb.verify.check_localtime_rate). Rewards
accumulate h_i(t, x, l, beta) dt every step and h_0(t, l, theta) dL at
junction events, h_0 read at the pre-increment local time; the measure used
for ray selection is read at the post-increment local time.

Determinism: `simulate_path` derives a per-path stream by seeding numpy's
SeedSequence with the entropy pair (seed, path_index). The batch estimators
(`estimate_value`, `first_passage_ladder`, `occupation_below`) run fixed-size
chunks of paths in lockstep, chunk k seeded with (seed, TAG, first_path_index)
where TAG identifies the estimator; results are therefore bit-reproducible for
a given seed and independent of how chunks are distributed across workers, but
the batch estimators do not replay the same draws as the scalar loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hjb import FeedbackPolicy
from .model import ControlSets, ProblemData, terminal_payoff
from .network import NetworkPoint, RayIndex

# fixed lockstep chunk width; part of the reproducibility contract
CHUNK = 32768
_TAG_VALUE, _TAG_PASSAGE, _TAG_OCCUPATION = 0, 1, 2


class SimulationError(RuntimeError):
    """Raised when a path produces a non-finite state or draw."""


@dataclass(frozen=True)
class PathState:
    """One sampled point of a path: time, ray coordinate, accrued local time
    and running reward."""

    t: float
    x: float
    i: RayIndex
    l: float
    running_reward: float

    def __post_init__(self) -> None:
        if not (self.x >= 0.0 and self.l >= 0.0):
            raise ValueError(f"need x >= 0 and l >= 0, got x={self.x}, l={self.l}")
        if not all(map(math.isfinite, (self.t, self.x, self.l, self.running_reward))):
            raise ValueError("non-finite path state")


@dataclass(frozen=True)
class SpiderPath:
    """Ordered step-time samples of one path plus its terminal payoff."""

    states: tuple[PathState, ...]
    terminal_reward: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        prev = None
        for s in self.states:
            if prev is not None:
                if s.t < prev.t or s.l < prev.l:
                    raise ValueError("t and l must be nondecreasing along a path")
                if s.i != prev.i and not (s.l > prev.l or prev.x == 0.0):
                    raise ValueError("ray changed without a junction event")
            prev = s

    @property
    def total_reward(self) -> float:
        return self.states[-1].running_reward + self.terminal_reward


@dataclass(frozen=True)
class SimConfig:
    """Step size, path count and base seed.

    Per-path streams come from numpy SeedSequence entropy (seed, path_index);
    batch chunks from (seed, tag, chunk_start). See the module docstring.
    """

    dt: float
    n_paths: int
    seed: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt!r}")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class RewardSample:
    """Total discretized reward of one path: running costs, junction costs,
    terminal payoff."""

    total: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.total):
            raise ValueError("non-finite reward")


def constant_policy(
    data: ProblemData,
    controls: ControlSets,
    beta: float | tuple[float, ...] | None = None,
    theta: float | None = None,
) -> FeedbackPolicy:
    """A state-independent policy: each ray plays one beta, the junction one
    theta (defaults: the first point of each control grid). Useful for
    simulating uncontrolled instances without a solve."""
    if beta is None:
        betas = tuple(float(g[0]) for g in controls.ray_grids)
    elif np.isscalar(beta):
        betas = (float(beta),) * data.ray_count
    else:
        betas = tuple(float(b) for b in beta)
    th = float(controls.vertex_grid[0]) if theta is None else float(theta)
    t_nodes = np.array([0.0, data.horizon])
    ones = np.ones((2, 2, 2))
    ray_ctrl = np.stack([b * ones for b in betas])
    vert_ctrl = np.full((2, 2), th)
    return FeedbackPolicy(t_nodes, np.array([0.0, 1.0]), np.array([0.0, 1.0]), ray_ctrl, vert_ctrl)


# ---------------------------------------------------------------------------
# policy lookup and ray selection helpers (shared by scalar and batch paths)
# ---------------------------------------------------------------------------


def _axis_index(nodes: np.ndarray, v):
    if nodes.size == 1:
        return np.zeros(np.shape(v), dtype=np.intp)
    step = float(nodes[1] - nodes[0])
    idx = np.rint((np.asarray(v, dtype=float) - float(nodes[0])) / step).astype(np.intp)
    return np.clip(idx, 0, nodes.size - 1)


def _policy_beta(policy: FeedbackPolicy, t: float, x, ray, l) -> np.ndarray:
    k = _axis_index(policy.t_nodes, t)
    m = _axis_index(policy.x_nodes, x)
    n = _axis_index(policy.l_nodes, l)
    return policy.ray_control[np.asarray(ray) - 1, k, m, n]


def _policy_theta(policy: FeedbackPolicy, t: float, l) -> np.ndarray:
    k = _axis_index(policy.t_nodes, t)
    n = _axis_index(policy.l_nodes, l)
    return policy.vertex_control[k, n]


def _pick_rays(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF selection: weights is (n, I) rows on the simplex, u in
    [0,1); returns 1-based ray indices."""
    cdf = np.cumsum(weights, axis=-1)
    ray = (np.asarray(u)[..., None] >= cdf).sum(axis=-1) + 1
    return np.minimum(ray, weights.shape[-1])


# ---------------------------------------------------------------------------
# scalar stepping (reference implementation)
# ---------------------------------------------------------------------------


def step(
    state: PathState,
    policy: FeedbackPolicy,
    data: ProblemData,
    dt: float,
    gaussian_draw: float,
    uniform_draw: float,
) -> PathState:
    """Advance one path one Euler step; see the module docstring for the
    junction rules. The caller supplies the two draws."""
    if not (math.isfinite(gaussian_draw) and 0.0 <= uniform_draw < 1.0):
        raise SimulationError(
            f"bad draws: gaussian={gaussian_draw!r}, uniform={uniform_draw!r}"
        )
    t, x, i, l = state.t, state.x, state.i, state.l
    beta = float(_policy_beta(policy, t, x, i, l))
    b = float(data.drift[i - 1](t, x, l, beta))
    sig = float(data.sigma[i - 1](t, x, l, beta))
    h_run = float(data.running_cost[i - 1](t, x, l, beta))
    y = x + b * dt + sig * math.sqrt(dt) * gaussian_draw
    if not math.isfinite(y):
        raise SimulationError(f"non-finite position increment at t={t}")
    reward = state.running_reward + h_run * dt
    if y > 0.0 and x > 0.0:
        return PathState(t + dt, y, i, l, reward)
    # junction event: reflect, accrue local time, resample the ray
    dL = abs(y) - y
    theta = float(_policy_theta(policy, t, l))
    weights = np.asarray(data.spin(t, l + dL, theta), dtype=float)
    new_ray = int(_pick_rays(weights[None, :], np.array([uniform_draw]))[0])
    reward += float(data.vertex_cost(t, l, theta)) * dL
    return PathState(t + dt, abs(y), new_ray, l + dL, reward)


def _step_schedule(t0: float, horizon: float, dt: float) -> list[float]:
    span = horizon - t0
    n_full = int(math.floor(span / dt + 1e-12))
    rem = span - n_full * dt
    steps = [dt] * n_full
    if rem > 1e-12 * max(1.0, horizon):
        steps.append(rem)
    return steps


def simulate_path(
    data: ProblemData,
    policy: FeedbackPolicy,
    init: tuple[float, NetworkPoint, float],
    config: SimConfig,
    path_index: int = 0,
) -> tuple[SpiderPath, RewardSample]:
    """Run one path from init=(t0, point, l0) to the horizon on its own RNG
    stream and return the sampled path and its total reward."""
    t0, point, l0 = init
    if not t0 < data.horizon:
        raise ValueError(f"need t0 < horizon, got t0={t0}, horizon={data.horizon}")
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, path_index)))
    state = PathState(float(t0), float(point.x), int(point.ray), float(l0), 0.0)
    states = [state]
    for dt in _step_schedule(float(t0), data.horizon, config.dt):
        z = float(rng.standard_normal())
        u = float(rng.random())
        state = step(state, policy, data, dt, z, u)
        states.append(state)
    g = terminal_payoff(data, state.i, state.x, state.l)
    path = SpiderPath(tuple(states), float(g))
    return path, RewardSample(path.total_reward)


# ---------------------------------------------------------------------------
# lockstep batch engine
# ---------------------------------------------------------------------------


class _Batch:
    """Mutable lockstep state for a chunk of paths."""

    __slots__ = ("t", "x", "ray", "l", "reward", "rng", "data", "policy")

    def __init__(self, data, policy, t0, x0, ray0, l0, n, rng):
        self.data = data
        self.policy = policy
        self.t = float(t0)
        self.x = np.full(n, float(x0))
        self.ray = np.full(n, int(ray0), dtype=np.intp)
        self.l = np.full(n, float(l0))
        self.reward = np.zeros(n)
        self.rng = rng

    def compress(self, keep: np.ndarray) -> None:
        self.x = self.x[keep]
        self.ray = self.ray[keep]
        self.l = self.l[keep]
        self.reward = self.reward[keep]

    def advance(self, dt: float) -> None:
        data, policy = self.data, self.policy
        t, x, ray, l = self.t, self.x, self.ray, self.l
        n = x.size
        z = self.rng.standard_normal(n)
        beta = _policy_beta(policy, t, x, ray, l)
        b = np.empty(n)
        sig = np.empty(n)
        h = np.empty(n)
        for i in range(1, data.ray_count + 1):
            m = ray == i
            if not m.any():
                continue
            b[m] = data.drift[i - 1](t, x[m], l[m], beta[m])
            sig[m] = data.sigma[i - 1](t, x[m], l[m], beta[m])
            h[m] = data.running_cost[i - 1](t, x[m], l[m], beta[m])
        y = x + b * dt + sig * math.sqrt(dt) * z
        if not np.isfinite(y).all():
            raise SimulationError(f"non-finite position increment at t={t}")
        self.reward += h * dt
        ev = ~((y > 0.0) & (x > 0.0))
        if ev.any():
            idx = np.where(ev)[0]
            ye = y[idx]
            dL = np.abs(ye) - ye
            le = l[idx]
            theta = _policy_theta(policy, t, le)
            weights = np.asarray(data.spin(t, le + dL, theta), dtype=float)
            u = self.rng.random(idx.size)
            self.ray[idx] = _pick_rays(weights, u)
            self.reward[idx] += np.asarray(data.vertex_cost(t, le, theta), dtype=float) * dL
            self.l[idx] = le + dL
            y[idx] = np.abs(ye)
        self.x = y
        self.t = t + dt


def _chunk_starts(n_paths: int) -> list[tuple[int, int]]:
    return [(s, min(CHUNK, n_paths - s)) for s in range(0, n_paths, CHUNK)]


def _chunk_rng(seed: int, tag: int, start: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, tag, start)))


def batch_rewards(
    data: ProblemData,
    policy: FeedbackPolicy,
    init: tuple[float, NetworkPoint, float],
    config: SimConfig,
    chunks: list[tuple[int, int]] | None = None,
) -> np.ndarray:
    """Total reward of each path, run chunk-by-chunk in lockstep. `chunks`
    restricts the computation to a subset of the fixed chunk grid (used by the
    CLI to distribute chunks across workers)."""
    t0, point, l0 = init
    if not t0 < data.horizon:
        raise ValueError(f"need t0 < horizon, got t0={t0}, horizon={data.horizon}")
    schedule = _step_schedule(float(t0), data.horizon, config.dt)
    out = []
    for start, width in chunks if chunks is not None else _chunk_starts(config.n_paths):
        rng = _chunk_rng(config.seed, _TAG_VALUE, start)
        batch = _Batch(data, policy, t0, point.x, point.ray, l0, width, rng)
        for dt in schedule:
            batch.advance(dt)
        g = np.empty(width)
        for i in range(1, data.ray_count + 1):
            m = batch.ray == i
            if m.any():
                g[m] = data.terminal[i - 1](batch.x[m], batch.l[m])
        out.append(batch.reward + g)
    return np.concatenate(out)


def estimate_value(
    data: ProblemData,
    policy: FeedbackPolicy,
    init: tuple[float, NetworkPoint, float],
    config: SimConfig,
) -> tuple[float, float]:
    """Sample mean and standard error of the path reward from init."""
    if config.n_paths < 2:
        raise ValueError("estimate_value needs n_paths >= 2")
    totals = batch_rewards(data, policy, init, config)
    mean = float(np.mean(totals))
    se = float(np.std(totals, ddof=1) / math.sqrt(totals.size))
    return mean, se


def run_to_time(
    data: ProblemData,
    policy: FeedbackPolicy,
    init: tuple[float, NetworkPoint, float],
    config: SimConfig,
    t_end: float,
) -> dict[str, np.ndarray]:
    """Lockstep-advance config.n_paths paths from init to the fixed time t_end
    and return their states: arrays x, ray, l, reward (running reward only, no
    terminal payoff). Uses the same chunked streams as batch_rewards."""
    t0, point, l0 = init
    if not t0 < t_end <= data.horizon:
        raise ValueError("need t0 < t_end <= horizon")
    schedule = _step_schedule(float(t0), float(t_end), config.dt)
    out = {k: [] for k in ("x", "ray", "l", "reward")}
    for start, width in _chunk_starts(config.n_paths):
        rng = _chunk_rng(config.seed, _TAG_VALUE, start)
        batch = _Batch(data, policy, t0, point.x, point.ray, l0, width, rng)
        for dt in schedule:
            batch.advance(dt)
        out["x"].append(batch.x)
        out["ray"].append(batch.ray)
        out["l"].append(batch.l)
        out["reward"].append(batch.reward)
    return {k: np.concatenate(v) for k, v in out.items()}


@dataclass(frozen=True)
class FirstPassageResult:
    """Per-path state at the first crossing of each radius rung (or at the
    time cap for paths that never reached it; those rows have hit=False).

    Arrays have shape (n_paths, len(radii)).
    """

    radii: np.ndarray
    hit: np.ndarray
    t: np.ndarray
    x: np.ndarray
    ray: np.ndarray
    l: np.ndarray
    reward: np.ndarray

    def censored_fraction(self, rung: int) -> float:
        return float(1.0 - self.hit[:, rung].mean())


def first_passage_ladder(
    data: ProblemData,
    policy: FeedbackPolicy,
    init: tuple[float, NetworkPoint, float],
    config: SimConfig,
    radii,
    t_cap: float | None = None,
) -> FirstPassageResult:
    """Run paths from init until they cross each radius in the increasing
    ladder `radii` (or until t_cap, default the horizon), recording the state
    at each first crossing. A single step may cross several rungs at once;
    they all record the same state."""
    t0, point, l0 = init
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be a strictly increasing positive 1-D ladder")
    cap = data.horizon if t_cap is None else float(t_cap)
    if not t0 < cap:
        raise ValueError("need t0 < t_cap")
    R = radii.size
    n = config.n_paths
    res = {
        "hit": np.zeros((n, R), dtype=bool),
        "t": np.full((n, R), np.nan),
        "x": np.full((n, R), np.nan),
        "ray": np.zeros((n, R), dtype=np.intp),
        "l": np.full((n, R), np.nan),
        "reward": np.full((n, R), np.nan),
    }

    def record(rows, rung_cols, batch, members):
        res["hit"][rows, rung_cols] = True
        res["t"][rows, rung_cols] = batch.t
        res["x"][rows, rung_cols] = batch.x[members]
        res["ray"][rows, rung_cols] = batch.ray[members]
        res["l"][rows, rung_cols] = batch.l[members]
        res["reward"][rows, rung_cols] = batch.reward[members]

    for start, width in _chunk_starts(n):
        rng = _chunk_rng(config.seed, _TAG_PASSAGE, start)
        batch = _Batch(data, policy, t0, point.x, point.ray, l0, width, rng)
        orig = np.arange(start, start + width)
        rung = np.zeros(width, dtype=np.intp)
        # initial position may already clear some rungs
        while True:
            m = batch.x >= radii[np.minimum(rung, R - 1)]
            m &= rung < R
            if not m.any():
                break
            record(orig[m], rung[m], batch, m)
            rung[m] += 1
        if (rung < R).any():
            for dt in _step_schedule(float(t0), cap, config.dt):
                batch.advance(dt)
                while True:
                    m = batch.x >= radii[np.minimum(rung, R - 1)]
                    m &= rung < R
                    if not m.any():
                        break
                    record(orig[m], rung[m], batch, m)
                    rung[m] += 1
                keep = rung < R
                if not keep.any():
                    break
                if keep.size - keep.sum() > keep.size // 4:
                    batch.compress(keep)
                    orig = orig[keep]
                    rung = rung[keep]
        alive = rung < R
        if alive.any():
            # censored rows keep their state at the cap
            for r in range(R):
                m = alive & (rung <= r)
                if m.any():
                    rows = orig[m]
                    res["t"][rows, r] = batch.t
                    res["x"][rows, r] = batch.x[m]
                    res["ray"][rows, r] = batch.ray[m]
                    res["l"][rows, r] = batch.l[m]
                    res["reward"][rows, r] = batch.reward[m]
    return FirstPassageResult(radii, **res)


def occupation_below(
    data: ProblemData,
    policy: FeedbackPolicy,
    init: tuple[float, NetworkPoint, float],
    config: SimConfig,
    epsilons,
) -> np.ndarray:
    """Fraction of step-time samples each path spends at x < epsilon, for an
    increasing ladder of epsilons; shape (n_paths, len(epsilons)). The initial
    state is not counted."""
    t0, point, l0 = init
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or eps.size == 0 or np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    schedule = _step_schedule(float(t0), data.horizon, config.dt)
    out = np.empty((config.n_paths, eps.size))
    for start, width in _chunk_starts(config.n_paths):
        rng = _chunk_rng(config.seed, _TAG_OCCUPATION, start)
        batch = _Batch(data, policy, t0, point.x, point.ray, l0, width, rng)
        counts = np.zeros((width, eps.size), dtype=np.int64)
        for dt in schedule:
            batch.advance(dt)
            counts += batch.x[:, None] < eps[None, :]
        out[start : start + width] = counts / len(schedule)
    return out


def export_paths_csv(paths: list[SpiderPath], path, header_lines=()) -> None:
    """Concatenated CSV dump of sampled paths with a path-id column. Extra
    '#' header lines (e.g. a config hash) go first."""
    lines = [f"# {h}" for h in header_lines]
    lines.append("path,t,x,ray,l,running_reward")
    for pid, p in enumerate(paths):
        for s in p.states:
            lines.append(f"{pid},{s.t!r},{s.x!r},{s.i},{s.l!r},{s.running_reward!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
