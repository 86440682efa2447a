"""Cross-verification harness.

Three kinds of evidence are confronted with each other:

* closed-form oracles (folded-normal means, the Tanaka identity, exit-time
  identities of the driftless walk),
* the finite-difference solver of :mod:`spiderhjb.hjb`,
* the Monte Carlo engine of :mod:`spiderhjb.simulate`.

Each check returns a :class:`CheckReport` whose pass flag is a pure function
of the recorded statistics, targets and tolerances, so a report can be
re-audited from its serialized form alone. Statistical gates use 3 standard
errors plus, where a discretized quantity is compared, an explicit
discretization allowance that is recorded in the report.

The module also houses the junction test-function gadget: a two-point BVP
solver for the parametric ODE family used to manufacture sub/supersolution
test functions near the vertex, whose local-time slope is a designed constant
that dominates an explicit error bound (`absorption_slope_bound`).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .hjb import Grid, NumericalError, build_grid, eval_value, solve_backward
from .model import ControlSets, ProblemData, terminal_payoff
from .network import NetworkPoint
from .simulate import (
    FirstPassageResult,
    SimConfig,
    constant_policy,
    batch_rewards,
    first_passage_ladder,
    occupation_below,
    run_to_time,
)

__all__ = [
    "CheckEntry",
    "CheckReport",
    "GadgetParams",
    "OdeTestFunction",
    "absorption_slope_bound",
    "check_comparison_monotonicity",
    "check_diffraction_law",
    "check_dpp",
    "check_localtime_rate",
    "check_nonstickiness",
    "check_truncation_robustness",
    "check_value_characterization",
    "export_check_csv",
    "reflected_bm_oracle",
    "scaled_drift_constants",
    "solve_ode_gadget",
    "summarize_reports",
]


# ---------------------------------------------------------------------------
# closed-form oracle
# ---------------------------------------------------------------------------


def reflected_bm_oracle(x: float, s: float, sigma: float = 1.0) -> tuple[float, float]:
    """Mean position and mean accrued local time of reflected Brownian motion
    started at x >= 0, run for time s, with volatility sigma.

    mean_position = E|x + sigma*W_s| by adaptive Gaussian quadrature (relative
    accuracy 1e-10); mean_local_time = mean_position - x by the Tanaka
    identity.
    """
    if not (x >= 0.0 and s > 0.0 and sigma > 0.0):
        raise ValueError(f"need x >= 0, s > 0, sigma > 0; got {(x, s, sigma)}")
    sd = sigma * math.sqrt(s)
    inv = 1.0 / math.sqrt(2.0 * math.pi)

    def integrand(z: float) -> float:
        return abs(x + sd * z) * math.exp(-0.5 * z * z) * inv

    kink = -x / sd  # the |.| kink in standardized coordinates
    opts = dict(epsabs=1e-15, epsrel=1e-12, limit=200)
    if -38.0 < kink < 0.0:
        mean_pos = (
            integrate.quad(integrand, -np.inf, kink, **opts)[0]
            + integrate.quad(integrand, kink, np.inf, **opts)[0]
        )
    else:
        # kink in the negligible tail (or x = 0): integrand smooth in effect
        mean_pos = integrate.quad(integrand, -np.inf, np.inf, **opts)[0]
    return mean_pos, mean_pos - x


# ---------------------------------------------------------------------------
# check reports
# ---------------------------------------------------------------------------


def _entry_passes(statistic: float, target: float, tolerance: float, mode: str) -> bool:
    if mode == "abs":
        return abs(statistic - target) <= tolerance
    if mode == "le":
        return statistic <= target + tolerance
    if mode == "ge":
        return statistic >= target - tolerance
    raise ValueError(f"unknown comparison mode {mode!r}")


@dataclass(frozen=True)
class CheckEntry:
    """One gated statistic: passes iff the statistic meets the target within
    the tolerance under the comparison mode (abs / le / ge)."""

    entry_id: str
    statistic: float
    target: float
    tolerance: float
    mode: str = "abs"

    def __post_init__(self) -> None:
        if self.mode not in ("abs", "le", "ge"):
            raise ValueError(f"unknown comparison mode {self.mode!r}")

    @property
    def passed(self) -> bool:
        return _entry_passes(self.statistic, self.target, self.tolerance, self.mode)


@dataclass(frozen=True)
class CheckReport:
    """A named bundle of gated statistics plus run metadata (sample sizes,
    grids, seeds). The overall flag is the conjunction of the entries'."""

    check_id: str
    entries: tuple[CheckEntry, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, entry_id: str) -> CheckEntry:
        for e in self.entries:
            if e.entry_id == entry_id:
                return e
        raise KeyError(entry_id)

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            verdict = "PASS" if e.passed else "FAIL"
            lines.append(
                f"{verdict} {self.check_id}.{e.entry_id}: "
                f"statistic={e.statistic:.6g} target={e.target:.6g} "
                f"tolerance={e.tolerance:.3g} ({e.mode})"
            )
        return "\n".join(lines)


CHECK_CSV_HEADER = "id,statistic,target,tolerance,pass,mode"


def export_check_csv(reports, path, header_lines=()) -> None:
    """One CSV row per gated entry, id-qualified as check.entry; floats use
    repr so re-reading reproduces them exactly. Extra '#' header lines (e.g.
    the config hash) go first."""
    lines = [f"# {h}" for h in header_lines]
    lines.append(CHECK_CSV_HEADER)
    for rep in reports:
        for e in rep.entries:
            lines.append(
                f"{rep.check_id}.{e.entry_id},{e.statistic!r},{e.target!r},"
                f"{e.tolerance!r},{str(e.passed).lower()},{e.mode}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summarize_reports(reports) -> str:
    blocks = [rep.summary() for rep in reports]
    n_fail = sum(not rep.passed for rep in reports)
    verdict = "ALL CHECKS PASSED" if n_fail == 0 else f"{n_fail} CHECK(S) FAILED"
    return "\n".join(blocks + [verdict])


# ---------------------------------------------------------------------------
# statistical checks (Monte Carlo against known laws of the process)
# ---------------------------------------------------------------------------


_VERTEX = NetworkPoint(0.0, 1)


def check_diffraction_law(
    data: ProblemData,
    t0: float,
    l0: float,
    delta_list,
    n_paths: int,
    seed: int,
    *,
    dt: float = 1e-4,
    policy=None,
    t_cap: float | None = None,
) -> CheckReport:
    """Hitting-ray frequencies at small radii against the spinning weights.

    Paths start at the vertex; for each radius delta in the (decreasing) list
    the ray at the first crossing is tallied. Gates: at the smallest delta
    every frequency is within 3 binomial SE of S_i(t0, l0, theta*); deviations
    do not grow (within paired 3-SE slack) as delta shrinks, for a majority of
    rays; censoring by the time cap stays below 1%.
    """
    deltas = np.asarray(sorted(set(float(d) for d in delta_list)), dtype=float)
    if deltas.size == 0 or deltas[0] <= 0:
        raise ValueError("delta_list must contain positive radii")
    if policy is None:
        policy = constant_policy(data, ControlSets.uniform(data.ray_count))
    theta = float(policy.vertex_control[0, 0])
    weights = np.asarray(data.spin(t0, l0, theta), dtype=float)
    I = data.ray_count
    config = SimConfig(dt=dt, n_paths=n_paths, seed=seed)
    fp = first_passage_ladder(data, policy, (t0, _VERTEX, l0), config, deltas, t_cap)

    freq = np.full((deltas.size, I), np.nan)
    censor = np.empty(deltas.size)
    for r in range(deltas.size):
        hit = fp.hit[:, r]
        censor[r] = 1.0 - hit.mean()
        if hit.any():
            rays = fp.ray[hit, r]
            freq[r] = [(rays == i + 1).mean() for i in range(I)]
    se = np.sqrt(weights * (1.0 - weights) / n_paths)

    entries = []
    small = 0  # deltas sorted ascending: index 0 is the smallest radius
    for i in range(I):
        entries.append(
            CheckEntry(
                f"freq_ray{i + 1}_delta{deltas[small]:g}",
                float(freq[small, i]),
                float(weights[i]),
                float(3.0 * se[i]),
            )
        )
    # trend: walking the ladder downward, per-ray deviations should not grow
    # beyond paired sampling noise; a majority of rays must comply
    ok = 0
    for i in range(I):
        d = np.abs(freq[:, i] - weights[i])
        slack = 3.0 * math.sqrt(2.0) * se[i]
        if np.all(d[:-1] <= d[1:] + slack):
            ok += 1
    entries.append(CheckEntry("trend_majority", ok / I, 0.5, 0.0, mode="ge"))
    entries.append(CheckEntry("max_censoring", float(censor.max()), 0.0, 0.01, mode="le"))
    meta = {
        "deltas": deltas.tolist(),
        "frequencies": freq.tolist(),
        "weights": weights.tolist(),
        "censoring": censor.tolist(),
        "n_paths": n_paths,
        "dt": dt,
        "seed": seed,
        "theta": theta,
    }
    return CheckReport("diffraction_law", entries, meta)


def check_nonstickiness(
    data: ProblemData,
    start: tuple[float, NetworkPoint, float],
    eps_list,
    n_paths: int,
    seed: int,
    *,
    dt: float = 1e-4,
    policy=None,
) -> CheckReport:
    """Mean occupation time of {x < eps} scales linearly in eps.

    m(eps)/eps must have max/min ratio <= 2 across the ladder, after dropping
    radii below the scheme-resolution floor 5*sigma_upper*sqrt(dt).
    """
    eps = np.asarray(sorted(set(float(e) for e in eps_list)), dtype=float)
    if eps.size == 0 or eps[0] <= 0:
        raise ValueError("eps_list must contain positive radii")
    if policy is None:
        policy = constant_policy(data, ControlSets.uniform(data.ray_count))
    t0 = float(start[0])
    config = SimConfig(dt=dt, n_paths=n_paths, seed=seed)
    frac = occupation_below(data, policy, start, config, eps)
    span = data.horizon - t0
    m = frac.mean(axis=0) * span
    floor = 5.0 * data.bounds.sigma_upper * math.sqrt(dt)
    kept = eps >= floor
    entries = [CheckEntry("kept_radii", float(kept.sum()), 2.0, 0.0, mode="ge")]
    if kept.sum() >= 2:
        ratios = m[kept] / eps[kept]
        entries.append(
            CheckEntry("linear_ratio_spread", float(ratios.max() / ratios.min()), 2.0, 0.0, "le")
        )
    meta = {
        "eps": eps.tolist(),
        "occupation_time": m.tolist(),
        "per_eps_ratio": (m / eps).tolist(),
        "resolution_floor": floor,
        "n_paths": n_paths,
        "dt": dt,
        "seed": seed,
    }
    return CheckReport("nonstickiness", entries, meta)


def check_localtime_rate(
    data: ProblemData,
    t_star: float,
    l_star: float,
    h_list,
    n_paths: int,
    seed: int,
    *,
    dt: float = 2.5e-5,
    t_cap: float | None = None,
    policy=None,
) -> CheckReport:
    """Local-time and exit-time rates at the first crossing of radius h.

    From the vertex, r(h) = mean(l(tau_h) - l_star)/h must be 1 within 5%
    (plus 3 SE) and q(h) = mean(tau_h - t_star)/h^2 must be 1 within 10%
    (plus 3 SE), for each rung; censoring by the time cap must stay below 1%.
    For the driftless unit-volatility spider both targets are exact
    identities of the continuum process (optional stopping of x - l and of
    x^2 - t).
    """
    hs = np.asarray(sorted(set(float(h) for h in h_list)), dtype=float)
    if hs.size == 0 or hs[0] <= 0:
        raise ValueError("h_list must contain positive radii")
    if policy is None:
        policy = constant_policy(data, ControlSets.uniform(data.ray_count))
    config = SimConfig(dt=dt, n_paths=n_paths, seed=seed)
    fp = first_passage_ladder(data, policy, (t_star, _VERTEX, l_star), config, hs, t_cap)

    entries = []
    stats = []
    worst_censor = 0.0
    for r, h in enumerate(hs):
        hit = fp.hit[:, r]
        worst_censor = max(worst_censor, 1.0 - float(hit.mean()))
        lgain = fp.l[hit, r] - l_star
        tgain = fp.t[hit, r] - t_star
        n = int(hit.sum())
        rate = float(lgain.mean() / h)
        se_r = float(lgain.std(ddof=1) / (h * math.sqrt(n)))
        qv = float(tgain.mean() / h**2)
        se_q = float(tgain.std(ddof=1) / (h**2 * math.sqrt(n)))
        entries.append(CheckEntry(f"r_h{h:g}", rate, 1.0, 0.05 + 3.0 * se_r))
        entries.append(CheckEntry(f"q_h{h:g}", qv, 1.0, 0.10 + 3.0 * se_q))
        stats.append({"h": float(h), "r": rate, "se_r": se_r, "q": qv, "se_q": se_q, "n": n})
    entries.append(CheckEntry("max_censoring", worst_censor, 0.0, 0.01, mode="le"))
    meta = {"rungs": stats, "n_paths": n_paths, "dt": dt, "seed": seed}
    return CheckReport("localtime_rate", entries, meta)


# ---------------------------------------------------------------------------
# PDE <-> Monte Carlo cross-checks
# ---------------------------------------------------------------------------


def check_value_characterization(
    data: ProblemData,
    controls: ControlSets,
    grid: Grid,
    sim_config: SimConfig,
    probe_states,
    *,
    tol_disc: float,
    oracle=None,
    use_mc: bool = True,
) -> CheckReport:
    """Solve the system, then confront the value at each probe state with a
    Monte Carlo estimate under the extracted policy (gate: 3 SE + tol_disc)
    and/or a closed-form oracle(t, point, l) (gate: tol_disc).

    probe_states is a list of (t, NetworkPoint, l).
    """
    field_, policy = solve_backward(data, controls, grid)
    entries = []
    rows = []
    for j, (t, point, l) in enumerate(probe_states):
        u_pde = eval_value(field_, point.ray, t, point.x, l)
        row = {"probe": j, "t": t, "x": point.x, "ray": point.ray, "l": l, "u_pde": u_pde}
        if use_mc:
            cfg = dataclasses.replace(sim_config, seed=sim_config.seed + j)
            totals = batch_rewards(data, policy, (t, point, l), cfg)
            mc = float(np.mean(totals))
            se = float(np.std(totals, ddof=1) / math.sqrt(totals.size))
            entries.append(
                CheckEntry(f"probe{j}_mc_gap", abs(u_pde - mc), 0.0, 3.0 * se + tol_disc, "le")
            )
            row.update(u_mc=mc, mc_se=se)
        if oracle is not None:
            ref = float(oracle(t, point, l))
            entries.append(CheckEntry(f"probe{j}_oracle_gap", abs(u_pde - ref), 0.0, tol_disc, "le"))
            row.update(u_oracle=ref)
        rows.append(row)
    meta = {
        "probes": rows,
        "tol_disc": tol_disc,
        "n_paths": sim_config.n_paths if use_mc else 0,
        "dt": sim_config.dt,
        "seed": sim_config.seed,
        "grid": {"n_x": grid.n_x, "x_max": grid.x_max, "n_l": grid.n_l, "l_max": grid.l_max},
    }
    return CheckReport("value_characterization", entries, meta)


def check_dpp(
    data: ProblemData,
    controls: ControlSets,
    grid: Grid,
    sim_config: SimConfig,
    probe: tuple[float, NetworkPoint, float],
    stop_spec: tuple[str, float],
    *,
    tol_disc: float,
) -> CheckReport:
    """Dynamic-programming consistency at one probe state.

    The solved value at the probe is compared with the Monte Carlo estimate of
    [running reward to the stop] + [value at the stopped state], the value
    re-read from the solved field by interpolation. stop_spec is ("time", s)
    for a deterministic stop at time s, or ("radius", h) for the first
    crossing of radius h (capped at the horizon, where the terminal payoff
    takes over). Gate: 3 SE + tol_disc.
    """
    kind, level = stop_spec
    t0, point, l0 = probe
    field_, policy = solve_backward(data, controls, grid)
    u_probe = eval_value(field_, point.ray, t0, point.x, l0)

    if kind == "time":
        if not t0 < level < data.horizon:
            raise ValueError("deterministic stop must lie strictly inside (t0, horizon)")
        states = run_to_time(data, policy, probe, sim_config, float(level))
        vals = states["reward"].copy()
        for j in range(sim_config.n_paths):
            vals[j] += eval_value(
                field_, int(states["ray"][j]), float(level), float(states["x"][j]),
                float(states["l"][j]),
            )
    elif kind == "radius":
        fp = first_passage_ladder(
            data, policy, probe, sim_config, np.array([float(level)]), t_cap=data.horizon
        )
        vals = fp.reward[:, 0].copy()
        for j in range(sim_config.n_paths):
            if fp.hit[j, 0]:
                vals[j] += eval_value(
                    field_, int(fp.ray[j, 0]), float(fp.t[j, 0]), float(fp.x[j, 0]),
                    float(fp.l[j, 0]),
                )
            else:
                # stopped by the horizon: the terminal payoff is the value
                vals[j] += terminal_payoff(
                    data, int(fp.ray[j, 0]), float(fp.x[j, 0]), float(fp.l[j, 0])
                )
    else:
        raise ValueError(f"stop_spec kind must be 'time' or 'radius', got {kind!r}")

    mc = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
    entries = [CheckEntry("dpp_gap", abs(u_probe - mc), 0.0, 3.0 * se + tol_disc, "le")]
    meta = {
        "probe": {"t": t0, "x": point.x, "ray": point.ray, "l": l0},
        "stop": {"kind": kind, "level": level},
        "u_pde": u_probe,
        "mc_mean": mc,
        "mc_se": se,
        "tol_disc": tol_disc,
        "n_paths": sim_config.n_paths,
        "dt": sim_config.dt,
        "seed": sim_config.seed,
    }
    return CheckReport("dpp", entries, meta)


def _shift_terminal(data: ProblemData, c0: float = 0.0, cx: float = 0.0) -> ProblemData:
    """Problem data with terminal payoff g_i replaced by g_i + c0 + cx*x."""
    new_terms = []
    for g in data.terminal:
        if cx != 0.0 and g.family == "constant":
            g = dataclasses.replace(g, family="affine_x")
        new_terms.append(dataclasses.replace(g, c0=g.c0 + c0, cx=g.cx + cx))
    return dataclasses.replace(data, terminal=tuple(new_terms))


def check_comparison_monotonicity(
    data: ProblemData,
    controls: ControlSets,
    grid: Grid,
    shift: float,
) -> CheckReport:
    """Discrete comparison: raising the terminal payoff by the constant
    shift > 0 raises the solved value at every node (zero tolerance), and the
    largest node-wise increase equals the shift to 1e-10 (no discounting)."""
    if not shift > 0.0:
        raise ValueError("shift must be > 0")
    base, _ = solve_backward(data, controls, grid)
    lifted, _ = solve_backward(_shift_terminal(data, c0=shift), controls, grid)
    diff_ray = lifted.ray - base.ray
    diff_vertex = lifted.vertex - base.vertex
    dmin = min(float(diff_ray.min()), float(diff_vertex.min()))
    dmax = max(float(diff_ray.max()), float(diff_vertex.max()))
    entries = [
        CheckEntry("node_ordering_min", dmin, 0.0, 0.0, mode="ge"),
        CheckEntry("max_difference", dmax, float(shift), 1e-10),
    ]
    meta = {
        "shift": shift,
        "grid": {"n_x": grid.n_x, "x_max": grid.x_max, "n_l": grid.n_l, "l_max": grid.l_max,
                 "n_t": grid.n_t},
    }
    return CheckReport("comparison_monotonicity", entries, meta)


def check_truncation_robustness(
    data: ProblemData,
    controls: ControlSets,
    grid: Grid,
    probe_states,
    *,
    rel_tol: float = 0.005,
    value_floor: float = 0.05,
) -> CheckReport:
    """Doubling the truncation radii must not move probe values.

    The domain is doubled in x_max and, separately, in l_max — keeping the
    mesh widths fixed (node counts scale with the lengths) — and the relative
    change of the value at each probe must stay below rel_tol. Relative
    changes are measured against max(|value|, value_floor) so near-zero
    values do not blow the quotient up.
    """
    base_field, _ = solve_backward(data, controls, grid)

    def doubled(axis: str) -> Grid:
        kw = dict(
            x_max=grid.x_max, n_x=grid.n_x, l_max=grid.l_max, n_l=grid.n_l,
            horizon=grid.horizon, n_t=grid.n_t, sigma_upper=grid.sigma_upper,
            drift_sup=grid.drift_sup, cfl_safety=grid.cfl_safety,
        )
        if axis == "x":
            kw["x_max"], kw["n_x"] = 2.0 * grid.x_max, 2 * (grid.n_x - 1) + 1
        else:
            kw["l_max"], kw["n_l"] = 2.0 * grid.l_max, 2 * (grid.n_l - 1) + 1
        return Grid(**kw)

    entries = []
    rows = []
    for axis in ("x", "l"):
        field2, _ = solve_backward(data, controls, doubled(axis))
        for j, (t, point, l) in enumerate(probe_states):
            v1 = eval_value(base_field, point.ray, t, point.x, l)
            v2 = eval_value(field2, point.ray, t, point.x, l)
            rel = abs(v2 - v1) / max(abs(v1), value_floor)
            entries.append(CheckEntry(f"double_{axis}_probe{j}", rel, 0.0, rel_tol, "le"))
            rows.append({"axis": axis, "probe": j, "base": v1, "doubled": v2})
    meta = {
        "probes": rows,
        "rel_tol": rel_tol,
        "value_floor": value_floor,
        "grid": {"n_x": grid.n_x, "x_max": grid.x_max, "n_l": grid.n_l, "l_max": grid.l_max},
    }
    return CheckReport("truncation_robustness", entries, meta)


# ---------------------------------------------------------------------------
# the junction test-function gadget
# ---------------------------------------------------------------------------


def scaled_drift_constants(
    lam: float, theta_level: float, sigma_lower: float, sigma_upper: float
) -> tuple[float, float]:
    """The pair of scaled constants entering the gadget ODEs: theta_level is
    weighted by whichever of 1/sigma_lower^2, 1/sigma_upper^2 makes the
    supersolution constant largest (and the subsolution one smallest)."""
    if theta_level > 0.0:
        return (
            lam * theta_level / sigma_lower**2,
            lam * theta_level / sigma_upper**2,
        )
    return (
        lam * theta_level / sigma_upper**2,
        lam * theta_level / sigma_lower**2,
    )


@dataclass(frozen=True)
class GadgetParams:
    """Inputs of the vertex test-function construction.

    lam is the exponential scaling rate, eps the ray truncation radius, kappa
    the half-width of the local-time window around l_star, eta the strictness
    margin, gamma the boundary depression. theta_level is the vertex level of
    the scaled difference variables; rho_super/rho_sub the scaled constants
    (see scaled_drift_constants). Boundary data: super_at_zero and
    sub_at_zero anchor the x=0 condition; super_at_eps / sub_at_eps hold the
    per-ray x=eps anchors. slope_super/slope_sub are the designed local-time
    slopes (nonnegative).
    """

    lam: float
    eps: float
    kappa: float
    eta: float
    gamma: float
    theta_level: float
    rho_super: float
    rho_sub: float
    super_at_zero: float
    super_at_eps: tuple[float, ...]
    sub_at_zero: float
    sub_at_eps: tuple[float, ...]
    slope_super: float
    slope_sub: float
    l_star: float = 0.0

    def __post_init__(self) -> None:
        for name in ("lam", "eps", "kappa", "eta"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        if self.slope_super < 0.0 or self.slope_sub < 0.0:
            raise ValueError("local-time slopes must be >= 0")
        object.__setattr__(self, "super_at_eps", tuple(float(v) for v in self.super_at_eps))
        object.__setattr__(self, "sub_at_eps", tuple(float(v) for v in self.sub_at_eps))
        if len(self.super_at_eps) != len(self.sub_at_eps) or not self.super_at_eps:
            raise ValueError("per-ray boundary anchors must be non-empty and same length")

    @property
    def ray_count(self) -> int:
        return len(self.super_at_eps)


@dataclass(frozen=True)
class OdeTestFunction:
    """Solved gadget: per-ray values on the (x, l) window, the one-sided x
    derivative at the vertex, the designed (exact) local-time slope and the
    collocation residual of the x-profile."""

    which: str
    x_grid: np.ndarray
    l_grid: np.ndarray
    values: np.ndarray  # (ray, x, l)
    dx_at_zero: np.ndarray  # (ray,)
    dl_slope: float
    residual: float


def _solve_bvp_one_ray(
    a: float, c: float, rhs: float, bc0: float, bc1: float, x: np.ndarray, sign_outer: float
) -> tuple[np.ndarray, float]:
    """Solve -phi'' + a*phi + sign_outer*c*|phi'| = rhs on the grid x with
    Dirichlet ends, resolving |phi'| by fixed-point iteration on the sign
    pattern of the central differences. Returns (phi, residual)."""
    n = x.size
    dx = x[1] - x[0]
    m = n - 2  # interior unknowns
    phi = np.linspace(bc0, bc1, n)  # initial guess: the chord
    signs = np.zeros(m)
    for _ in range(100):
        # tridiagonal system for the interior values under the frozen signs
        coeff = sign_outer * c * signs / (2.0 * dx)
        lower = -1.0 / dx**2 - coeff  # multiplies phi_{j-1}
        main = np.full(m, 2.0 / dx**2 + a)
        upper = -1.0 / dx**2 + coeff  # multiplies phi_{j+1}
        b = np.full(m, rhs)
        b[0] -= lower[0] * bc0
        b[-1] -= upper[-1] * bc1
        ab = np.zeros((3, m))
        ab[0, 1:] = upper[:-1]
        ab[1] = main
        ab[2, :-1] = lower[1:]
        interior = solve_banded((1, 1), ab, b)
        new_phi = np.concatenate([[bc0], interior, [bc1]])
        new_signs = np.sign(new_phi[2:] - new_phi[:-2])
        done = np.array_equal(new_signs, signs)
        phi, signs = new_phi, new_signs
        if done:
            break
    else:
        raise NumericalError(
            "gadget sign pattern did not settle within 100 iterations; "
            "parameters are pathological"
        )
    dcen = (phi[2:] - phi[:-2]) / (2.0 * dx)
    res = (
        -(phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / dx**2
        + a * phi[1:-1]
        + sign_outer * c * np.abs(dcen)
        - rhs
    )
    return phi, float(np.abs(res).max())


def solve_ode_gadget(
    params: GadgetParams,
    bounds: tuple[float, float, float, float, float],
    which: str,
    n_x: int = 201,
    n_l: int = 5,
) -> OdeTestFunction:
    """Construct the super- or subsolution test function near the vertex.

    bounds = (sigma_upper, sigma_lower, drift_sup, cost_sup, horizon). The x
    profile solves, per ray, the two-point boundary-value problem

        (2 lam / sigma_upper^2) phi - phi'' +- 2(drift_sup |phi'| +
            e^{lam T} cost_sup)/sigma_lower^2  =  -(+) eta - 2 rho,

    ('+', '-eta', rho_super with boundary anchors super_at_zero /
    super_at_eps[i] - gamma for the supersolution; '-', '+eta', rho_sub with
    sub_at_zero / sub_at_eps[i] + gamma for the subsolution), and the
    local-time dependence is the designed affine extension
    phi(x, l) = phi(x, l_star) +- slope*(l - l_star), which meets the l-shifted
    boundary data exactly at every l and carries the constant vertex l-slope
    +slope_super (resp. -slope_sub). The |phi'| nonlinearity is resolved by
    fixed-point iteration on the sign pattern (error after 100 iterations).

    Raises NumericalError if the collocation residual exceeds 1e-8.
    """
    if which not in ("super", "sub"):
        raise ValueError("which must be 'super' or 'sub'")
    sigma_upper, sigma_lower, drift_sup, cost_sup, horizon = map(float, bounds)
    if min(sigma_upper, sigma_lower) <= 0 or min(drift_sup, cost_sup) < 0 or horizon <= 0:
        raise ValueError("bounds must be (sigma_upper>0, sigma_lower>0, |b|>=0, |h|>=0, T>0)")
    a = 2.0 * params.lam / sigma_upper**2
    c = 2.0 * drift_sup / sigma_lower**2
    forced = 2.0 * math.exp(params.lam * horizon) * cost_sup / sigma_lower**2
    if which == "super":
        sign_outer = 1.0
        rhs = -params.eta - 2.0 * params.rho_super - forced
        bc0 = params.super_at_zero
        bc_eps = [v - params.gamma for v in params.super_at_eps]
        slope = params.slope_super
    else:
        sign_outer = -1.0
        rhs = params.eta - 2.0 * params.rho_sub + forced
        bc0 = params.sub_at_zero
        bc_eps = [v + params.gamma for v in params.sub_at_eps]
        slope = -params.slope_sub

    x = np.linspace(0.0, params.eps, n_x)
    l_grid = np.linspace(params.l_star - params.kappa, params.l_star + params.kappa, n_l)
    profiles = np.empty((params.ray_count, n_x))
    dx0 = np.empty(params.ray_count)
    residual = 0.0
    dx = x[1] - x[0]
    for i in range(params.ray_count):
        phi, res = _solve_bvp_one_ray(a, c, rhs, bc0, float(bc_eps[i]), x, sign_outer)
        profiles[i] = phi
        dx0[i] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * dx)
        residual = max(residual, res)
    if residual > 1e-8:
        raise NumericalError(f"gadget collocation residual {residual:.3e} exceeds 1e-8")
    values = profiles[:, :, None] + slope * (l_grid - params.l_star)[None, None, :]
    return OdeTestFunction(
        which=which,
        x_grid=x,
        l_grid=l_grid,
        values=values,
        dx_at_zero=dx0,
        dl_slope=float(slope),
        residual=residual,
    )


def absorption_slope_bound(
    params: GadgetParams,
    bounds: tuple[float, float, float, float, float],
    which: str,
    dphi_sup: float,
    spin_sup: float,
) -> float:
    """The displayed lower bound that the designed local-time slope must
    dominate so the vertex condition's error is absorbed:

        eps * I * spin_sup * (|rho| + eta
                              + (|b| dphi_sup + e^{lam T} |h|) / sigma_lower).

    dphi_sup bounds |d_x phi| of the already-solved profile; spin_sup bounds
    the spinning weights.
    """
    sigma_upper, sigma_lower, drift_sup, cost_sup, horizon = map(float, bounds)
    rho = params.rho_super if which == "super" else params.rho_sub
    return (
        params.eps
        * params.ray_count
        * spin_sup
        * (
            abs(rho)
            + params.eta
            + (drift_sup * dphi_sup + math.exp(params.lam * horizon) * cost_sup) / sigma_lower
        )
    )
