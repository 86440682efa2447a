"""Cross-verification layer tests: the reflected-diffusion oracle against its
closed form, check-report bookkeeping and CSV export, the ODE test-function
construction against independent solutions, and two fast end-to-end checks."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spiderhjb.hjb import build_grid
from spiderhjb.model import reflecting_distance_payoff
from spiderhjb.network import NetworkPoint
from spiderhjb.verify import (
    CheckEntry,
    CheckReport,
    GadgetParams,
    absorption_slope_bound,
    check_comparison_monotonicity,
    check_truncation_robustness,
    export_check_csv,
    reflected_bm_oracle,
    scaled_drift_constants,
    solve_ode_gadget,
    summarize_reports,
)


def _abs_mean_closed_form(x: float, s: float, sigma: float) -> float:
    """E|x + sigma*W_s| via the error function (independent of the oracle's
    quadrature route)."""
    v = sigma * math.sqrt(s)
    return x * math.erf(x / (v * math.sqrt(2.0))) + v * math.sqrt(
        2.0 / math.pi
    ) * math.exp(-x * x / (2.0 * v * v))


# ---------------------------------------------------------------------------
# reflected-diffusion oracle
# ---------------------------------------------------------------------------


def test_oracle_from_origin_frozen():
    mean_pos, mean_lt = reflected_bm_oracle(0.0, 1.0)
    root = math.sqrt(2.0 / math.pi)
    assert mean_pos == pytest.approx(root, abs=1e-10)
    assert mean_lt == pytest.approx(root, abs=1e-10)


def test_oracle_agrees_with_error_function_route():
    x, s, sigma = 0.7, 0.9, 1.3
    mean_pos, mean_lt = reflected_bm_oracle(x, s, sigma)
    closed = _abs_mean_closed_form(x, s, sigma)
    assert mean_pos == pytest.approx(closed, abs=1e-9)
    assert mean_lt == pytest.approx(closed - x, abs=1e-9)


def test_oracle_short_horizon_continuity():
    mean_pos, mean_lt = reflected_bm_oracle(0.5, 1e-8)
    assert mean_pos == pytest.approx(0.5, abs=1e-6)
    assert mean_lt == pytest.approx(0.0, abs=1e-6)


def test_oracle_brownian_scaling():
    c = 2.0
    base_pos, base_lt = reflected_bm_oracle(0.3, 0.5, 1.1)
    scaled_pos, scaled_lt = reflected_bm_oracle(c * 0.3, c * c * 0.5, 1.1)
    assert scaled_pos == pytest.approx(c * base_pos, abs=1e-9)
    assert scaled_lt == pytest.approx(c * base_lt, abs=1e-9)


def test_oracle_rejects_bad_arguments():
    with pytest.raises(ValueError):
        reflected_bm_oracle(-0.1, 1.0)
    with pytest.raises(ValueError):
        reflected_bm_oracle(0.5, 0.0)
    with pytest.raises(ValueError):
        reflected_bm_oracle(0.5, 1.0, sigma=0.0)


# ---------------------------------------------------------------------------
# check entries and reports
# ---------------------------------------------------------------------------


def test_entry_modes_frozen():
    assert CheckEntry("a", 1.05, 1.0, 0.1, "abs").passed
    assert not CheckEntry("a", 1.2, 1.0, 0.1, "abs").passed
    assert CheckEntry("b", 0.9, 1.0, 0.0, "le").passed
    assert not CheckEntry("b", 1.1, 1.0, 0.05, "le").passed
    assert CheckEntry("c", 1.1, 1.0, 0.0, "ge").passed
    assert not CheckEntry("c", 0.9, 1.0, 0.05, "ge").passed


def test_entry_rejects_unknown_mode():
    with pytest.raises(ValueError, match="mode"):
        CheckEntry("a", 1.0, 1.0, 0.1, "近似")


@given(
    statistic=st.floats(-1e6, 1e6),
    target=st.floats(-1e6, 1e6),
    tolerance=st.floats(0.0, 1e6),
    mode=st.sampled_from(["abs", "le", "ge"]),
)
def test_entry_pass_is_rederivable(statistic, target, tolerance, mode):
    entry = CheckEntry("p", statistic, target, tolerance, mode)
    if mode == "abs":
        expected = abs(statistic - target) <= tolerance
    elif mode == "le":
        expected = statistic <= target + tolerance
    else:
        expected = statistic >= target - tolerance
    assert entry.passed == expected


def test_report_aggregation_and_lookup():
    good = CheckEntry("one", 1.0, 1.0, 0.1, "abs")
    bad = CheckEntry("two", 9.0, 1.0, 0.1, "abs")
    report = CheckReport("demo", (good, bad), meta={"n": 4})
    assert not report.passed
    assert report.entry("two").statistic == 9.0
    with pytest.raises(KeyError):
        report.entry("missing")
    text = report.summary()
    assert "PASS demo.one" in text
    assert "FAIL demo.two" in text
    all_good = CheckReport("demo2", (good,), meta={})
    assert "ALL CHECKS PASSED" in summarize_reports([all_good])
    assert "1 CHECK(S) FAILED" in summarize_reports([all_good, report])


def test_check_csv_rows_recompute(tmp_path):
    reports = [
        CheckReport(
            "alpha",
            (
                CheckEntry("x", 0.123456789012345, 0.12, 0.01, "abs"),
                CheckEntry("y", 2.0, 1.0, 0.0, "le"),
            ),
            meta={},
        ),
        CheckReport("beta", (CheckEntry("z", 5.0, 1.0, 0.0, "ge"),), meta={}),
    ]
    out = tmp_path / "checks.csv"
    export_check_csv(reports, out, header_lines=("config_sha256=00ff",))
    lines = out.read_text().splitlines()
    assert lines[0] == "# config_sha256=00ff"
    assert lines[1] == "id,statistic,target,tolerance,pass,mode"
    body = lines[2:]
    assert len(body) == 3
    for row in body:
        ident, stat, target, tol, ok, mode = row.split(",")
        stat, target, tol = float(stat), float(target), float(tol)
        if mode == "abs":
            expected = abs(stat - target) <= tol
        elif mode == "le":
            expected = stat <= target + tol
        else:
            expected = stat >= target - tol
        assert ok == ("true" if expected else "false")
    # repr round-trip keeps the statistic exact
    assert float(body[0].split(",")[1]) == 0.123456789012345


# ---------------------------------------------------------------------------
# ODE test-function gadget
# ---------------------------------------------------------------------------

PLAIN_BOUNDS = (1.0, 1.0, 0.0, 0.0, 1.0)  # sigma_upper, sigma_lower, |b|, |h|, T


def _gadget(**overrides):
    kw = dict(
        lam=1.0, eps=0.5, kappa=0.5, eta=0.4, gamma=0.0, theta_level=0.0,
        rho_super=0.0, rho_sub=0.2, super_at_zero=0.0, super_at_eps=(0.0, 0.0),
        sub_at_zero=0.0, sub_at_eps=(0.0, 0.0), slope_super=0.0, slope_sub=0.0,
    )
    kw.update(overrides)
    return GadgetParams(**kw)


def test_scaled_drift_constants_frozen():
    # positive level: the supersolution constant uses the smaller volatility
    assert scaled_drift_constants(2.0, 0.5, 0.5, 1.0) == (4.0, 1.0)
    assert scaled_drift_constants(2.0, -0.5, 0.5, 1.0) == (-1.0, -4.0)


def test_gadget_zero_forcing_gives_zero_function():
    # eta - 2*rho_sub = 0 with zero anchors: the subsolution profile vanishes
    params = _gadget(eta=0.4, rho_sub=0.2)
    fn = solve_ode_gadget(params, PLAIN_BOUNDS, "sub", n_x=101, n_l=3)
    assert np.all(fn.values == 0.0)
    assert np.all(fn.dx_at_zero == 0.0)
    assert fn.dl_slope == 0.0
    assert fn.residual <= 1e-12


def test_gadget_constant_solution_oracle():
    # with flat anchors at K = rhs/a and no drift term the solution is K
    lam, eta, rho = 1.0, 0.5, -1.25
    a = 2.0 * lam  # sigma_upper = 1
    K = (-eta - 2.0 * rho) / a  # = 1.0
    params = _gadget(
        lam=lam, eta=eta, rho_super=rho,
        super_at_zero=K, super_at_eps=(K, K), slope_super=0.25,
    )
    fn = solve_ode_gadget(params, PLAIN_BOUNDS, "super", n_x=161, n_l=5)
    profile = fn.values[:, :, fn.l_grid.size // 2]
    assert float(np.abs(profile - K).max()) <= 1e-10
    assert float(np.abs(fn.dx_at_zero).max()) <= 1e-8
    assert fn.dl_slope == 0.25
    # designed affine dependence on the local-time variable, exactly
    l_dev = fn.l_grid - params.l_star
    recon = profile[:, :, None] + 0.25 * l_dev[None, None, :]
    assert np.array_equal(fn.values, recon)


def test_gadget_matches_hyperbolic_closed_form():
    # no |phi'| term: -phi'' + a phi = rhs has a sinh/cosh solution
    lam, eta, rho, eps = 1.5, 0.3, 0.4, 0.5
    p0, p_eps = 0.2, -0.1
    params = _gadget(
        lam=lam, eps=eps, eta=eta, rho_super=rho,
        super_at_zero=p0, super_at_eps=(p_eps, p_eps),
    )
    fn = solve_ode_gadget(params, PLAIN_BOUNDS, "super", n_x=201, n_l=3)
    a = 2.0 * lam
    rhs = -eta - 2.0 * rho
    K = rhs / a
    r = math.sqrt(a)
    B = p0 - K
    A = (p_eps - K - B * math.cosh(r * eps)) / math.sinh(r * eps)
    x = fn.x_grid
    exact = K + A * np.sinh(r * x) + B * np.cosh(r * x)
    got = fn.values[0, :, fn.l_grid.size // 2]
    assert float(np.abs(got - exact).max()) <= 1e-5
    d_exact = A * r * math.cosh(0.0) + B * r * math.sinh(0.0)
    assert fn.dx_at_zero[0] == pytest.approx(d_exact, abs=1e-4)


def test_gadget_with_drift_meets_boundary_data():
    params = _gadget(
        eta=0.3, rho_super=0.1, gamma=0.05,
        super_at_zero=0.4, super_at_eps=(0.2, 0.6), slope_super=0.5,
    )
    bounds = (1.2, 0.8, 0.5, 0.25, 1.0)
    fn = solve_ode_gadget(params, bounds, "super", n_x=201, n_l=5)
    mid = fn.l_grid.size // 2
    assert fn.values[0, 0, mid] == 0.4
    assert fn.values[1, 0, mid] == 0.4
    # the eps anchors are met after the gamma depression
    assert fn.values[0, -1, mid] == pytest.approx(0.2 - 0.05, abs=1e-14)
    assert fn.values[1, -1, mid] == pytest.approx(0.6 - 0.05, abs=1e-14)
    assert fn.residual <= 1e-8
    # subsolution side flips the slope sign and raises the anchors
    sub = solve_ode_gadget(params, bounds, "sub", n_x=201, n_l=5)
    assert sub.dl_slope == 0.0
    assert sub.values[0, -1, mid] == pytest.approx(0.0 + 0.05, abs=1e-14)


def test_absorption_slope_bound_formula():
    params = _gadget(eps=0.3, eta=0.1, rho_super=0.2)
    bounds = (1.0, 0.8, 0.5, 0.4, 1.0)
    got = absorption_slope_bound(params, bounds, "super", dphi_sup=2.0, spin_sup=0.9)
    expected = 0.3 * 2 * 0.9 * (0.2 + 0.1 + (0.5 * 2.0 + math.e * 0.4) / 0.8)
    assert got == pytest.approx(expected, rel=1e-12)


def test_gadget_validation():
    with pytest.raises(ValueError, match="lam"):
        _gadget(lam=0.0)
    with pytest.raises(ValueError, match="gamma"):
        _gadget(gamma=-0.1)
    with pytest.raises(ValueError, match="slopes"):
        _gadget(slope_sub=-1.0)
    with pytest.raises(ValueError, match="anchors"):
        _gadget(super_at_eps=(0.0, 0.0, 0.0))
    with pytest.raises(ValueError, match="which"):
        solve_ode_gadget(_gadget(), PLAIN_BOUNDS, "mid")
    with pytest.raises(ValueError, match="bounds"):
        solve_ode_gadget(_gadget(), (1.0, 0.0, 0.0, 0.0, 1.0), "super")


# ---------------------------------------------------------------------------
# fast end-to-end checks
# ---------------------------------------------------------------------------


def test_comparison_check_passes_on_catalog_instance():
    data, controls = reflecting_distance_payoff()
    grid = build_grid(data, x_max=4.0, n_x=41, l_max=2.0, n_l=2)
    report = check_comparison_monotonicity(data, controls, grid, shift=0.25)
    assert report.passed
    assert report.entry("max_difference").statistic == pytest.approx(0.25, abs=1e-10)
    assert report.entry("node_ordering_min").statistic >= 0.0


def test_truncation_check_passes_on_catalog_instance():
    data, controls = reflecting_distance_payoff()
    grid = build_grid(data, x_max=4.0, n_x=21, l_max=2.0, n_l=2)
    probes = [(0.0, NetworkPoint(0.0, 1), 0.0), (0.0, NetworkPoint(1.0, 1), 0.0)]
    report = check_truncation_robustness(data, controls, grid, probes)
    assert report.passed
    assert {e.entry_id for e in report.entries} == {
        "double_x_probe0", "double_x_probe1", "double_l_probe0", "double_l_probe1",
    }
