"""Finite-difference solver tests: grid/CFL accounting, the junction update
in closed form, exact fixed points, accuracy against a reflected-diffusion
benchmark, the l-free reduction, interpolation, and CSV round-trips."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spiderhjb.hjb import (
    Grid,
    NumericalError,
    build_grid,
    eval_value,
    export_value_csv,
    import_value_csv,
    solve_backward,
    solve_no_localtime,
    vertex_update,
)
from spiderhjb.model import (
    CATALOG,
    CoefficientBounds,
    ControlSets,
    ProblemData,
    RayCoefficient,
    SpinningMeasure,
    TerminalPayoff,
    VertexCost,
    reflecting_distance_payoff,
)


def _constant_instance(sigma=1.0, g0=2.5):
    data = ProblemData(
        ray_count=2,
        horizon=1.0,
        sigma=RayCoefficient("constant", c0=sigma),
        drift=RayCoefficient("constant", c0=0.0),
        running_cost=RayCoefficient("constant", c0=0.0),
        spin=SpinningMeasure("constant", weights=np.array([0.5, 0.5])),
        vertex_cost=VertexCost("constant", c0=0.0),
        terminal=TerminalPayoff("constant", c0=g0),
        bounds=CoefficientBounds(
            sigma_lower=sigma, sigma_upper=sigma, drift_sup=0.0, cost_sup=0.0,
            spin_lower=0.5, spin_upper=1.0,
        ),
    )
    return data, ControlSets.uniform(2)


def _theta_mix_instance():
    """Two rays whose scattering is steered between (0.9, 0.1) and (0.1, 0.9)."""
    data = ProblemData(
        ray_count=2,
        horizon=1.0,
        sigma=RayCoefficient("constant", c0=1.0),
        drift=RayCoefficient("constant", c0=0.0),
        running_cost=RayCoefficient("constant", c0=0.0),
        spin=SpinningMeasure(
            "theta_mix",
            weights_a=np.array([0.9, 0.1]),
            weights_b=np.array([0.1, 0.9]),
        ),
        vertex_cost=VertexCost("constant", c0=0.0),
        terminal=TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(
            sigma_lower=1.0, sigma_upper=1.0, drift_sup=0.0, cost_sup=1.0,
            spin_lower=0.1, spin_upper=0.9,
        ),
    )
    return data, ControlSets.uniform(2, theta_range=(0.0, 1.0), n_theta=2)


def _reflected_abs_mean(x: float, s: float) -> float:
    """E|x + W_s| for standard Brownian motion, x >= 0."""
    sd = math.sqrt(s)
    return x * math.erf(x / (sd * math.sqrt(2.0))) + sd * math.sqrt(
        2.0 / math.pi
    ) * math.exp(-x * x / (2.0 * s))


@pytest.fixture(scope="module")
def folded():
    """Uncontrolled |x|-payoff instance solved on a medium grid."""
    data, controls = reflecting_distance_payoff()
    grid = build_grid(data, x_max=4.0, n_x=81, l_max=2.0, n_l=2)
    field, policy = solve_backward(data, controls, grid)
    return data, controls, grid, field, policy


@pytest.fixture(scope="module")
def coarse():
    """Same instance on a small grid with a populated l axis."""
    data, controls = reflecting_distance_payoff()
    grid = build_grid(data, x_max=4.0, n_x=41, l_max=2.0, n_l=9)
    field, policy = solve_backward(data, controls, grid)
    return data, controls, grid, field, policy


# ---------------------------------------------------------------------------
# grid construction and the CFL bound
# ---------------------------------------------------------------------------


def test_build_grid_frozen_step_counts():
    data, _ = _constant_instance(sigma=1.0)
    # dx = 0.02, so dt <= dx^2/sigma^2 = 4e-4 and n_t = 2500 at horizon 1
    g = build_grid(data, x_max=2.0, n_x=101, l_max=1.0, n_l=2, cfl_safety=1.0)
    assert g.n_t == 2500
    assert g.dt == pytest.approx(4.0e-4, rel=1e-12)

    data2, _ = _constant_instance(sigma=2.0)
    g2 = build_grid(data2, x_max=2.0, n_x=101, l_max=1.0, n_l=2, cfl_safety=1.0)
    assert g2.n_t == 10000

    g3 = build_grid(data, x_max=2.0, n_x=101, l_max=1.0, n_l=2, cfl_safety=0.5)
    assert g3.n_t == 5000


def test_grid_rejects_bad_shapes():
    kw = dict(x_max=1.0, l_max=1.0, horizon=1.0, sigma_upper=1.0, drift_sup=0.0)
    with pytest.raises(ValueError, match="n_x >= 3"):
        Grid(n_x=2, n_l=2, n_t=1000, **kw)
    with pytest.raises(ValueError, match="n_l >= 2"):
        Grid(n_x=11, n_l=1, n_t=1000, **kw)
    with pytest.raises(ValueError, match="n_t >= 1"):
        Grid(n_x=11, n_l=2, n_t=0, **kw)
    with pytest.raises(ValueError, match="cfl_safety"):
        Grid(n_x=11, n_l=2, n_t=1000, cfl_safety=0.0, **kw)


def test_grid_rejects_cfl_violation():
    # dx = 0.1 and sigma = 1 cap dt at 0.01; dt = 0.1 must be refused
    with pytest.raises(ValueError, match="CFL"):
        Grid(
            x_max=1.0, n_x=11, l_max=1.0, n_l=2, horizon=1.0, n_t=10,
            sigma_upper=1.0, drift_sup=0.0,
        )


@given(
    n_x=st.integers(3, 60),
    x_max=st.floats(0.5, 8.0),
    sigma=st.floats(0.3, 2.5),
    drift_sup=st.floats(0.0, 2.0),
    safety=st.floats(0.1, 1.0),
)
def test_build_grid_dt_tight_under_cfl(n_x, x_max, sigma, drift_sup, safety):
    data, _ = _constant_instance(sigma=sigma)
    data = ProblemData(
        ray_count=data.ray_count, horizon=1.0, sigma=data.sigma, drift=data.drift,
        running_cost=data.running_cost, spin=data.spin, vertex_cost=data.vertex_cost,
        terminal=data.terminal,
        bounds=CoefficientBounds(
            sigma_lower=sigma, sigma_upper=sigma, drift_sup=drift_sup, cost_sup=0.0,
            spin_lower=0.5, spin_upper=1.0,
        ),
    )
    g = build_grid(data, x_max=x_max, n_x=n_x, l_max=1.0, n_l=2, cfl_safety=safety)
    dx = x_max / (n_x - 1)
    limit = safety * dx * dx / (sigma * sigma + drift_sup * dx)
    assert g.dt <= limit * (1.0 + 1e-9)
    if g.n_t > 1:  # one step fewer would breach the scaled bound
        assert 1.0 / (g.n_t - 1) > limit * (1.0 - 1e-9)


# ---------------------------------------------------------------------------
# junction update in closed form
# ---------------------------------------------------------------------------


def test_vertex_update_equal_neighbors_is_identity():
    data, controls = _constant_instance()
    c = 1.5
    val, _ = vertex_update(
        data, controls, 0.0, 0.0, np.array([c, c]), u_next_l=c, dx=0.25, dl=0.5
    )
    assert val == pytest.approx(c, abs=1e-14)
    top, _ = vertex_update(
        data, controls, 0.0, 0.5, np.array([c, c]), u_next_l=None, dx=0.25, dl=0.5
    )
    assert top == pytest.approx(c, abs=1e-14)


def test_vertex_update_steers_toward_large_neighbor():
    data, controls = _theta_mix_instance()
    # best theta weights ray 1: q = 0.9, so u0 = (0/1 + 0.9) / (1/1 + 1/1)
    val, theta = vertex_update(
        data, controls, 0.0, 0.0, np.array([1.0, 0.0]), u_next_l=0.0, dx=1.0, dl=1.0
    )
    assert val == pytest.approx(0.45, abs=1e-14)
    assert theta == 1.0
    # at the top of the l axis the zero-slope closure gives dx * q
    top, theta_top = vertex_update(
        data, controls, 0.0, 2.0, np.array([1.0, 0.0]), u_next_l=None, dx=1.0, dl=1.0
    )
    assert top == pytest.approx(0.9, abs=1e-14)
    assert theta_top == 1.0


def test_vertex_update_cost_shifts_linearly():
    data, controls = _theta_mix_instance()
    import dataclasses

    paying = dataclasses.replace(data, vertex_cost=VertexCost("constant", c0=-0.3))
    val, theta = vertex_update(
        paying, controls, 0.0, 0.0, np.array([1.0, 0.0]), u_next_l=0.0, dx=1.0, dl=1.0
    )
    # a constant junction cost moves the update by c / (1/dl + 1/dx)
    assert val == pytest.approx(0.45 - 0.3 / 2.0, abs=1e-14)
    assert theta == 1.0


# ---------------------------------------------------------------------------
# backward solver
# ---------------------------------------------------------------------------


def test_constant_terminal_is_exact_fixed_point():
    data, controls = _constant_instance(g0=2.5)
    # power-of-two spacings keep the junction algebra exact in floats
    grid = build_grid(data, x_max=4.0, n_x=65, l_max=2.0, n_l=3)
    field, _ = solve_backward(data, controls, grid)
    assert np.all(field.full == 2.5)


def test_folded_payoff_matches_reflected_diffusion(folded):
    _, _, _, field, _ = folded
    # value at the junction, t = 0: E|W_1| = sqrt(2/pi)
    got = float(field.vertex[0, 0])
    assert got == pytest.approx(math.sqrt(2.0 / math.pi), abs=0.03)
    # interior probe on a grid node
    got_x1 = eval_value(field, 1, 0.0, 1.0, 0.0)
    assert got_x1 == pytest.approx(_reflected_abs_mean(1.0, 1.0), abs=0.03)


def test_constant_terminal_shift_propagates_exactly(coarse):
    import dataclasses

    data, controls, grid, field, _ = coarse
    shifted = dataclasses.replace(
        data,
        terminal=tuple(
            dataclasses.replace(g, c0=g.c0 + 0.7) for g in data.terminal
        ),
    )
    field2, _ = solve_backward(shifted, controls, grid)
    diff = field2.full - field.full
    assert float(np.abs(diff - 0.7).max()) <= 1e-10


def test_solver_rejects_grid_built_for_smaller_sigma():
    data, controls = reflecting_distance_payoff()
    # constructing against sigma_upper = 0.01 lets a huge dt through; the
    # solver re-checks against the instance's declared bounds and refuses
    lying = Grid(
        x_max=4.0, n_x=41, l_max=2.0, n_l=2, horizon=1.0, n_t=50,
        sigma_upper=0.01, drift_sup=0.0,
    )
    with pytest.raises(NumericalError, match="CFL"):
        solve_backward(data, controls, lying)


# ---------------------------------------------------------------------------
# l-free reduction
# ---------------------------------------------------------------------------


def test_no_localtime_matches_full_sweep(coarse):
    data, controls, grid, field, _ = coarse
    reduced, _ = solve_no_localtime(data, controls, grid)
    # the full field must be flat along l and agree with the reduction
    flat = reduced.full[:, :, :, 0][..., None]
    assert float(np.abs(field.full - flat).max()) <= 1e-10


def test_no_localtime_refuses_l_dependent_instance():
    data, controls = CATALOG["l_dependent_spin"]()
    grid = build_grid(data, x_max=4.0, n_x=41, l_max=2.0, n_l=5)
    with pytest.raises(ValueError, match="depend"):
        solve_no_localtime(data, controls, grid)


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------


def test_eval_value_exact_on_nodes(coarse):
    _, _, grid, field, _ = coarse
    rng = np.random.default_rng(7)
    for _ in range(20):
        i = int(rng.integers(1, 3))
        k = int(rng.integers(0, field.t_nodes.size))
        m = int(rng.integers(0, field.x_nodes.size))
        n = int(rng.integers(0, field.l_nodes.size))
        got = eval_value(
            field, i,
            float(field.t_nodes[k]), float(field.x_nodes[m]), float(field.l_nodes[n]),
        )
        assert got == pytest.approx(float(field.full[i - 1, k, m, n]), abs=1e-12)


def test_eval_value_junction_is_ray_independent(coarse):
    _, _, _, field, _ = coarse
    a = eval_value(field, 1, 0.37, 0.0, 0.5)
    b = eval_value(field, 2, 0.37, 0.0, 0.5)
    assert a == b


def test_eval_value_midpoint_is_node_average(coarse):
    _, _, _, field, _ = coarse
    x = field.x_nodes
    mid = 0.5 * (float(x[3]) + float(x[4]))
    left = eval_value(field, 1, 0.0, float(x[3]), 0.0)
    right = eval_value(field, 1, 0.0, float(x[4]), 0.0)
    got = eval_value(field, 1, 0.0, mid, 0.0)
    assert got == pytest.approx(0.5 * (left + right), abs=1e-12)


def test_eval_value_rejects_out_of_domain(coarse):
    _, _, _, field, _ = coarse
    with pytest.raises(ValueError, match="outside"):
        eval_value(field, 1, 0.0, 4.5, 0.0)
    with pytest.raises(ValueError, match="outside"):
        eval_value(field, 1, -0.2, 1.0, 0.0)
    with pytest.raises(ValueError, match="outside"):
        eval_value(field, 1, 0.0, 1.0, 2.5)
    with pytest.raises(ValueError, match="ray index"):
        eval_value(field, 3, 0.0, 1.0, 0.0)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_value_csv_round_trip_is_bit_exact(coarse, tmp_path):
    _, _, _, field, policy = coarse
    path = tmp_path / "value.csv"
    export_value_csv(field, policy, path, meta={"note": "round-trip"})
    field2, policy2 = import_value_csv(path)
    assert np.array_equal(field2.full, field.full)
    assert np.array_equal(field2.t_nodes, field.t_nodes)
    assert np.array_equal(field2.l_nodes, field.l_nodes)
    assert np.array_equal(policy2.ray_control, policy.ray_control)
    assert np.array_equal(policy2.vertex_control, policy.vertex_control)


def test_import_rejects_foreign_csv(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="not a value-field CSV"):
        import_value_csv(path)
