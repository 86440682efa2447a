"""Problem-data tests: Hamiltonians with frozen values, terminal payoff,
assumption validation, and the instance catalog."""

import dataclasses

import numpy as np
import pytest

from spiderhjb.model import (
    CATALOG,
    CoefficientBounds,
    ControlSets,
    ProblemData,
    RayCoefficient,
    SpinningMeasure,
    TerminalPayoff,
    VertexCost,
    controlled_drift_instance,
    kirchhoff_hamiltonian,
    ray_hamiltonian,
    reflecting_distance_payoff,
    spin_control_instance,
    terminal_payoff,
    validate_assumptions,
)
from spiderhjb.network import NetworkPoint


def _uncontrolled(sigma=1.0, ray_count=2, g=None, h0=None):
    """Minimal driftless instance with singleton controls."""
    return ProblemData(
        ray_count=ray_count,
        horizon=1.0,
        sigma=RayCoefficient("constant", c0=sigma),
        drift=RayCoefficient("constant", c0=0.0),
        running_cost=RayCoefficient("constant", c0=0.0),
        spin=SpinningMeasure("constant", weights=np.full(ray_count, 1.0 / ray_count)),
        vertex_cost=h0 if h0 is not None else VertexCost("constant", c0=0.0),
        terminal=g if g is not None else TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(
            sigma_lower=0.5 * sigma, sigma_upper=max(sigma, 1.0),
            drift_sup=0.0, cost_sup=1.0,
            spin_lower=1.0 / ray_count, spin_upper=1.0,
        ),
    )


# ---------------------------------------------------------------------------
# Hamiltonians: frozen values
# ---------------------------------------------------------------------------


def test_ray_hamiltonian_singleton_diffusion_only():
    data = _uncontrolled(sigma=np.sqrt(2.0))
    controls = ControlSets.uniform(2, beta_range=(0.3, 0.3), n_beta=1)
    value, beta = ray_hamiltonian(data, controls, 1, t=0.2, x=1.0, l=0.0, p=7.0, M=1.0)
    assert value == pytest.approx(1.0, abs=1e-12)  # 0.5 * 2 * 1
    assert beta == 0.3


def test_ray_hamiltonian_linear_drift_control():
    data = ProblemData(
        ray_count=2,
        horizon=1.0,
        sigma=RayCoefficient("constant", c0=1.0),
        drift=RayCoefficient("control_affine", cb=1.0),
        running_cost=RayCoefficient("constant", c0=0.0),
        spin=SpinningMeasure("constant", weights=np.array([0.5, 0.5])),
        vertex_cost=VertexCost("constant", c0=0.0),
        terminal=TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(0.5, 1.0, 1.0, 1.0, 0.5, 1.0),
    )
    controls = ControlSets.uniform(2, beta_range=(-1.0, 1.0), n_beta=21)
    value, beta = ray_hamiltonian(data, controls, 1, t=0.0, x=1.0, l=0.0, p=2.0, M=0.0)
    assert value == pytest.approx(2.0, abs=1e-12)  # beta * p maximized at beta = 1
    assert beta == 1.0


def test_ray_hamiltonian_quadratic_cost_interior_max():
    data, controls = controlled_drift_instance()  # b = beta, h = -beta^2, 21 points
    value, beta = ray_hamiltonian(data, controls, 1, t=0.0, x=1.0, l=0.0, p=1.0, M=0.0)
    assert value == pytest.approx(0.25, abs=1e-12)  # max of beta - beta^2 at 1/2
    assert beta == pytest.approx(0.5, abs=1e-12)


def test_ray_hamiltonian_monotone_in_M_and_shift_in_h():
    data, controls = controlled_drift_instance()
    vals = [
        ray_hamiltonian(data, controls, 1, 0.1, 0.5, 0.0, p=-0.7, M=M)[0]
        for M in (-1.0, 0.0, 0.5, 2.0)
    ]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
    # adding a constant to h shifts the value by that constant, same argmax
    shifted = ProblemData(
        ray_count=data.ray_count,
        horizon=data.horizon,
        sigma=data.sigma,
        drift=data.drift,
        running_cost=RayCoefficient("control_quadratic", c0=0.3, cb2=-1.0),
        spin=data.spin,
        vertex_cost=data.vertex_cost,
        terminal=data.terminal,
        bounds=data.bounds,
    )
    v0, b0 = ray_hamiltonian(data, controls, 1, 0.0, 1.0, 0.0, p=1.0, M=0.4)
    v1, b1 = ray_hamiltonian(shifted, controls, 1, 0.0, 1.0, 0.0, p=1.0, M=0.4)
    assert v1 == pytest.approx(v0 + 0.3, abs=1e-12)
    assert b1 == b0


def test_kirchhoff_singleton():
    data = _uncontrolled()
    controls = ControlSets.uniform(2)
    value, theta = kirchhoff_hamiltonian(data, controls, 0.0, 0.0, np.array([1.0, -1.0]))
    assert value == pytest.approx(0.0, abs=1e-12)
    assert theta == 0.0


def test_kirchhoff_spin_steering():
    data, controls = spin_control_instance()  # S = (theta, 1-theta), 41 points
    value, theta = kirchhoff_hamiltonian(data, controls, 0.0, 0.0, np.array([1.0, -1.0]))
    assert value == pytest.approx(0.4, abs=1e-12)  # 2*theta - 1 at theta = 0.7
    assert theta == pytest.approx(0.7, abs=1e-12)


def test_kirchhoff_cost_peak():
    data = _uncontrolled(h0=VertexCost("abs_peak", ab=1.0, theta0=0.5))
    controls = ControlSets.uniform(2, theta_range=(0.3, 0.7), n_theta=5)
    value, theta = kirchhoff_hamiltonian(data, controls, 0.0, 0.0, np.zeros(2))
    assert value == pytest.approx(0.0, abs=1e-12)
    assert theta == 0.5


def test_kirchhoff_monotone_in_p():
    data, controls = spin_control_instance()
    base = kirchhoff_hamiltonian(data, controls, 0.0, 0.0, np.array([0.2, -0.4]))[0]
    for k in range(2):
        p = np.array([0.2, -0.4])
        p[k] += 0.3
        assert kirchhoff_hamiltonian(data, controls, 0.0, 0.0, p)[0] >= base - 1e-15


def test_kirchhoff_rejects_broken_simplex():
    # Constructors enforce the simplex, so corrupt a frozen instance to prove
    # the evaluation-time guard fires on weights that no longer sum to 1.
    data = _uncontrolled()
    object.__setattr__(data.spin, "weights", np.array([0.6, 0.6]))
    with pytest.raises(ValueError, match="sum to 1"):
        kirchhoff_hamiltonian(data, ControlSets.uniform(2), 0.0, 0.0, np.zeros(2))


def test_kirchhoff_rejects_spin_below_declared_floor():
    data = _uncontrolled()
    bad = dataclasses.replace(
        data,
        spin=SpinningMeasure(
            "theta_mix",
            weights_a=np.array([0.9, 0.1]),
            weights_b=np.array([0.1, 0.9]),
        ),
        bounds=dataclasses.replace(data.bounds, spin_lower=0.2),
    )
    controls = ControlSets.uniform(2, theta_range=(0.0, 1.0), n_theta=2)
    with pytest.raises(ValueError, match="below declared lower bound"):
        kirchhoff_hamiltonian(bad, controls, 0.0, 0.0, np.zeros(2))


# ---------------------------------------------------------------------------
# terminal payoff
# ---------------------------------------------------------------------------


def test_terminal_payoff_values():
    data = _uncontrolled()
    assert terminal_payoff(data, 1, 2.0, 0.0) == 2.0
    assert terminal_payoff(data, 2, 2.0, 5.0) == 2.0
    const = _uncontrolled(g=TerminalPayoff("constant", c0=3.25))
    for i in (1, 2):
        assert terminal_payoff(const, i, 0.0, 0.0) == 3.25


def test_terminal_payoff_junction_continuity_enforced():
    data = _uncontrolled(
        g=(TerminalPayoff("constant", c0=0.0), TerminalPayoff("constant", c0=1.0))
    )
    with pytest.raises(ValueError, match="discontinuous"):
        terminal_payoff(data, 1, 0.0, 0.0)
    # off the junction each ray's payoff stands on its own
    assert terminal_payoff(data, 2, 0.5, 0.0) == 1.0


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------


def test_validate_assumptions_all_pass():
    data = _uncontrolled()
    report = validate_assumptions(data, ControlSets.uniform(2), x_max=4.0, l_max=2.0)
    assert report.satisfied
    assert {e.condition for e in report.entries} >= {"A_simplex", "E_ellipticity"}


def test_validate_assumptions_ellipticity_violation():
    data = ProblemData(
        ray_count=2,
        horizon=1.0,
        sigma=RayCoefficient("constant", c0=0.1),
        drift=RayCoefficient("constant", c0=0.0),
        running_cost=RayCoefficient("constant", c0=0.0),
        spin=SpinningMeasure("constant", weights=np.array([0.5, 0.5])),
        vertex_cost=VertexCost("constant", c0=0.0),
        terminal=TerminalPayoff("affine_x", cx=1.0),
        bounds=CoefficientBounds(0.5, 1.0, 0.0, 1.0, 0.5, 1.0),
    )
    report = validate_assumptions(data, ControlSets.uniform(2), x_max=4.0, l_max=2.0)
    assert not report.satisfied
    entry = next(e for e in report.entries if e.condition == "E_ellipticity")
    assert not entry.satisfied
    assert entry.measured == pytest.approx(0.1, abs=1e-12)


def test_validate_assumptions_spin_floor_violation():
    # Anchors dip to weight 0.2 at the theta endpoints while the declared
    # floor is 0.3, so condition A fails with the realized minimum reported.
    data = _uncontrolled()
    bad = dataclasses.replace(
        data,
        spin=SpinningMeasure(
            "theta_mix",
            weights_a=np.array([0.8, 0.2]),
            weights_b=np.array([0.2, 0.8]),
        ),
        bounds=dataclasses.replace(data.bounds, spin_lower=0.3),
    )
    controls = ControlSets.uniform(2, theta_range=(0.0, 1.0), n_theta=3)
    report = validate_assumptions(bad, controls, x_max=4.0, l_max=2.0)
    entry = next(e for e in report.entries if e.condition == "A_spin_lower")
    assert not entry.satisfied
    assert entry.measured == pytest.approx(0.2, abs=1e-12)
    assert report.entry("A_simplex").satisfied


def test_catalog_instances_satisfy_their_declared_bounds():
    for name, build in CATALOG.items():
        data, controls = build()
        report = validate_assumptions(data, controls, x_max=4.0, l_max=2.0)
        assert report.satisfied, f"{name}: {report.summary()}"


def test_uniform_probability_weights_point_the_spider_evenly():
    data, _ = reflecting_distance_payoff(ray_count=4)
    w = data.spin(0.3, 1.0, 0.0)
    assert np.allclose(w, 0.25)
