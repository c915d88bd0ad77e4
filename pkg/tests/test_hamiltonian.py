import math

import numpy as np
import pytest

from mpx.hamiltonian import (
    PSolutionOrbit,
    SolverError,
    extend_orbit,
    flow,
    hamiltonian_from_spec,
    linearization_generator,
    minimal_P_symmetric_period,
    quadratic_plus_quartic,
    radial_poly,
    radial_power,
    shoot,
    solve_with_restarts,
    validate_hamiltonian,
)
from mpx.symplectic import diamond, rotation

P5 = rotation(2 * math.pi / 5)


@pytest.fixture(scope="module")
def quartic():
    return radial_power(P5)


@pytest.fixture(scope="module")
def base_orbit(quartic):
    return shoot(quartic, 1.0, 5, [1.13, 0.0])


def test_radial_flow_is_rotation(quartic):
    x0 = np.array([0.8, 0.3])
    tr = flow(quartic, x0, 1.0)
    assert np.allclose(tr.end, rotation(x0 @ x0) @ x0, atol=1e-11)
    assert tr.energy_drift <= 1e-9


def test_variational_flow_is_symplectic(quartic):
    tr = flow(quartic, [0.9, -0.2], 1.0, variational=True)
    Y = tr.monodromy
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(Y.T @ J @ Y, J, atol=1e-10)


def test_shoot_finds_circular_orbit(base_orbit):
    r = np.linalg.norm(base_orbit.x0)
    assert r == pytest.approx(math.sqrt(2 * math.pi / 5), rel=1e-9)
    assert base_orbit.residual <= 1e-10
    assert base_orbit.energy_drift <= 1e-9
    assert not base_orbit.degenerate


def test_exact_guess_needs_no_newton_steps(quartic):
    sol = shoot(quartic, 1.0, 5, [math.sqrt(2 * math.pi / 5), 0.0])
    assert sol.newton_steps == 0


def test_shoot_rejects_trivial_guess(quartic):
    with pytest.raises(SolverError):
        shoot(quartic, 1.0, 5, [0.0, 0.0], scale=1.0)


def test_restarts_report_failures(quartic):
    best, found, failures = solve_with_restarts(quartic, 1.0, 5, seed=1, restarts=3,
                                                annulus=(1.0, 1.3), guess=[1.13, 0.0], workers=2)
    assert best is not None and best.residual <= 1e-10
    assert len(found) + len(failures) == 4


def test_extended_orbit_is_P_symmetric(base_orbit):
    _, xs, closure = extend_orbit(base_orbit)
    assert closure < 1e-9
    t = np.linspace(0, 1, 11)
    assert np.allclose(base_orbit.x(t + 1.0), (P5 @ base_orbit.x(t).T).T, atol=1e-9)


def test_minimal_period_of_base_orbit(base_orbit):
    scan = minimal_P_symmetric_period(base_orbit)
    assert scan.lambda_min == pytest.approx(5.0, rel=1e-6)
    assert not scan.degenerate


def test_minimal_period_of_higher_mode(quartic):
    # |x|^2 = 2 pi (1 + 1/5): angular speed 12 pi / 5, minimal P-symmetric period 5/6
    sol = shoot(quartic, 1.0, 5, [2.75, 0.0])
    assert np.linalg.norm(sol.x0) ** 2 == pytest.approx(12 * math.pi / 5, rel=1e-9)
    scan = minimal_P_symmetric_period(sol)
    assert scan.lambda_min == pytest.approx(5 / 6, rel=1e-6)


def test_linearization_is_compatible(base_orbit):
    G = linearization_generator(base_orbit)
    assert G.compatibility_defect() < 1e-8


def test_validation_of_quartic(quartic, base_orbit):
    rep = validate_hamiltonian(quartic, orbit=base_orbit)
    for key in ("H1_symmetry", "gradient_consistency", "hessian_consistency", "H2_nonnegative",
                "H3_superquadratic_at_zero", "H4_ambrosetti_rabinowitz",
                "H5_hessian_positive_away_from_zero", "H5_along_orbit"):
        assert rep[key]["pass"], key
    # H'' vanishes at the origin
    assert not rep["H5_literal_everywhere"]["pass"]


def test_validation_flags_asymmetric_hamiltonian():
    Q = np.diag([1.0, 3.0])
    rep = validate_hamiltonian(quadratic_plus_quartic(P5, Q))
    assert not rep["H1_symmetry"]["pass"]
    assert not rep["H4_ambrosetti_rabinowitz"]["pass"]


def test_radial_poly_derivatives():
    model = radial_poly(diamond(P5, P5), [0.0, 0.5, 0.1])
    rep = validate_hamiltonian(model)
    assert rep["gradient_consistency"]["pass"] and rep["hessian_consistency"]["pass"]
    assert model.mu == 6.0


def test_hamiltonian_from_spec():
    m = hamiltonian_from_spec({"type": "radial_power", "power": 6, "coeff": 1.0}, P5)
    x = np.array([0.5, 1.0])
    assert m.H(x) == pytest.approx((x @ x) ** 3)
    with pytest.raises(ValueError):
        hamiltonian_from_spec({"type": "nope"}, P5)


def test_constant_orbit_is_degenerate():
    P = diamond(np.eye(2), rotation(2 * math.pi / 3))
    model = quadratic_plus_quartic(P, -np.eye(4))
    x0 = np.array([1.0, 0.0, 0.0, 0.0])
    tr = flow(model, x0, 1.0, variational=True)
    sol = PSolutionOrbit(model, x0, 1.0, 3, tr, float(np.linalg.norm(tr.end - P @ x0)))
    assert sol.degenerate
    scan = minimal_P_symmetric_period(sol)
    assert scan.degenerate and scan.lambda_min is None
