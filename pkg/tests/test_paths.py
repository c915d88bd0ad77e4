import math

import numpy as np
import pytest
from scipy.linalg import expm

from mpx.paths import (
    concatenate,
    constant_generator,
    constant_path,
    contractible_loop,
    exponential_path,
    fundamental_solution,
    generator_from_spec,
    order_of,
    p_iterate,
    random_compatible_generator,
    reference_xi,
)
from mpx.symplectic import rotation, standard_J, symplectic_defect, symplectic_inverse

from _instances import random_P


def test_fundamental_solution_of_constant_generator_is_expm():
    rng = np.random.default_rng(0)
    S = rng.normal(size=(4, 4))
    B = (S + S.T) / 2
    g = fundamental_solution(constant_generator(B), 1.0)
    assert np.allclose(g.end, expm(standard_J(2) @ B), atol=1e-10)
    assert g.defect < 1e-10


def test_rotation_generator():
    g = fundamental_solution(constant_generator(2.0 * np.eye(2)), 1.5)
    assert np.allclose(g.end, rotation(3.0), atol=1e-11)
    # dense evaluation between grid points
    assert np.allclose(g(0.123), rotation(0.246), atol=1e-11)


@pytest.mark.parametrize("seed", range(4))
def test_random_generator_is_compatible(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 3
    k = 4 + seed % 3
    P = random_P(n, k, rng)
    G = random_compatible_generator(P, k, 0.7, seed=seed)
    assert G.compatibility_defect() < 1e-12
    assert G.symmetry_defect() < 1e-14
    assert G.compatible


def test_generator_from_spec_roundtrip():
    P = rotation(2 * math.pi / 5)
    G = generator_from_spec({"type": "trigpoly", "seed": 4, "degree": 1, "amplitude": 0.5}, P, 5, 1.0)
    H = random_compatible_generator(P, 5, 1.0, seed=4, degree=1, amplitude=0.5)
    ts = np.linspace(0, 3, 7)
    assert np.array_equal(G.many(ts), H.many(ts))
    with pytest.raises(ValueError):
        generator_from_spec({"type": "bogus"}, P, 5, 1.0)


def test_p_iterate_matches_fundamental_solution_over_m_tau():
    # for a compatible generator the P-iterate is the fundamental solution on [0, m tau]
    rng = np.random.default_rng(7)
    P = random_P(2, 4, rng)
    G = random_compatible_generator(P, 4, 1.0, seed=7, amplitude=0.6)
    g = fundamental_solution(G, 1.0)
    it = p_iterate(g, P, 3)
    long = fundamental_solution(G, 3.0)
    assert np.allclose(it.end, long.end, atol=1e-8)
    assert np.allclose(it(1.7), long(1.7), atol=1e-8)
    assert it.knots == (1.0, 2.0)


def test_p_iterate_rejects_bad_m():
    with pytest.raises(ValueError):
        p_iterate(constant_path(1), np.eye(2), 0)


def test_concatenate_endpoint():
    a = exponential_path(standard_J(1) @ np.diag([0.3, 0.3]))
    b = exponential_path(standard_J(1) @ np.diag([0.5, 0.5]))
    c = concatenate(a, b)
    assert np.allclose(c.end, b.end @ a.end)
    assert c.horizon == pytest.approx(2.0)
    assert 1.0 in c.knots


def test_order_of():
    assert order_of(rotation(2 * math.pi / 7)) == 7
    assert order_of(np.eye(4)) == 1
    with pytest.raises(ValueError):
        order_of(rotation(1.0))


def test_reference_xi_ends_at_P_inverse():
    rng = np.random.default_rng(11)
    P = random_P(3, 6, rng)
    xi = reference_xi(P, 6, tau=2.0)
    assert np.array_equal(xi.samples[0], np.eye(6))
    assert np.allclose(xi.end, symplectic_inverse(P), atol=1e-12)
    assert max(symplectic_defect(M) for M in xi.samples) < 1e-9


def test_contractible_loop_is_closed():
    loop = contractible_loop(2, seed=3)
    assert np.array_equal(loop.samples[0], np.eye(4))
    assert np.allclose(loop.end, np.eye(4))
    assert loop.defect < 1e-9
