import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpx.symplectic import (
    ClassificationError,
    NotSemisimpleError,
    ceil_E,
    check_Pk,
    classify_P,
    diamond,
    elliptic_height,
    is_symplectic,
    normal_form_representative,
    pclass_from_blocks,
    random_symplectic,
    rotation,
    splitting_numbers,
    splitting_table,
    standard_J,
    symplectic_conjugator,
    symplectic_defect,
    symplectic_inverse,
)

from _instances import P_from_blocks


def test_standard_J_and_rotation():
    J = standard_J(2)
    assert np.array_equal(J, [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])
    R = rotation(0.3)
    assert np.allclose(R, [[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]])
    assert is_symplectic(R)


def test_diamond_places_blocks_on_conjugate_coordinates():
    A = np.array([[1.0, 2.0], [3.0, 7.0]])
    B = np.array([[5.0, 6.0], [7.0, 9.0]])
    D = diamond(A, B)
    # block b acts on (q_b, p_b) = coordinates (b, n + b)
    assert D[0, 0] == 1 and D[0, 2] == 2 and D[2, 0] == 3 and D[2, 2] == 7
    assert D[1, 1] == 5 and D[1, 3] == 6 and D[3, 1] == 7 and D[3, 3] == 9
    assert D[0, 1] == 0 and D[2, 3] == 0


def test_diamond_of_symplectic_is_symplectic():
    D = diamond(rotation(0.4), np.array([[2.0, 0.0], [0.0, 0.5]]), rotation(-1.0))
    assert symplectic_defect(D) < 1e-14


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 3), seed=st.integers(0, 10_000))
def test_random_symplectic_and_inverse(n, seed):
    M = random_symplectic(n, np.random.default_rng(seed), scale=0.5)
    assert symplectic_defect(M) < 1e-10
    assert np.allclose(symplectic_inverse(M) @ M, np.eye(2 * n), atol=1e-10)


def test_check_Pk_exact_order():
    P = rotation(2 * math.pi / 5)
    assert check_Pk(P, 5)
    assert not check_Pk(P, 10)  # P^5 = I already
    assert not check_Pk(P, 3)


@pytest.mark.parametrize("k,p,ms", [
    (5, 0, [1]), (5, 0, [4]), (6, 1, [1]), (7, 0, [1, 2]), (8, 1, [1, 3]), (2, 0, [1]), (4, 1, [2, 1]),
])
def test_classify_recovers_blocks_in_random_frame(k, p, ms):
    rng = np.random.default_rng(k * 10 + len(ms))
    n = p + len(ms)
    V = random_symplectic(n, rng, scale=0.4)
    P = P_from_blocks(k, [0] * p + ms, V)
    c = classify_P(P, k)
    expected = {}
    for m in ms:
        expected[m] = expected.get(m, 0) + 1
    assert c.p == p
    assert c.blocks == expected


def test_krein_distinguishes_rotation_direction():
    # P^{-1} = R(2 pi/5) is the admissible block; P^{-1} = R(8 pi/5) is not
    good = classify_P(rotation(-2 * math.pi / 5), 5)
    bad = classify_P(rotation(2 * math.pi / 5), 5)
    assert good.blocks == {1: 1} and good.admissible and good.margin == 3
    assert bad.blocks == {4: 1} and not bad.admissible and bad.margin == -3


def test_pclass_admissibility_rule():
    assert pclass_from_blocks(6, 1, {1: 2}).admissible  # 6 - 4 = 2 > 1
    assert not pclass_from_blocks(5, 0, {1: 2}).admissible  # 5 - 4 = 1
    assert not pclass_from_blocks(4, 0, {2: 1}).admissible  # r = k/2
    assert pclass_from_blocks(3, 1, {}).admissible


def test_conjugator_reconstructs_normal_form():
    rng = np.random.default_rng(3)
    V = random_symplectic(3, rng, scale=0.4)
    P = P_from_blocks(8, [0, 1, 3], V)
    U, N = symplectic_conjugator(P, 8)
    assert symplectic_defect(U) < 1e-9
    assert np.allclose(U @ N @ np.linalg.inv(U), symplectic_inverse(P), atol=1e-9)
    c = classify_P(P, 8)
    assert np.allclose(N, normal_form_representative(c), atol=1e-9)


def test_classification_errors():
    with pytest.raises(ClassificationError):
        classify_P(rotation(1.0), 5)
    shear = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises((ClassificationError, NotSemisimpleError)):
        classify_P(shear, 1)


def test_splitting_table_values():
    assert (splitting_numbers(np.eye(2), Fraction(0)).s_plus,
            splitting_numbers(np.eye(2), Fraction(0)).s_minus) == (1, 1)
    theta = Fraction(1, 5)
    R = rotation(2 * math.pi * float(theta))
    at_plus = splitting_numbers(R, theta)
    at_minus = splitting_numbers(R, 1 - theta)
    assert (at_plus.s_plus, at_plus.s_minus) == (0, 1)
    assert (at_minus.s_plus, at_minus.s_minus) == (1, 0)
    table = splitting_table(diamond(np.eye(2), R))
    assert table[Fraction(0)] == (1, 1)
    assert table[theta] == (0, 1)


def test_splitting_rejects_hyperbolic():
    with pytest.raises(NotSemisimpleError):
        splitting_numbers(np.diag([2.0, 0.5]), Fraction(0))


def test_elliptic_height():
    assert elliptic_height(diamond(rotation(0.5), np.diag([3.0, 1 / 3.0]))) == 2
    assert elliptic_height(np.eye(6)) == 6


def test_ceil_E():
    assert ceil_E(Fraction(3, 1)) == 3
    assert ceil_E(Fraction(7, 3)) == 3
    assert ceil_E(Fraction(-1, 2)) == 0
