"""Seeded test instances shared by the unit and acceptance suites."""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from mpx.paths import fundamental_solution, random_compatible_generator
from mpx.symplectic import diamond, random_symplectic, rotation, symplectic_inverse


def order_of_blocks(k: int, ms) -> int:
    order = 1
    for m in ms:
        order = math.lcm(order, k // math.gcd(m, k))
    return order


def P_from_blocks(k: int, ms, V=None) -> np.ndarray:
    """P with P^{-1} = V (diamond of R(2 pi m / k)) V^{-1}."""
    N = diamond(*[rotation(2 * math.pi * m / k) for m in ms])
    if V is None:
        return symplectic_inverse(N)
    return symplectic_inverse(V @ N @ symplectic_inverse(V))


def random_P(n: int, k: int, rng) -> np.ndarray:
    """Random finite-order P of exact order k, in a random symplectic frame."""
    while True:
        ms = list(rng.integers(0, k, size=n))
        if order_of_blocks(k, ms) == k:
            break
    V = random_symplectic(n, rng, scale=0.4)
    return P_from_blocks(k, ms, V)


def random_instance(seed: int, max_growth: float = 8.0):
    """(gamma, P, k, generator) with n in {1,2,3} and k in {4,5,6}.

    Generators whose monodromy norm exceeds max_growth are redrawn at half the
    amplitude: six-fold iterates of strongly hyperbolic paths are not
    representable in double precision.
    """
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(1, 4))
    k = int(rng.integers(4, 7))
    P = random_P(n, k, rng)
    amplitude = float(rng.uniform(0.5, 1.5))
    shift = float(rng.uniform(-0.5, 4.0))
    while True:
        G = random_compatible_generator(P, k, 1.0, seed=seed, degree=2,
                                        amplitude=amplitude, shift=shift)
        gamma = fundamental_solution(G, 1.0)
        if np.linalg.norm(gamma.end, 2) <= max_growth:
            return gamma, P, k, G
        amplitude /= 2
        shift /= 2


def admissible_classes(n_max: int = 3, k_max: int = 8):
    """All (k, p, blocks) with p + sum j = n <= n_max, blocks m < k/2, margin > 1, exact order k."""
    out = []
    for k in range(1, k_max + 1):
        ms_allowed = [m for m in range(1, k) if 2 * m < k]
        for n in range(1, n_max + 1):
            for p in range(n + 1):
                rest = n - p
                seen = set()
                for combo in product(ms_allowed, repeat=rest):
                    key = tuple(sorted(combo))
                    if key in seen:
                        continue
                    seen.add(key)
                    if k - 2 * sum(key) <= 1:
                        continue
                    if order_of_blocks(k, [0] * p + list(key)) != k:
                        continue
                    blocks = {}
                    for m in key:
                        blocks[m] = blocks.get(m, 0) + 1
                    out.append((k, p, blocks))
    return out
