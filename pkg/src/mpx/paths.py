"""Symplectic paths: fundamental solutions, P-iteration, concatenation, reference paths."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .symplectic import (
    classify_P,
    half_dim,
    standard_J,
    symplectic_conjugator,
    symplectic_defect,
    symplectic_inverse,
)

DEFAULT_SAMPLES_PER_TAU = 512
MAX_STEP_NORM = 0.02  # h * ||B|| bound for one RK4 substep


# ---------------------------------------------------------------------------
# generators


@dataclass
class GeneratorField:
    """t -> symmetric B(t), optionally tied to a boundary matrix P with period tau."""

    n: int
    tau: float
    func: Callable[[float], np.ndarray]
    p_matrix: np.ndarray | None = None
    spec: dict | None = None
    batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, t: float) -> np.ndarray:
        return self.func(t)

    def many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.batch is not None:
            return self.batch(ts)
        return np.array([self.func(t) for t in ts])

    def norm_bound(self, horizon: float, samples: int = 33) -> float:
        ts = np.linspace(0.0, horizon, samples)
        return float(max(np.linalg.norm(B, 2) for B in self.many(ts)))

    def compatibility_defect(self, samples: int = 64) -> float:
        """max |P^T B(t + tau) P - B(t)| on a grid over [0, 2 tau]."""
        if self.p_matrix is None:
            return 0.0
        P = self.p_matrix
        ts = np.linspace(0.0, 2 * self.tau, samples)
        now = self.many(ts)
        later = self.many(ts + self.tau)
        return float(np.max(np.abs(np.einsum("ji,tjk,kl->til", P, later, P) - now)))

    def symmetry_defect(self, samples: int = 16) -> float:
        Bs = self.many(np.linspace(0.0, self.tau, samples))
        return float(np.max(np.abs(Bs - np.transpose(Bs, (0, 2, 1)))))

    @property
    def compatible(self) -> bool:
        return self.compatibility_defect() <= 1e-9


def constant_generator(B, tau: float = 1.0, P=None) -> GeneratorField:
    B = np.asarray(B, dtype=float)
    n = half_dim(B)
    return GeneratorField(
        n, tau, lambda t: B, None if P is None else np.asarray(P, dtype=float),
        {"type": "constant", "B": B.tolist()},
        lambda ts: np.broadcast_to(B, (len(ts),) + B.shape).copy(),
    )


def random_compatible_generator(P, k: int, tau: float = 1.0, seed: int = 0, degree: int = 2,
                                amplitude: float = 1.0, shift: float = 0.0) -> GeneratorField:
    """Average a random symmetric trigonometric polynomial over the group generated by P.

    B(t) = (1/k) sum_i (P^i)^T B0(t + i tau) P^i with B0 of period k tau, so that
    P^T B(t + tau) P = B(t) holds identically.  `shift` adds shift*I to B0.
    """
    P = np.asarray(P, dtype=float)
    n = half_dim(P)
    rng = np.random.default_rng(seed)

    def sym():
        A = rng.normal(scale=amplitude, size=(2 * n, 2 * n))
        return (A + A.T) / 2

    C = [sym() + shift * np.eye(2 * n)] + [sym() / (d + 1) for d in range(degree)]
    S = [np.zeros((2 * n, 2 * n))] + [sym() / (d + 1) for d in range(degree)]
    freqs = np.array([2 * math.pi * d / (k * tau) for d in range(degree + 1)])
    powers = [np.linalg.matrix_power(P, i) for i in range(k)]
    cos_coef = []
    sin_coef = []
    for d in range(degree + 1):
        ac = np.zeros((2 * n, 2 * n))
        asn = np.zeros((2 * n, 2 * n))
        for i, Q in enumerate(powers):
            ph = freqs[d] * i * tau
            Cq = Q.T @ C[d] @ Q
            Sq = Q.T @ S[d] @ Q
            ac += math.cos(ph) * Cq + math.sin(ph) * Sq
            asn += -math.sin(ph) * Cq + math.cos(ph) * Sq
        cos_coef.append(ac / k)
        sin_coef.append(asn / k)
    cos_coef = np.array(cos_coef)
    sin_coef = np.array(sin_coef)

    def batch(ts):
        ts = np.atleast_1d(ts)
        ph = np.outer(ts, freqs)
        return (np.einsum("td,dij->tij", np.cos(ph), cos_coef)
                + np.einsum("td,dij->tij", np.sin(ph), sin_coef))

    spec = {"type": "trigpoly", "seed": seed, "degree": degree}
    if amplitude != 1.0:
        spec["amplitude"] = amplitude
    if shift:
        spec["shift"] = shift
    return GeneratorField(n, tau, lambda t: batch(np.array([t]))[0], P, spec, batch)


def generator_from_spec(spec: dict, P, k: int, tau: float) -> GeneratorField:
    kind = spec.get("type")
    if kind == "constant":
        return constant_generator(spec["B"], tau, P)
    if kind == "trigpoly":
        return random_compatible_generator(P, k, tau, spec.get("seed", 0), spec.get("degree", 2),
                                           spec.get("amplitude", 1.0), spec.get("shift", 0.0))
    raise ValueError(f"unknown generator type {kind!r}")


# ---------------------------------------------------------------------------
# integration


def symplectic_project(M: np.ndarray, iterations: int = 2) -> np.ndarray:
    """Pull M back onto Sp(2n): M <- M E^{-1/2}, E = J^{-1} M^T J M, by Newton steps."""
    J = standard_J(half_dim(M))
    eye = np.eye(M.shape[0])
    for _ in range(iterations):
        E = -J @ M.T @ J @ M
        if np.max(np.abs(E - eye)) < 1e-15:
            break
        M = M @ (1.5 * eye - 0.5 * E)
    return M


def _rk4_matrix_step(B, J, t, h, Y):
    k1 = J @ B(t) @ Y
    k2 = J @ B(t + h / 2) @ (Y + h / 2 * k1)
    k3 = J @ B(t + h / 2) @ (Y + h / 2 * k2)
    k4 = J @ B(t + h) @ (Y + h * k3)
    return Y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _substeps(B: GeneratorField | Callable, h: float, horizon: float) -> int:
    bound = B.norm_bound(horizon) if isinstance(B, GeneratorField) else 1.0
    return max(1, math.ceil(h * bound / MAX_STEP_NORM))


def integrate_between(B, t0: float, t1: float, Y0: np.ndarray, substeps_per_unit: float) -> np.ndarray:
    """Propagate Y from t0 to t1 under Y' = J B(t) Y with projected RK4."""
    if t1 == t0:
        return Y0.copy()
    J = standard_J(half_dim(Y0))
    steps = max(1, math.ceil(abs(t1 - t0) * substeps_per_unit))
    h = (t1 - t0) / steps
    Y = Y0
    for s in range(steps):
        Y = _rk4_matrix_step(B, J, t0 + s * h, h, Y)
    return symplectic_project(Y)


# ---------------------------------------------------------------------------
# paths


@dataclass
class SymplecticPath:
    """Sampled path gamma: [0, horizon] -> Sp(2n) with gamma(0) = I.

    `generator` returns B(t) with gamma' = J B gamma (right-continuous at knots);
    `evaluator` returns gamma(t) at arbitrary t for grid refinement.
    """

    grid: np.ndarray
    samples: np.ndarray
    generator: Callable[[float], np.ndarray] | None = None
    evaluator: Callable[[float], np.ndarray] | None = None
    knots: tuple = ()
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.shape[1] // 2

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def end(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def defect(self) -> float:
        J = standard_J(self.n)
        return float(np.max(np.abs(np.einsum("tji,jk,tkl->til", self.samples, J, self.samples) - J)))

    def __call__(self, t: float) -> np.ndarray:
        if self.evaluator is not None:
            return self.evaluator(t)
        i = int(np.searchsorted(self.grid, t))
        if i < len(self.grid) and abs(self.grid[i] - t) < 1e-14:
            return self.samples[i]
        raise ValueError("path has no dense evaluator")

    def restrict(self, horizon: float) -> "SymplecticPath":
        """Samples with t <= horizon (horizon must be a grid point)."""
        idx = int(np.searchsorted(self.grid, horizon + 1e-12 * max(1.0, horizon)))
        return SymplecticPath(self.grid[:idx], self.samples[:idx], self.generator,
                              self.evaluator, tuple(k for k in self.knots if k < horizon),
                              self.label)

    def to_csv(self, path) -> None:
        n2 = self.samples.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"m{i}{j}" for i in range(n2) for j in range(n2)])
            for t, M in zip(self.grid, self.samples):
                w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in M.ravel()])

    def to_json(self) -> dict:
        return {"label": self.label, "grid": self.grid.tolist(),
                "samples": self.samples.tolist(), "knots": list(self.knots)}


def fundamental_solution(B: GeneratorField | Callable, tau: float, steps: int | None = None,
                         substeps: int | None = None) -> SymplecticPath:
    """Solve gamma' = J B(t) gamma, gamma(0) = I on [0, tau], storing every step."""
    if steps is None:
        steps = max(16, math.ceil(DEFAULT_SAMPLES_PER_TAU * tau))
    if steps < 16:
        raise ValueError("steps must be >= 16")
    n = B.n if isinstance(B, GeneratorField) else half_dim(B(0.0))
    h = tau / steps
    if substeps is None:
        substeps = _substeps(B, h, tau)
    rate = substeps / h
    grid = np.linspace(0.0, tau, steps + 1)
    out = np.empty((steps + 1, 2 * n, 2 * n))
    Y = np.eye(2 * n)
    out[0] = Y
    for s in range(steps):
        Y = integrate_between(B, grid[s], grid[s + 1], Y, rate)
        if symplectic_defect(Y) > 1e-10:
            raise FloatingPointError("symplectic defect not reducible below 1e-10")
        out[s + 1] = Y
    out[0] = np.eye(2 * n)

    def evaluator(t):
        i = min(max(int(np.searchsorted(grid, t, side="right")) - 1, 0), steps)
        return integrate_between(B, grid[i], t, out[i], rate)

    return SymplecticPath(grid, out, B, evaluator, (), "fundamental",
                          {"generator": getattr(B, "spec", None), "tau": tau})


def constant_path(n: int, horizon: float = 1.0, steps: int = 16) -> SymplecticPath:
    grid = np.linspace(0.0, horizon, steps + 1)
    eye = np.eye(2 * n)
    samples = np.broadcast_to(eye, (steps + 1, 2 * n, 2 * n)).copy()
    zero = np.zeros((2 * n, 2 * n))
    return SymplecticPath(grid, samples, lambda t: zero, lambda t: eye, (), "constant")


def exponential_path(L: np.ndarray, horizon: float = 1.0, steps: int | None = None,
                     left=None) -> SymplecticPath:
    """t -> V exp((t/horizon) L) V^{-1} for Hamiltonian L (J^{-1} L symmetric)."""
    L = np.asarray(L, dtype=float)
    n = half_dim(L)
    J = standard_J(n)
    V = np.eye(2 * n) if left is None else np.asarray(left, dtype=float)
    Vi = symplectic_inverse(V)
    if steps is None:
        steps = max(16, math.ceil(DEFAULT_SAMPLES_PER_TAU * horizon))
    grid = np.linspace(0.0, horizon, steps + 1)
    w, Q = np.linalg.eig(L / horizon)
    try:
        Qi = np.linalg.inv(Q)
        diag_ok = np.linalg.cond(Q) < 1e8
    except np.linalg.LinAlgError:
        diag_ok = False

    def evaluator(t):
        if diag_ok:
            E = (Q * np.exp(w * t)) @ Qi
            E = E.real
        else:
            E = expm(t * L / horizon)
        return V @ E @ Vi

    samples = np.array([evaluator(t) for t in grid])
    samples[0] = np.eye(2 * n)
    Bconst = -J @ V @ (L / horizon) @ Vi
    Bconst = (Bconst + Bconst.T) / 2
    return SymplecticPath(grid, samples, lambda t: Bconst, evaluator, (), "exponential")


def p_iterate(gamma: SymplecticPath, P, m: int) -> SymplecticPath:
    """gamma^m on [0, m tau]: segment j is P^j gamma(t - j tau) (P^{-1} gamma(tau))^j."""
    if m < 1:
        raise ValueError("m must be >= 1")
    P = np.asarray(P, dtype=float)
    if m == 1:
        return gamma
    tau = gamma.horizon
    Pinv = symplectic_inverse(P)
    C = Pinv @ gamma.end
    Ppow = [np.eye(P.shape[0])]
    Cpow = [np.eye(P.shape[0])]
    for _ in range(1, m):
        Ppow.append(Ppow[-1] @ P)
        Cpow.append(Cpow[-1] @ C)
    grids = [gamma.grid]
    segs = [gamma.samples]
    for j in range(1, m):
        grids.append(gamma.grid[1:] + j * tau)
        seg = np.einsum("ij,tjk,kl->til", Ppow[j], gamma.samples[1:], Cpow[j])
        segs.append(seg)
    for j in range(1, m):
        prev_end = Ppow[j - 1] @ gamma.end @ Cpow[j - 1]
        knot = Ppow[j] @ Cpow[j]
        if np.max(np.abs(prev_end - knot)) > 1e-8 * max(1.0, np.max(np.abs(knot))):
            raise ValueError("knot mismatch in P-iteration")
    grid = np.concatenate(grids)
    samples = np.concatenate(segs)

    def seg_of(t):
        return min(max(int(math.floor(t / tau + 1e-12)), 0), m - 1)

    Pinv_pow = [symplectic_inverse(Q) for Q in Ppow]
    base_gen = gamma.generator

    def generator(t):
        j = seg_of(t)
        return Pinv_pow[j].T @ base_gen(t - j * tau) @ Pinv_pow[j]

    def evaluator(t):
        j = seg_of(t)
        return Ppow[j] @ gamma(t - j * tau) @ Cpow[j]

    return SymplecticPath(grid, samples, generator if base_gen is not None else None,
                          evaluator if gamma.evaluator is not None else None,
                          tuple(j * tau for j in range(1, m)), f"{gamma.label}^{m}")


def classical_iterate(xi: SymplecticPath, m: int) -> SymplecticPath:
    return p_iterate(xi, np.eye(2 * xi.n), m)


def concatenate(a: SymplecticPath, b: SymplecticPath) -> SymplecticPath:
    """Traverse b, then the left translate b(end) a(t - len b)."""
    C = b.end
    Cinv = symplectic_inverse(C)
    lb = b.horizon
    grid = np.concatenate([b.grid, a.grid[1:] + lb])
    samples = np.concatenate([b.samples, np.einsum("ij,tjk->tik", C, a.samples[1:])])

    def generator(t):
        if t < lb:
            return b.generator(t)
        return Cinv.T @ a.generator(t - lb) @ Cinv

    def evaluator(t):
        if t <= lb:
            return b(t)
        return C @ a(t - lb)

    has_gen = a.generator is not None and b.generator is not None
    has_eval = a.evaluator is not None and b.evaluator is not None
    knots = tuple(b.knots) + (lb,) + tuple(k + lb for k in a.knots)
    return SymplecticPath(grid, samples, generator if has_gen else None,
                          evaluator if has_eval else None, knots, f"{a.label}*{b.label}")


def pointwise_product(a: SymplecticPath, b: SymplecticPath) -> SymplecticPath:
    """t -> a(t) b(t) for paths on the same grid."""
    if len(a.grid) != len(b.grid) or np.max(np.abs(a.grid - b.grid)) > 1e-12:
        raise ValueError("paths must share a grid")
    samples = np.einsum("tij,tjk->tik", a.samples, b.samples)

    def generator(t):
        A = a(t)
        Ai = symplectic_inverse(A)
        return a.generator(t) + Ai.T @ b.generator(t) @ Ai

    def evaluator(t):
        return a(t) @ b(t)

    return SymplecticPath(a.grid.copy(), samples, generator, evaluator,
                          tuple(sorted(set(a.knots) | set(b.knots))), f"{a.label}.{b.label}")


def order_of(P, max_order: int = 64, tol: float = 1e-8) -> int:
    P = np.asarray(P, dtype=float)
    eye = np.eye(P.shape[0])
    Q = eye.copy()
    for k in range(1, max_order + 1):
        Q = Q @ P
        if np.max(np.abs(Q - eye)) <= tol:
            return k
    raise ValueError(f"P has no finite order <= {max_order}")


def reference_xi(P, k: int | None = None, tau: float = 1.0,
                 steps: int | None = None) -> SymplecticPath:
    """xi(t) = U exp((t/tau) L) U^{-1} from I to P^{-1}, L the blockwise logarithm of N."""
    P = np.asarray(P, dtype=float)
    if k is None:
        k = order_of(P)
    n = half_dim(P)
    c = classify_P(P, k)
    U, N = symplectic_conjugator(P, k)
    angles = []
    angles += [0.0] * c.p
    for m in sorted(c.blocks):
        angles += [2 * math.pi * m / k] * c.blocks[m]
    D = np.diag(np.array(angles + angles))
    L = standard_J(n) @ D
    xi = exponential_path(L, tau, steps, left=U)
    xi.label = "xi"
    xi.meta = {"class": c.to_json(), "angles": angles}
    Pinv = symplectic_inverse(P)
    if np.max(np.abs(xi.end - Pinv)) > 1e-8:
        raise ValueError("reference path does not end at P^{-1}")
    xi.samples[-1] = Pinv
    return xi


def contractible_loop(n: int, tau: float = 1.0, seed: int = 0, steps: int | None = None,
                      scale: float = 0.7) -> SymplecticPath:
    """t -> exp(sin(pi t/tau) J S): a loop at I that retracts onto the constant loop."""
    rng = np.random.default_rng(seed)
    S = rng.normal(scale=scale, size=(2 * n, 2 * n))
    S = (S + S.T) / 2
    J = standard_J(n)
    if steps is None:
        steps = max(16, math.ceil(DEFAULT_SAMPLES_PER_TAU * tau))
    grid = np.linspace(0.0, tau, steps + 1)

    def evaluator(t):
        return expm(math.sin(math.pi * t / tau) * J @ S)

    def generator(t):
        # -J d/dt exp(s JS) exp(-s JS) = s' S
        return (math.pi / tau) * math.cos(math.pi * t / tau) * S

    samples = np.array([evaluator(t) for t in grid])
    samples[0] = np.eye(2 * n)
    samples[-1] = np.eye(2 * n)
    return SymplecticPath(grid, samples, generator, evaluator, (), "loop")


def save_path_json(path: SymplecticPath, fname) -> None:
    with open(fname, "w") as fh:
        json.dump(path.to_json(), fh)
