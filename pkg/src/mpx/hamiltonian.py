"""Hamiltonian models, shooting for P-boundary solutions, and period detection."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .paths import GeneratorField, SymplecticPath, fundamental_solution
from .symplectic import half_dim, standard_J

DEFAULT_STEPS = 4096
ENERGY_TOL = 1e-9
MAX_HALVINGS = 3


class SolverError(RuntimeError):
    """Shooting or integration failed."""


@dataclass
class HamiltonianModel:
    n: int
    H: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    P: np.ndarray
    params: dict = field(default_factory=dict)
    mu: float | None = None
    R0: float | None = None
    spec: dict | None = None

    def field(self, x: np.ndarray) -> np.ndarray:
        """J H'(x)."""
        g = self.grad(x)
        n = self.n
        return np.concatenate([-g[n:], g[:n]])


def radial_model(h, dh, d2h, P, params, mu=None, R0=None, spec=None) -> HamiltonianModel:
    """H(x) = h(|x|^2)."""
    P = np.asarray(P, dtype=float)
    n = half_dim(P)

    def H(x):
        return float(h(x @ x))

    def grad(x):
        return 2 * dh(x @ x) * x

    def hess(x):
        s = x @ x
        return 2 * dh(s) * np.eye(2 * n) + 4 * d2h(s) * np.outer(x, x)

    return HamiltonianModel(n, H, grad, hess, P, params, mu, R0, spec)


def radial_power(P, power: float = 4.0, coeff: float = 0.25) -> HamiltonianModel:
    """H = coeff |x|^power."""
    a = power / 2
    return radial_model(
        lambda s: coeff * s ** a,
        lambda s: coeff * a * s ** (a - 1) if s > 0 or a >= 1 else 0.0,
        lambda s: coeff * a * (a - 1) * s ** (a - 2) if s > 0 or a >= 2 else 0.0,
        P, {"power": power, "coeff": coeff}, mu=power, R0=1.0,
        spec={"type": "radial_power", "power": power, "coeff": coeff},
    )


def radial_poly(P, coeffs) -> HamiltonianModel:
    """H = sum_j coeffs[j] |x|^(2j+2)."""
    c = [float(v) for v in coeffs]
    top = len(c) - 1 + 1
    while top > 0 and c[top - 1] == 0:
        top -= 1
    mu = 2.0 * top if top else None
    return radial_model(
        lambda s: sum(cj * s ** (j + 1) for j, cj in enumerate(c)),
        lambda s: sum(cj * (j + 1) * s ** j for j, cj in enumerate(c)),
        lambda s: sum(cj * (j + 1) * j * s ** (j - 1) for j, cj in enumerate(c) if j),
        P, {"coeffs": c}, mu=mu, R0=1.0, spec={"type": "radial_poly", "coeffs": c},
    )


def quadratic_plus_quartic(P, Q) -> HamiltonianModel:
    """H = x^T Q x / 2 + |x|^4 / 4."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = half_dim(P)

    def H(x):
        s = x @ x
        return float(0.5 * x @ Q @ x + 0.25 * s * s)

    def grad(x):
        return Q @ x + (x @ x) * x

    def hess(x):
        return Q + (x @ x) * np.eye(2 * n) + 2 * np.outer(x, x)

    return HamiltonianModel(n, H, grad, hess, P, {"Q": Q.tolist()}, mu=None, R0=None,
                            spec={"type": "quadratic_plus_quartic", "Q": Q.tolist()})


def hamiltonian_from_spec(spec: dict, P) -> HamiltonianModel:
    kind = spec.get("type")
    if kind == "radial_power":
        return radial_power(P, spec.get("power", 4.0), spec.get("coeff", 0.25))
    if kind == "radial_poly":
        return radial_poly(P, spec["coeffs"])
    if kind == "quadratic_plus_quartic":
        return quadratic_plus_quartic(P, spec["Q"])
    raise ValueError(f"unknown hamiltonian type {kind!r}")


# ---------------------------------------------------------------------------
# validation


def validate_hamiltonian(model: HamiltonianModel, samples: int = 64, seed: int = 0,
                         orbit: "PSolutionOrbit | None" = None, tol: float = 1e-8) -> dict:
    """Sampled checks of symmetry, derivative consistency and the growth conditions."""
    rng = np.random.default_rng(seed)
    dim = 2 * model.n
    xs = rng.normal(size=(samples, dim)) * rng.uniform(0.2, 3.0, size=(samples, 1))
    P = model.P
    rep = {}

    sym = max(abs(model.H(P @ x) - model.H(x)) / (1 + abs(model.H(x))) for x in xs)
    rep["H1_symmetry"] = {"pass": bool(sym <= tol), "defect": sym}

    h = 1e-6
    g_err = 0.0
    h_err = 0.0
    for x in xs[:16]:
        g = model.grad(x)
        fd = np.array([(model.H(x + h * e) - model.H(x - h * e)) / (2 * h) for e in np.eye(dim)])
        g_err = max(g_err, np.max(np.abs(fd - g)) / (1 + np.max(np.abs(g))))
        Hx = model.hess(x)
        fdh = np.array([(model.grad(x + h * e) - model.grad(x - h * e)) / (2 * h) for e in np.eye(dim)])
        h_err = max(h_err, np.max(np.abs(fdh - Hx)) / (1 + np.max(np.abs(Hx))))
    rep["gradient_consistency"] = {"pass": bool(g_err <= 1e-6), "rel_error": g_err}
    rep["hessian_consistency"] = {"pass": bool(h_err <= 1e-6), "rel_error": h_err}

    rep["H2_nonnegative"] = {"pass": bool(min(model.H(x) for x in xs) >= 0)}

    unit = xs[0] / np.linalg.norm(xs[0])
    ratios = [model.H(r * unit) / r ** 2 for r in 10.0 ** -np.arange(1, 6)]
    rep["H3_superquadratic_at_zero"] = {
        "pass": bool(ratios[-1] < 1e-6 and ratios[-1] <= ratios[0]), "ratios": ratios}

    if model.mu is not None and model.mu > 2 and model.R0 is not None:
        far = [x for x in xs if np.linalg.norm(x) >= model.R0]
        ok = all(0 < model.mu * model.H(x) <= model.grad(x) @ x * (1 + 1e-12) for x in far)
        rep["H4_ambrosetti_rabinowitz"] = {"pass": bool(ok and far), "mu": model.mu, "R0": model.R0}
    else:
        rep["H4_ambrosetti_rabinowitz"] = {"pass": False, "reason": "no mu > 2 available"}

    away = [x for x in xs if np.linalg.norm(x) > 1e-3]
    min_eig = min(np.linalg.eigvalsh(model.hess(x)).min() for x in away)
    at_zero = float(np.linalg.eigvalsh(model.hess(np.zeros(dim))).min())
    rep["H5_hessian_positive_away_from_zero"] = {"pass": bool(min_eig > 0), "min_eig": float(min_eig)}
    rep["H5_literal_everywhere"] = {"pass": bool(at_zero > 0), "min_eig_at_zero": at_zero}

    if orbit is not None:
        ts = np.linspace(0, orbit.tau, 257)
        Hs = np.array([model.hess(orbit.x(t)) for t in ts])
        pointwise = float(min(np.linalg.eigvalsh(M).min() for M in Hs))
        w = np.full(len(ts), ts[1] - ts[0])
        w[[0, -1]] /= 2
        integral = float(np.linalg.eigvalsh(np.einsum("t,tij->ij", w, Hs)).min())
        rep["H5_along_orbit"] = {"pass": bool(pointwise >= -1e-12 and integral > 0),
                                 "min_pointwise": pointwise, "min_integral_eig": integral}
    return rep


# ---------------------------------------------------------------------------
# integration


def _rk4(model: HamiltonianModel, x0: np.ndarray, t_end: float, steps: int, variational: bool):
    n = model.n
    J = standard_J(n)
    h = t_end / steps
    xs = np.empty((steps + 1, 2 * n))
    xs[0] = x0
    x = np.array(x0, dtype=float)
    Y = np.eye(2 * n) if variational else None
    f = model.field
    for i in range(steps):
        if variational:
            k1 = f(x)
            K1 = J @ model.hess(x) @ Y
            x2 = x + 0.5 * h * k1
            k2 = f(x2)
            K2 = J @ model.hess(x2) @ (Y + 0.5 * h * K1)
            x3 = x + 0.5 * h * k2
            k3 = f(x3)
            K3 = J @ model.hess(x3) @ (Y + 0.5 * h * K2)
            x4 = x + h * k3
            k4 = f(x4)
            K4 = J @ model.hess(x4) @ (Y + h * K3)
            Y = Y + h / 6 * (K1 + 2 * K2 + 2 * K3 + K4)
        else:
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        xs[i + 1] = x
    return xs, Y


@dataclass
class Trajectory:
    ts: np.ndarray
    xs: np.ndarray
    energy_drift: float
    monodromy: np.ndarray | None = None

    @property
    def end(self) -> np.ndarray:
        return self.xs[-1]


def flow(model: HamiltonianModel, x0, t_end: float, steps: int | None = None,
         energy_tol: float = ENERGY_TOL, variational: bool = False, bound: float = 1e6) -> Trajectory:
    """RK4 solution of x' = J H'(x), halving the step while relative energy drift exceeds energy_tol."""
    x0 = np.asarray(x0, dtype=float)
    steps = steps or max(64, int(math.ceil(DEFAULT_STEPS * max(t_end, 1e-12))))
    E0 = model.H(x0)
    for _ in range(MAX_HALVINGS + 1):
        xs, Y = _rk4(model, x0, t_end, steps, variational)
        if not np.all(np.isfinite(xs)) or np.max(np.abs(xs)) > bound:
            raise SolverError("trajectory diverged")
        E = np.array([model.H(x) for x in xs[:: max(1, steps // 256)]] + [model.H(xs[-1])])
        drift = float(np.max(np.abs(E - E0)) / max(1.0, abs(E0)))
        if drift <= energy_tol:
            return Trajectory(np.linspace(0.0, t_end, steps + 1), xs, drift, Y)
        steps *= 2
    raise SolverError(f"energy drift {drift:.3g} above tolerance after step halving")


# ---------------------------------------------------------------------------
# P-solutions


@dataclass
class PSolutionOrbit:
    model: HamiltonianModel
    x0: np.ndarray
    tau: float
    k: int
    base: Trajectory
    residual: float
    newton_steps: int = 0
    _spline: CubicHermiteSpline | None = field(default=None, repr=False)

    @property
    def energy_drift(self) -> float:
        return self.base.energy_drift

    @property
    def P(self) -> np.ndarray:
        return self.model.P

    @property
    def energy(self) -> float:
        return self.model.H(self.x0)

    def _interp(self) -> CubicHermiteSpline:
        if self._spline is None:
            dx = np.array([self.model.field(x) for x in self.base.xs])
            self._spline = CubicHermiteSpline(self.base.ts, self.base.xs, dx, axis=0)
        return self._spline

    def x(self, t) -> np.ndarray:
        """Extended orbit x(t) = P^j x(t - j tau), for scalar or array t >= 0."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        ts = np.mod(ts, self.k * self.tau)
        j = np.minimum(np.floor(ts / self.tau).astype(int), self.k - 1)
        local = self._interp()(ts - j * self.tau)
        powers = np.array([np.linalg.matrix_power(self.P, i) for i in range(self.k)])
        out = np.einsum("tij,tj->ti", powers[j], local)
        return out[0] if np.ndim(t) == 0 else out

    @property
    def amplitude(self) -> float:
        return float(np.max(np.linalg.norm(self.base.xs, axis=1)))

    @property
    def degenerate(self) -> bool:
        """Constant orbit: the vector field vanishes at x0."""
        return float(np.linalg.norm(self.model.field(self.x0))) <= 1e-12 * max(1.0, np.linalg.norm(self.x0))

    def summary(self) -> dict:
        return {"x0": self.x0.tolist(), "tau": self.tau, "k": self.k, "residual": self.residual,
                "energy_drift": self.energy_drift, "energy": self.energy,
                "newton_steps": self.newton_steps, "degenerate": self.degenerate}

    def to_csv(self, fname, samples_per_tau: int = 256) -> None:
        ts = np.linspace(0, self.k * self.tau, self.k * samples_per_tau + 1)
        xs = self.x(ts)
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i + 1}" for i in range(2 * self.model.n)] + ["H"])
            for t, x in zip(ts, xs):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(self.model.H(x))])


def _residual(model, x0, tau, steps, variational):
    tr = flow(model, x0, tau, steps, variational=variational)
    return tr, tr.end - model.P @ x0


def shoot(model: HamiltonianModel, tau: float, k: int, x0_guess, max_iter: int = 40,
          tol: float = 1e-10, steps: int | None = None, trivial_ratio: float = 1e-3,
          scale: float | None = None) -> PSolutionOrbit:
    """Newton on F(x0) = x(tau; x0) - P x0 with a phase condition against the flow direction."""
    x = np.asarray(x0_guess, dtype=float)
    scale = scale or max(1.0, float(np.linalg.norm(x)))
    if np.linalg.norm(x) < trivial_ratio * scale:
        raise SolverError("initial guess is the trivial solution")
    P = model.P
    dim = 2 * model.n
    tr, F = _residual(model, x, tau, steps, True)
    it = 0
    while np.linalg.norm(F) > tol * scale:
        if it >= max_iter:
            raise SolverError(f"Newton stagnated at residual {np.linalg.norm(F):.3g}")
        f0 = model.field(x)
        K = np.zeros((dim + 1, dim + 1))
        K[:dim, :dim] = tr.monodromy - P
        K[:dim, dim] = f0
        K[dim, :dim] = f0
        rhs = np.concatenate([-F, [0.0]])
        dx = np.linalg.lstsq(K, rhs, rcond=1e-12)[0][:dim]
        norm0 = np.linalg.norm(F)
        step = 1.0
        while True:
            xn = x + step * dx
            trn, Fn = _residual(model, xn, tau, steps, True)
            if np.linalg.norm(Fn) < norm0 or step < 1e-4:
                break
            step /= 2
        x, tr, F = xn, trn, Fn
        it += 1
        if np.linalg.norm(x) < trivial_ratio * scale:
            raise SolverError("Newton converged toward the trivial solution")
    return PSolutionOrbit(model, x, tau, k, tr, float(np.linalg.norm(F)), it)


def solve_with_restarts(model: HamiltonianModel, tau: float, k: int, seed: int = 0,
                        restarts: int = 8, annulus=(0.5, 2.0), guess=None, workers: int = 1, **kw):
    """Shoot from `guess` and from random points on an annulus; return (best, all orbits, failures)."""
    rng = np.random.default_rng(seed)
    dim = 2 * model.n
    starts = [] if guess is None else [np.asarray(guess, dtype=float)]
    for _ in range(restarts):
        v = rng.normal(size=dim)
        starts.append(v / np.linalg.norm(v) * rng.uniform(*annulus))
    def attempt(x0):
        try:
            return shoot(model, tau, k, x0, **kw)
        except SolverError as exc:
            return str(exc)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(attempt, starts))
    else:
        outcomes = [attempt(x0) for x0 in starts]
    found = [o for o in outcomes if isinstance(o, PSolutionOrbit)]
    failures = [o for o in outcomes if isinstance(o, str)]
    found.sort(key=lambda o: o.residual)
    return (found[0] if found else None), found, failures


def extend_orbit(sol: PSolutionOrbit, samples_per_tau: int = 256):
    """Samples of x on [0, k tau] and the closure defect |x(k tau) - x(0)|."""
    k, tau = sol.k, sol.tau
    ts = np.linspace(0, k * tau, k * samples_per_tau + 1)
    xs = sol.x(ts[:-1])
    # segment k-1 ends at P^{k-1} x(tau), which must close up on x0
    last = np.linalg.matrix_power(sol.P, k - 1) @ sol.base.end
    closure = float(np.linalg.norm(last - sol.x0))
    xs = np.vstack([xs, last])
    return ts, xs, closure


@dataclass
class PeriodScan:
    lambda_min: float | None
    fraction: Fraction | None
    grid: list
    degenerate: bool

    def to_json(self) -> dict:
        return {"lambda_min": self.lambda_min,
                "fraction_of_ktau": None if self.fraction is None else str(self.fraction),
                "degenerate": self.degenerate, "grid": self.grid}


def minimal_P_symmetric_period(sol: PSolutionOrbit, tol: float = 1e-6, q_max: int | None = None,
                               samples_per_tau: int = 256) -> PeriodScan:
    """Least lambda = k tau * a / q (q <= q_max) with sup_t |x(t + lambda/k) - P x(t)| <= tol * amplitude."""
    k, tau = sol.k, sol.tau
    q_max = q_max or 2 * k + 2
    ts = np.linspace(0, k * tau, k * samples_per_tau, endpoint=False)
    base = sol.x(ts)
    Pbase = base @ sol.P.T
    amp = max(sol.amplitude, 1e-300)
    cands = sorted({Fraction(a, q) for q in range(1, q_max + 1) for a in range(1, q + 1)})
    grid = []
    best = None
    for fr in cands:
        lam = float(fr) * k * tau
        err = float(np.max(np.linalg.norm(sol.x(ts + lam / k) - Pbase, axis=1)) / amp)
        ok = err <= tol
        if fr.numerator == 1:
            grid.append({"q": fr.denominator, "lambda": lam, "defect": err, "pass": ok})
        if ok and best is None:
            best = fr
    degenerate = sol.degenerate
    if degenerate:
        return PeriodScan(None, None, grid, True)
    return PeriodScan(None if best is None else float(best) * k * tau, best, grid, False)


def linearization_generator(sol: PSolutionOrbit, check_tol: float = 1e-8) -> GeneratorField:
    """B(t) = H''(x(t)) along the extended orbit."""
    model = sol.model

    def batch(ts):
        xs = np.atleast_2d(sol.x(np.asarray(ts, dtype=float)))
        return np.array([model.hess(x) for x in xs])

    G = GeneratorField(model.n, sol.tau, lambda t: batch(np.array([t]))[0], sol.P,
                       {"type": "orbit_hessian"}, batch)
    defect = G.compatibility_defect()
    if defect > check_tol * max(1.0, G.norm_bound(sol.tau)):
        raise SolverError(f"linearization not P-compatible (defect {defect:.3g})")
    return G


def linearized_path(sol: PSolutionOrbit, steps: int | None = None) -> SymplecticPath:
    return fundamental_solution(linearization_generator(sol), sol.tau, steps)


__all__ = [
    "HamiltonianModel", "PSolutionOrbit", "PeriodScan", "SolverError", "Trajectory",
    "radial_power", "radial_poly", "quadratic_plus_quartic", "hamiltonian_from_spec",
    "validate_hamiltonian", "flow", "shoot", "solve_with_restarts", "extend_orbit",
    "minimal_P_symmetric_period", "linearization_generator", "linearized_path",
]
