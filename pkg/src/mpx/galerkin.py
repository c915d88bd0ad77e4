"""Galerkin counting of the Morse index of A - B on W_P.

W_P = {z : z(t + tau) = P z(t)} with <Az, z> = int_0^tau (-J z', z) and
<Bz, z> = int_0^tau (B(t) z, z).  In coordinates z = U w, where U^{-1} P U = N^{-1}
is a diamond of rotations, A is diagonal on the modes

    w(t) = R(lambda t) e,   R(lambda tau) = block of N^{-1},

so lambda = (2 pi j - theta_b) / tau for block angle theta_b of N.  The
truncated form diag(lambda) - G has m + i^P(B) negative eigenvalues and
nu^P(B) near-zero ones once m is large.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .index import kernel_dim
from .paths import GeneratorField, fundamental_solution
from .symplectic import half_dim, symplectic_conjugator

SCHEDULE_START = 64
SCHEDULE_STEP = 32
MAX_TRUNCATION = 512
STABLE_LEVELS = 3
ZERO_TOL = 1e-7
D_CAP = 1e-3


class GalerkinError(RuntimeError):
    """Counts did not stabilize within the truncation budget."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass
class WpBasis:
    P: np.ndarray
    k: int
    tau: float
    U: np.ndarray
    angles: np.ndarray  # block angles theta_b of N
    block: np.ndarray  # per mode: block index
    slot: np.ndarray  # per mode: 0 -> e_q, 1 -> e_p
    lam: np.ndarray  # per mode: A-eigenvalue
    m: int

    @property
    def n(self) -> int:
        return len(self.angles)

    @property
    def size(self) -> int:
        return len(self.lam)

    @property
    def zero_modes(self) -> int:
        return int(np.sum(self.lam == 0))

    def evaluate(self, ts) -> np.ndarray:
        """Mode values in the conjugated coordinates, shape (len(ts), size, 2n), L^2-normalized on [0, tau]."""
        ts = np.asarray(ts, dtype=float)
        n = self.n
        ph = np.outer(ts, self.lam)
        c, s = np.cos(ph), np.sin(ph)
        out = np.zeros((len(ts), self.size, 2 * n))
        q = self.block
        p = self.block + n
        # R(x) e_q = (cos x, sin x), R(x) e_p = (-sin x, cos x) in the (q_b, p_b) plane
        is_q = self.slot == 0
        idx = np.arange(self.size)
        out[:, idx, q] = np.where(is_q, c, -s)
        out[:, idx, p] = np.where(is_q, s, c)
        return out / math.sqrt(self.tau)

    def evaluate_original(self, ts) -> np.ndarray:
        """Modes z = U w in the original coordinates."""
        return np.einsum("ij,tmj->tmi", self.U, self.evaluate(ts))


def _block_angles(N: np.ndarray) -> np.ndarray:
    n = half_dim(N)
    return np.array([math.atan2(N[n + b, b], N[b, b]) % (2 * math.pi) for b in range(n)])


def build_wp_basis(P, k: int, tau: float, m: int) -> WpBasis:
    """m negative and m positive modes of smallest |lambda|, plus all zero modes."""
    P = np.asarray(P, dtype=float)
    U, N = symplectic_conjugator(P, k)
    angles = _block_angles(N)
    jmax = m // 2 + 2
    lam, blk = [], []
    for b, th in enumerate(angles):
        base = -th if th > 1e-12 else 0.0
        for j in range(-jmax, jmax + 1):
            lam.append((2 * math.pi * j + base) / tau)
            blk.append(b)
    lam = np.array(lam)
    blk = np.array(blk)
    lam[np.abs(lam) < 1e-12] = 0.0

    def pick(mask, key):
        idx = np.nonzero(mask)[0]
        return idx[np.argsort(key[idx], kind="stable")]

    neg = pick(lam < 0, -lam)
    pos = pick(lam > 0, lam)
    zero = np.nonzero(lam == 0)[0]
    # each lambda carries two real modes; take pairs until m modes on each side
    half = (m + 1) // 2
    chosen = np.concatenate([neg[:half], zero, pos[:half]])
    lam_modes = np.repeat(lam[chosen], 2)
    blk_modes = np.repeat(blk[chosen], 2)
    slot = np.tile([0, 1], len(chosen))
    if m % 2:
        # drop one mode on each side to keep exactly m
        drop = [0, len(lam_modes) - 1]
        keep = np.setdiff1d(np.arange(len(lam_modes)), drop)
        lam_modes, blk_modes, slot = lam_modes[keep], blk_modes[keep], slot[keep]
    order = np.argsort(lam_modes, kind="stable")
    return WpBasis(P, k, tau, U, angles, blk_modes[order], slot[order], lam_modes[order], m)


def _quadrature_nodes(basis: WpBasis, extra_cycles: int) -> int:
    # the integrand is tau-periodic, so the trapezoid rule is spectrally accurate
    cycles = 2 * np.max(np.abs(basis.lam)) * basis.tau / (2 * math.pi) + extra_cycles
    return int(2 * cycles + 64)


def assemble_quadratic_form(B: GeneratorField, basis: WpBasis, tol: float = 1e-10,
                            extra_cycles: int = 16, max_doublings: int = 4) -> np.ndarray:
    """Matrix of <(A - B) z_i, z_j> in the L^2-orthonormal mode basis."""
    U = basis.U
    nodes = _quadrature_nodes(basis, extra_cycles)

    def gram(N):
        ts = np.arange(N) * (basis.tau / N)
        Bt = np.einsum("ji,tjk,kl->til", U, B.many(ts), U)
        phi = basis.evaluate(ts)
        BPhi = np.einsum("tij,tmj->tmi", Bt, phi)
        G = np.einsum("tmi,tli->ml", phi, BPhi) * (basis.tau / N)
        return (G + G.T) / 2

    G = gram(nodes)
    for _ in range(max_doublings):
        G2 = gram(2 * nodes)
        err = np.max(np.abs(G2 - G))
        G, nodes = G2, 2 * nodes
        if err <= tol:
            break
    else:
        raise GalerkinError(f"quadrature did not converge (last change {err:.3g})")
    return np.diag(basis.lam) - G


@dataclass
class GalerkinSpectrum:
    m: int
    d: float
    eigs: np.ndarray
    counts: tuple[int, int, int]
    stabilized: bool = False

    def to_row(self) -> dict:
        lo, mid, hi = self.counts
        return {"m": self.m, "d": self.d, "m_minus": lo, "m_zero": mid, "m_plus": hi}


def count_spectrum(matrix, d: float, m: int = 0, scale=None) -> GalerkinSpectrum:
    """Counts of eigenvalues below -d, in [-d, d], above d.

    With `scale` the congruent matrix C Q C (C = diag(scale)) is used, which has
    the same inertia but a better-conditioned zero cluster.
    """
    Q = np.asarray(matrix, dtype=float)
    if scale is not None:
        Q = Q * np.outer(scale, scale)
    eigs = np.linalg.eigvalsh((Q + Q.T) / 2)
    lo = int(np.sum(eigs < -d))
    hi = int(np.sum(eigs > d))
    return GalerkinSpectrum(m, d, eigs, (lo, len(eigs) - lo - hi, hi))


def _scaling(basis: WpBasis) -> np.ndarray:
    return 1.0 / np.sqrt(1.0 + np.abs(basis.lam) * basis.tau / (2 * math.pi))


@dataclass
class GalerkinResult:
    i: int
    nu: int
    stabilized_at: int
    d: float
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"i": self.i, "nu": self.nu, "stabilized_at": self.stabilized_at, "d": self.d,
                "trace": [s.to_row() for s in self.trace]}

    def write_audit_csv(self, fname) -> None:
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "d", "m_minus", "m_zero", "m_plus"])
            for s in self.trace:
                lo, mid, hi = s.counts
                w.writerow([s.m, repr(float(s.d)), lo, mid, hi])


def galerkin_index(B: GeneratorField, P, k: int, tau: float, start: int = SCHEDULE_START,
                   step: int = SCHEDULE_STEP, max_m: int = MAX_TRUNCATION, d_cap: float = D_CAP,
                   zero_tol: float = ZERO_TOL) -> GalerkinResult:
    """(i^P(B), nu^P(B)) from stabilized Galerkin counts."""
    levels = list(range(start, max_m + 1, step))
    spectra = []
    history = []
    for m in levels:
        basis = build_wp_basis(P, k, tau, m)
        Q = assemble_quadratic_form(B, basis)
        raw = count_spectrum(Q, 0.0, m, _scaling(basis))
        nonzero = np.abs(raw.eigs)[np.abs(raw.eigs) > zero_tol]
        sigma = float(nonzero.min()) if len(nonzero) else 1.0
        d = min(d_cap, sigma / 4)
        spec = count_spectrum(Q, d, m, _scaling(basis))
        spectra.append(spec)
        history.append((spec.counts[0] - m, spec.counts[1]))
        if len(history) >= STABLE_LEVELS and len(set(history[-STABLE_LEVELS:])) == 1:
            spec.stabilized = True
            i, nu = history[-1]
            return GalerkinResult(i, nu, m, d, spectra)
    raise GalerkinError("Galerkin counts did not stabilize", spectra)


def nu_P(B: GeneratorField, P, tau: float, tol: float = 1e-6) -> int:
    """dim ker(gamma_B(tau) - P) from the fundamental solution."""
    g = fundamental_solution(B, tau)
    return kernel_dim(g.end - np.asarray(P, dtype=float), tol)


def _combo(B1: GeneratorField, B2: GeneratorField, s: float) -> GeneratorField:
    def batch(ts):
        return (1 - s) * B1.many(ts) + s * B2.many(ts)

    return GeneratorField(B1.n, B1.tau, lambda t: batch(np.array([t]))[0], B1.p_matrix, None, batch)


def _sigma_min(B: GeneratorField, P, tau: float) -> float:
    g = fundamental_solution(B, tau)
    A = g.end - P
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def nullity_sum_check(B1: GeneratorField, B2: GeneratorField, P, k: int, tau: float,
                      grid: int = 200, tol: float = 1e-6):
    """i^P(B2) - i^P(B1) against the sum of nu^P((1-s)B1 + sB2) over s in [0, 1).

    Returns (lhs, rhs, passed, points) with points the located (s, nu) pairs.
    """
    from scipy.optimize import minimize_scalar

    P = np.asarray(P, dtype=float)
    gap = min(np.linalg.eigvalsh(D).min() for D in
              B2.many(np.linspace(0, tau, 33)) - B1.many(np.linspace(0, tau, 33)))
    if gap <= 0:
        raise ValueError("B2 - B1 must be positive definite")
    ss = np.linspace(0.0, 1.0, grid + 1)
    sig = np.array([_sigma_min(_combo(B1, B2, s), P, tau) for s in ss])
    points = []
    if sig[0] <= tol:
        points.append((0.0, nu_P(B1, P, tau, tol)))
    for i in range(1, grid):
        if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]:
            res = minimize_scalar(lambda s: _sigma_min(_combo(B1, B2, s), P, tau),
                                  bounds=(ss[i - 1], ss[i + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if res.fun <= tol and res.x < 1.0 - 1e-9:
                nu = nu_P(_combo(B1, B2, res.x), P, tau, max(tol, 10 * res.fun))
                if not points or abs(points[-1][0] - res.x) > 1e-6:
                    points.append((float(res.x), nu))
    rhs = sum(nu for _, nu in points)
    lhs = galerkin_index(B2, P, k, tau).i - galerkin_index(B1, P, k, tau).i
    return lhs, rhs, lhs == rhs, points


__all__ = [
    "WpBasis", "GalerkinSpectrum", "GalerkinResult", "GalerkinError", "build_wp_basis",
    "assemble_quadratic_form", "count_spectrum", "galerkin_index", "nullity_sum_check", "nu_P",
]
