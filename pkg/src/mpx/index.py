"""Maslov-type omega-indices, Maslov (P, omega)-indices and the iteration identities.

The omega-index of a path gamma is the spectral flow of the Lagrangian pair
(Gr gamma(t), Gr(omega I)) in (C^{4n}, (-J) + J), computed as the lifted phase
of a unitary 2n x 2n matrix W(t) whose eigenvalue-1 multiplicity is
dim ker(gamma(t) - omega).  With RS-style half counts at the ends,

    i_omega(gamma) = mu(gamma) - nu_omega(gamma(end)) / 2,

which gives i_1(const I) = -n, i_1(R(bt)) = 1 for 0 < b tau < 2 pi and
i_{-1}(const I) = 0.  Each eigenvalue of W crossing 1 in the positive
direction is a positive crossing of the crossing form v* B(t) v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .paths import (
    SymplecticPath,
    classical_iterate,
    concatenate,
    p_iterate,
    reference_xi,
)
from .symplectic import (
    ceil_E,
    elliptic_height,
    half_dim,
    splitting_numbers,
    standard_J,
    symplectic_inverse,
    unit_spectrum,
)

NULLITY_TOL = 1e-6
SYMPLECTIC_TOL = 1e-6
MAX_STEP_ANGLE = 0.5
MAX_REFINE = 12


class IndexError_(RuntimeError):
    """Index computation could not be certified as an integer."""


# ---------------------------------------------------------------------------
# points of the unit circle


@dataclass(frozen=True)
class UnitRational:
    """omega = exp(2 pi i * turns); turns is a Fraction in [0, 1) or a float probe."""

    turns: Fraction | float

    @classmethod
    def of(cls, a: int, b: int = 1) -> "UnitRational":
        return cls(Fraction(a, b) % 1)

    @classmethod
    def parse(cls, text: str) -> "UnitRational":
        if "/" in text:
            a, b = text.split("/")
            return cls.of(int(a), int(b))
        return cls.of(int(text), 1)

    @property
    def exact(self) -> bool:
        return isinstance(self.turns, Fraction)

    @property
    def a(self):
        return self.turns.numerator if self.exact else None

    @property
    def b(self):
        return self.turns.denominator if self.exact else None

    @property
    def value(self) -> complex:
        if self.exact:
            if self.turns == 0:
                return 1.0 + 0j
            if self.turns == Fraction(1, 2):
                return -1.0 + 0j
        return complex(np.exp(2j * math.pi * float(self.turns)))

    @property
    def is_one(self) -> bool:
        return self.exact and self.turns == 0

    def conj(self) -> "UnitRational":
        return UnitRational((-self.turns) % 1)

    def rotate(self, eps_turns: float) -> "UnitRational":
        return UnitRational((float(self.turns) + eps_turns) % 1.0)

    def roots(self, m: int) -> list["UnitRational"]:
        """All omega with omega^m = self."""
        if not self.exact:
            return [UnitRational((float(self.turns) + j) / m % 1.0) for j in range(m)]
        return [UnitRational(((self.turns + j) / m) % 1) for j in range(m)]

    def to_json(self) -> dict:
        if self.exact:
            return {"a": self.a, "b": self.b}
        return {"angle": 2 * math.pi * float(self.turns)}

    def __str__(self) -> str:
        return f"{self.a}/{self.b}" if self.exact else f"{float(self.turns):.6g}turns"


ONE = UnitRational.of(0)
MINUS_ONE = UnitRational.of(1, 2)


def _as_omega(omega) -> UnitRational:
    if isinstance(omega, UnitRational):
        return omega
    if isinstance(omega, (Fraction, int)):
        return UnitRational(Fraction(omega) % 1)
    if isinstance(omega, str):
        return UnitRational.parse(omega)
    raise TypeError(f"cannot interpret {omega!r} as a point of U")


# ---------------------------------------------------------------------------
# records


@dataclass
class Crossing:
    t: float
    kernel_dim: int
    signature: int
    jump: float
    regular: bool
    endpoint: bool = False

    def to_json(self) -> dict:
        return {"t": self.t, "kernel_dim": self.kernel_dim, "signature": self.signature,
                "jump": self.jump, "regular": self.regular, "endpoint": self.endpoint}


@dataclass
class OmegaIndexRecord:
    omega: UnitRational
    i: int
    nu: int
    method: str = "crossing"
    crossings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"omega": self.omega.to_json(), "i": self.i, "nu": self.nu,
                "method": self.method, "crossings": [c.to_json() for c in self.crossings]}


# ---------------------------------------------------------------------------
# Lagrangian unitaries


def _frame_unitary(n: int, top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    """Unitary of the Lagrangian spanned by [top; bottom] (batched over axis 0)."""
    s = 1 / math.sqrt(2)
    # E+ of sqrt(-1)((-J) + J) is E-(iJ) + E+(iJ); rows below are the adjoint bases
    def plus_iJ_adj(X):  # Y+^* X, Y+ = [I; iI]/sqrt2
        return s * (X[..., :n, :] - 1j * X[..., n:, :])

    def minus_iJ_adj(X):  # Y-^* X, Y- = [I; -iI]/sqrt2
        return s * (X[..., :n, :] + 1j * X[..., n:, :])

    a = np.concatenate([minus_iJ_adj(top), plus_iJ_adj(bottom)], axis=-2)
    b = np.concatenate([plus_iJ_adj(top), minus_iJ_adj(bottom)], axis=-2)
    return np.swapaxes(np.linalg.solve(np.swapaxes(a, -1, -2), np.swapaxes(b, -1, -2)), -1, -2)


def lagrangian_unitary(Ms: np.ndarray, omega: UnitRational) -> np.ndarray:
    """W with dim ker(W - I) = dim ker(M - omega I), for a batch of matrices M."""
    Ms = np.asarray(Ms)
    single = Ms.ndim == 2
    if single:
        Ms = Ms[None]
    n = Ms.shape[-1] // 2
    eye = np.eye(2 * n)
    # orthonormal frame of Gr(M) = span[V c; U s'] from M = U diag(sv) V^T; avoids
    # the ill-conditioned frame [I; M] for strongly hyperbolic M
    u, sv, vt = np.linalg.svd(Ms)
    c = 1.0 / np.sqrt(1.0 + sv * sv)
    top = (np.swapaxes(vt, -1, -2) * c[..., None, :]).astype(complex)
    bottom = (u * (sv * c)[..., None, :]).astype(complex)
    UM = _frame_unitary(n, top, bottom)
    Uw = _frame_unitary(n, eye[None].astype(complex), (omega.value * eye)[None])[0]
    W = Uw.conj().T @ UM
    return W[0] if single else W


def kernel_dim(A: np.ndarray, tol: float = NULLITY_TOL) -> int:
    """Singular values below tol, plus a rounding allowance for large-norm matrices."""
    s = np.linalg.svd(A, compute_uv=False)
    top = float(s[0]) if len(s) else 0.0
    return int(np.sum(s <= tol + 1e-12 * top))


def _s_terms(W: np.ndarray, nu: int | None, snap: float) -> float:
    """sum over eigenvalues e^{2 pi i x} (x in [0,1)) of x - 1/2, eigenvalues at 1 contributing 0.

    If nu is given, exactly the nu eigenvalues closest to 1 are treated as 1.
    """
    ev = np.linalg.eigvals(W)
    x = (np.angle(ev) / (2 * math.pi)) % 1.0
    dist = np.minimum(x, 1 - x)
    order = np.argsort(dist)
    at_one = np.zeros(len(ev), dtype=bool)
    if nu is None:
        at_one = dist <= snap
    else:
        at_one[order[:nu]] = True
    return float(np.sum(np.where(at_one, 0.0, x - 0.5)))


def _phase_steps(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Principal phase increment of det and max eigen-angle per step."""
    R = np.einsum("tij,tkj->tik", W[1:], W[:-1].conj())
    ev = np.linalg.eigvals(R)
    ang = np.angle(ev)
    return ang.sum(axis=1), np.abs(ang).max(axis=1)


@dataclass
class _Flow:
    grid: np.ndarray
    mats: np.ndarray
    W: np.ndarray
    phase: np.ndarray  # lifted arg det W / 2 pi at grid points


def _flow(path: SymplecticPath, omega: UnitRational, left=None) -> _Flow:
    """Sampled W(t) for M(t) = left @ gamma(t), refined until each step is small."""
    grid = np.asarray(path.grid, dtype=float)
    mats = path.samples if left is None else np.einsum("ij,tjk->tik", left, path.samples)
    n = mats.shape[-1] // 2
    J = standard_J(n)
    defect = float(np.max(np.abs(np.einsum("tji,jk,tkl->til", mats, J, mats) - J)))
    if defect > SYMPLECTIC_TOL:
        raise IndexError_(f"path samples are not symplectic (defect {defect:.3g}); "
                          "the path is too hyperbolic for double precision")
    W = lagrangian_unitary(mats, omega)
    for _ in range(MAX_REFINE):
        dphi, big = _phase_steps(W)
        bad = np.nonzero(big > MAX_STEP_ANGLE)[0]
        if len(bad) == 0:
            break
        if path.evaluator is None:
            raise IndexError_("path too coarse for phase tracking and has no evaluator")
        mids = 0.5 * (grid[bad] + grid[bad + 1])
        new = np.array([path(t) for t in mids])
        if left is not None:
            new = np.einsum("ij,tjk->tik", left, new)
        Wn = lagrangian_unitary(new, omega)
        grid = np.insert(grid, bad + 1, mids)
        mats = np.insert(mats, bad + 1, new, axis=0)
        W = np.insert(W, bad + 1, Wn, axis=0)
    else:
        raise IndexError_("phase tracking did not resolve after refinement")
    phase = np.concatenate([[0.0], np.cumsum(dphi)]) / (2 * math.pi)
    return _Flow(grid, mats, W, phase)


def _spectral_flow(fl: _Flow, nu_start: int, nu_end: int, snap: float = 1e-7) -> float:
    """mu = sum_j h(phi_j(end)) - h(phi_j(start)), half counts at the ends."""
    c0 = fl.phase[0] - _s_terms(fl.W[0], nu_start, snap)
    c1 = fl.phase[-1] - _s_terms(fl.W[-1], nu_end, snap)
    return c1 - c0


def _as_int(x: float, what: str) -> int:
    r = round(x)
    if abs(x - r) > 1e-6:
        raise IndexError_(f"{what} is not an integer: {x!r}")
    return int(r)


def _audit_crossings(path: SymplecticPath, fl: _Flow, omega: UnitRational, left=None,
                     snap: float = 1e-7) -> list[Crossing]:
    """Locate jumps of the running count and evaluate the crossing form there."""
    counts = np.array([fl.phase[i] - _s_terms(fl.W[i], None, snap) for i in range(len(fl.grid))])
    out = []
    n = path.n
    lam = omega.value
    on_grid = [kernel_dim(m.astype(complex) - lam * np.eye(2 * n), 1e-7) > 0 for m in fl.mats]
    for i in np.nonzero(np.abs(np.diff(counts)) > 0.25)[0]:
        lo, hi = fl.grid[i], fl.grid[i + 1]
        c_lo = counts[i]
        W_lo = fl.W[i]

        def count_at(t):
            M = path(t) if path.evaluator is not None else None
            if left is not None:
                M = left @ M
            Wt = lagrangian_unitary(M, omega)
            d = np.angle(np.linalg.eigvals(Wt @ W_lo.conj().T)).sum() / (2 * math.pi)
            return fl.phase[i] + d - _s_terms(Wt, None, snap), M

        t_star = 0.5 * (lo + hi)
        if on_grid[i] or on_grid[i + 1]:
            j = i if on_grid[i] else i + 1
            t_star, M = float(fl.grid[j]), fl.mats[j]
        elif path.evaluator is not None:
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                c_mid, _ = count_at(mid)
                if abs(c_mid - c_lo) < 0.25:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-11:
                    break
            t_star = 0.5 * (lo + hi)
            M = count_at(t_star)[1]
        else:
            M = fl.mats[i + 1]
        A = M.astype(complex) - lam * np.eye(2 * n)
        u, s, vh = np.linalg.svd(A)
        gap = s[-1] if len(s) else 0.0
        dim = max(1, int(np.sum(s <= max(1e-5, 100 * gap) * max(1.0, s[0]))))
        K = vh[-dim:].conj().T
        sig, regular = 0, False
        if path.generator is not None:
            B = path.generator(t_star)
            # generator of left @ gamma is left^{-T} B left^{-1}
            gv = K if left is None else symplectic_inverse(left) @ K
            Q = gv.conj().T @ B @ gv
            w = np.linalg.eigvalsh((Q + Q.conj().T) / 2)
            scale = max(1.0, np.linalg.norm(B, 2))
            regular = bool(np.all(np.abs(w) > 1e-8 * scale))
            sig = int(np.sum(w > 0) - np.sum(w < 0))
        jump = float(counts[i + 1] - counts[i])
        if out and abs(out[-1].t - t_star) < 1e-7:
            out[-1].jump += jump
            continue
        out.append(Crossing(float(t_star), dim, sig, jump, regular))
    t0, t1 = fl.grid[0], fl.grid[-1]
    for c in out:
        c.endpoint = bool(min(abs(c.t - t0), abs(c.t - t1)) < 1e-7)
    return out


def crossings_consistent(crossings) -> bool:
    """Each regular crossing moves the count by its signature (half of it at an end)."""
    for c in crossings:
        if not c.regular:
            continue
        want = c.signature / 2 if c.endpoint else c.signature
        if abs(c.jump - want) > 1e-6:
            return False
    return True


# ---------------------------------------------------------------------------
# indices


def nullity(gamma: SymplecticPath, P, omega, tol: float = NULLITY_TOL) -> int:
    """dim_C ker(gamma(end) - omega P)."""
    omega = _as_omega(omega)
    P = np.asarray(P, dtype=float)
    return kernel_dim(gamma.end.astype(complex) - omega.value * P, tol)


def omega_index(gamma: SymplecticPath, omega=ONE, audit: bool = False) -> OmegaIndexRecord:
    """(i_omega, nu_omega) of a path starting at I."""
    omega = _as_omega(omega)
    n = gamma.n
    eye = np.eye(2 * n)
    nu_start = 2 * n if omega.is_one else kernel_dim(eye - omega.value * eye)
    nu_end = nullity(gamma, eye, omega)
    fl = _flow(gamma, omega)
    mu = _spectral_flow(fl, nu_start, nu_end)
    i = _as_int(mu - nu_end / 2, "omega-index")
    crossings = _audit_crossings(gamma, fl, omega) if audit else []
    return OmegaIndexRecord(omega, i, nu_end, "crossing", crossings)


def maslov_P_index(gamma: SymplecticPath, P, omega=ONE, xi: SymplecticPath | None = None,
                   audit: bool = False) -> OmegaIndexRecord:
    """i^P_omega(gamma) = i_omega(P^{-1} gamma * xi) - i_omega(xi), nu = dim ker(gamma(end) - omega P)."""
    omega = _as_omega(omega)
    P = np.asarray(P, dtype=float)
    if xi is None:
        xi = reference_xi(P, tau=gamma.horizon)
    Pinv = symplectic_inverse(P)
    if np.max(np.abs(xi.end - Pinv)) > 1e-7:
        raise ValueError("xi must end at P^{-1}")
    joined = concatenate(gamma, xi)
    whole = omega_index(joined, omega, audit)
    part = omega_index(xi, omega)
    nu = nullity(gamma, P, omega)
    return OmegaIndexRecord(omega, whole.i - part.i, nu, "crossing", whole.crossings)


def maslov_P_index_direct(gamma: SymplecticPath, P, omega=ONE, audit: bool = False) -> OmegaIndexRecord:
    """Same value as `maslov_P_index`, from the flow of P^{-1} gamma(t) alone.

    i^P_omega = mu(P^{-1} gamma) + dim ker(P^{-1} - omega)/2 - nu/2.
    """
    omega = _as_omega(omega)
    P = np.asarray(P, dtype=float)
    Pinv = symplectic_inverse(P)
    n = gamma.n
    nu_start = kernel_dim(Pinv.astype(complex) - omega.value * np.eye(2 * n))
    nu_end = nullity(gamma, P, omega)
    fl = _flow(gamma, omega, left=Pinv)
    mu = _spectral_flow(fl, nu_start, nu_end)
    i = _as_int(mu + nu_start / 2 - nu_end / 2, "P-index")
    crossings = _audit_crossings(gamma, fl, omega, left=Pinv) if audit else []
    return OmegaIndexRecord(omega, i, nu_end, "crossing", crossings)


def iterated_P_index(gamma: SymplecticPath, P, m: int, omega0=ONE, direct: bool = True,
                     xi: SymplecticPath | None = None) -> OmegaIndexRecord:
    """(i^{P^m}_{omega0}(gamma, m), nu^{P^m}_{omega0}(gamma, m)) from the P-iterate."""
    P = np.asarray(P, dtype=float)
    Pm = np.linalg.matrix_power(P, m)
    path = p_iterate(gamma, P, m)
    if direct:
        return maslov_P_index_direct(path, Pm, omega0)
    if xi is None:
        xi = reference_xi(Pm, tau=path.horizon)
    return maslov_P_index(path, Pm, omega0, xi)


# ---------------------------------------------------------------------------
# identities and inequalities


@dataclass
class Check:
    name: str
    lower: int | None
    value: int
    upper: int | None
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "lower": self.lower, "value": self.value,
                "upper": self.upper, "pass": self.passed, **self.detail}


class IndexCache:
    """Memoized (P, omega)-indices of one path and its iterates."""

    def __init__(self, gamma: SymplecticPath, P, xi: SymplecticPath | None = None):
        self.gamma = gamma
        self.P = np.asarray(P, dtype=float)
        self._xi = xi
        self._single = {}
        self._iter = {}
        self._xi_cache = {}

    @property
    def xi(self) -> SymplecticPath:
        if self._xi is None:
            self._xi = reference_xi(self.P, tau=self.gamma.horizon)
        return self._xi

    def single(self, omega) -> OmegaIndexRecord:
        omega = _as_omega(omega)
        key = omega if omega.exact else float(omega.turns)
        conj_key = omega.conj() if omega.exact else None
        if key not in self._single:
            if conj_key is not None and conj_key in self._single:
                rec = self._single[conj_key]
                self._single[key] = OmegaIndexRecord(omega, rec.i, rec.nu, rec.method)
            else:
                self._single[key] = maslov_P_index_direct(self.gamma, self.P, omega)
        return self._single[key]

    def iterated(self, m: int, omega0=ONE) -> OmegaIndexRecord:
        omega0 = _as_omega(omega0)
        if m == 1:
            return self.single(omega0)
        key = (m, omega0)
        if key not in self._iter:
            self._iter[key] = iterated_P_index(self.gamma, self.P, m, omega0)
        return self._iter[key]

    def xi_index(self, m: int = 1, omega=ONE) -> OmegaIndexRecord:
        omega = _as_omega(omega)
        key = (m, omega)
        if key not in self._xi_cache:
            path = self.xi if m == 1 else classical_iterate(self.xi, m)
            self._xi_cache[key] = omega_index(path, omega)
        return self._xi_cache[key]


def bott_check(gamma: SymplecticPath, P, m: int, omega0=ONE, cache: IndexCache | None = None):
    """Iterated index/nullity at omega0 against the sum over omega^m = omega0."""
    omega0 = _as_omega(omega0)
    cache = cache or IndexCache(gamma, P)
    lhs = cache.iterated(m, omega0)
    terms = [cache.single(w) for w in omega0.roots(m)]
    rhs_i = sum(t.i for t in terms)
    rhs_nu = sum(t.nu for t in terms)
    detail = {"m": m, "omega0": omega0.to_json(),
              "terms": [{"omega": t.omega.to_json(), "i": t.i, "nu": t.nu} for t in terms]}
    return (Check("bott_index", None, lhs.i, None, lhs.i == rhs_i, {**detail, "lhs": lhs.i, "rhs": rhs_i}),
            Check("bott_nullity", None, lhs.nu, None, lhs.nu == rhs_nu,
                  {**detail, "lhs": lhs.nu, "rhs": rhs_nu}))


def lemma22_check(gamma: SymplecticPath, P, omega, cache: IndexCache | None = None) -> Check:
    omega = _as_omega(omega)
    if omega.is_one:
        raise ValueError("omega must differ from 1")
    cache = cache or IndexCache(gamma, P)
    n = gamma.n
    one = cache.single(ONE)
    w = cache.single(omega)
    shift = cache.xi_index(1, ONE).i - cache.xi_index(1, omega).i
    lower = one.i + one.nu - n + shift
    upper = one.i + n - w.nu + shift
    return Check("lemma22", lower, w.i, upper, lower <= w.i <= upper, {"omega": omega.to_json()})


def lemma23_check(gamma: SymplecticPath, P, m: int, cache: IndexCache | None = None) -> Check:
    cache = cache or IndexCache(gamma, P)
    n = gamma.n
    one = cache.single(ONE)
    it = cache.iterated(m, ONE)
    xi_term = m * cache.xi_index(1).i - cache.xi_index(m).i
    lower = m * (one.i + one.nu - n) + n - one.nu + xi_term
    upper = m * (one.i + n) - n - (it.nu - one.nu) + xi_term
    return Check("lemma23", lower, it.i, upper, lower <= it.i <= upper, {"m": m, "xi_term": xi_term})


def _nu_xi(P, m: int) -> int:
    """nu_1 of the m-th classical iterate of a path ending at P^{-1}: dim ker(P^{-m} - I)."""
    Pm = np.linalg.matrix_power(symplectic_inverse(np.asarray(P, dtype=float)), m)
    return kernel_dim(Pm - np.eye(Pm.shape[0]))


def lemma24_check(gamma: SymplecticPath, P, m: int, cache: IndexCache | None = None) -> Check:
    P = np.asarray(P, dtype=float)
    cache = cache or IndexCache(gamma, P)
    Pinv = symplectic_inverse(P)
    eM = elliptic_height(Pinv @ gamma.end)
    eP = elliptic_height(Pinv)
    one = cache.single(ONE)
    cur = cache.iterated(m, ONE)
    nxt = cache.iterated(m + 1, ONE)
    value = nxt.i - cur.i - one.i
    half = (eM + eP) // 2
    lower = cur.nu - _nu_xi(P, 1) + _nu_xi(P, m + 1) - half
    upper = one.nu - nxt.nu - _nu_xi(P, m) + half
    return Check("lemma24", lower, value, upper, lower <= value <= upper,
                 {"m": m, "e_PinvM": eM, "e_Pinv": eP})


def lemma32_rhs(c) -> int:
    return sum((c.k - 2 * m) * cnt for m, cnt in c.blocks.items()) - c.k * c.p


def lemma32_check(c, xi: SymplecticPath, k: int | None = None) -> Check:
    """(k+1) i(xi) - i(xi, k+1) from path iteration against sum (k - 2m) j_m - k p."""
    k = c.k if k is None else k
    i1 = omega_index(xi).i
    ik = omega_index(classical_iterate(xi, k + 1)).i
    lhs = (k + 1) * i1 - ik
    rhs = lemma32_rhs(c)
    return Check("lemma32", None, lhs, None, lhs == rhs, {"lhs": lhs, "rhs": rhs, "i1": i1, "ik1": ik})


def precise_iteration(i1: int, M, m: int) -> int:
    """i(xi, m) for a path xi with i(xi) = i1 ending at semisimple M with spectrum on U.

    m (i1 + S+(1) - C) + 2 sum_theta E(m theta / 2 pi) S-(e^{i theta}) - (S+(1) + C).
    """
    M = np.asarray(M, dtype=float)
    spec = unit_spectrum(M)
    if not spec.semisimple or spec.off_circle_count:
        raise ValueError("precise iteration needs a semisimple matrix with spectrum on U")
    s_plus_one = splitting_numbers(M, Fraction(0)).s_plus
    total = 0
    C = 0
    for cl in spec.eigenvalues:
        if cl.turns == 0:
            continue
        s_minus = splitting_numbers(M, cl.turns).s_minus
        C += s_minus
        total += ceil_E(m * cl.turns) * s_minus
    return m * (i1 + s_plus_one - C) + 2 * total - (s_plus_one + C)


def splitting_by_limit(gamma: SymplecticPath, omega, eps: float = 1e-4,
                       halvings: int = 2) -> tuple[int, int]:
    """(S+, S-) = (i_{omega e^{+i eps}} - i_omega, i_{omega e^{-i eps}} - i_omega), stable in eps."""
    omega = _as_omega(omega)
    base = omega_index(gamma, omega).i
    results = set()
    e = eps
    for _ in range(halvings + 1):
        turn = e / (2 * math.pi)
        sp = omega_index(gamma, omega.rotate(turn)).i - base
        sm = omega_index(gamma, omega.rotate(-turn)).i - base
        results.add((sp, sm))
        e /= 2
    if len(results) != 1:
        raise IndexError_(f"splitting numbers unstable across probe angles: {results}")
    return results.pop()


__all__ = [
    "UnitRational", "ONE", "MINUS_ONE", "OmegaIndexRecord", "Crossing", "Check", "IndexCache",
    "nullity", "omega_index", "maslov_P_index", "maslov_P_index_direct", "iterated_P_index",
    "bott_check", "lemma22_check", "lemma23_check", "lemma24_check", "lemma32_check",
    "lemma32_rhs", "crossings_consistent", "precise_iteration", "splitting_by_limit", "lagrangian_unitary", "half_dim",
]
