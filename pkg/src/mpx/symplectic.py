"""Linear algebra on the real symplectic group Sp(2n).

Coordinates are ordered (q_1..q_n, p_1..p_n) and the standard form is
J = [[0, -I], [I, 0]].  A 2x2 block in the diamond product occupies the
pair (q_b, p_b), on which J restricts to R(pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space

UNIT_TOL = 1e-8
SNAP_DENOMINATOR = 64


class NotSemisimpleError(ValueError):
    """Raised when a matrix has a nontrivial Jordan block on the unit circle."""


class ClassificationError(ValueError):
    pass


def standard_J(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def rotation(theta: float) -> np.ndarray:
    """R(theta) = exp(theta J) in dimension 2."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def half_dim(M: np.ndarray) -> int:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise ValueError(f"expected a square matrix of even size, got {M.shape}")
    return M.shape[0] // 2


def symplectic_defect(M: np.ndarray) -> float:
    """max |M^T J M - J|."""
    M = np.asarray(M, dtype=float)
    J = standard_J(half_dim(M))
    return float(np.max(np.abs(M.T @ J @ M - J)))


def is_symplectic(M, tol: float = 1e-10) -> bool:
    M = np.asarray(M, dtype=float)
    half_dim(M)
    return symplectic_defect(M) <= tol and abs(np.linalg.det(M) - 1.0) <= max(tol, 1e-12) * 10


def symplectic_inverse(M: np.ndarray) -> np.ndarray:
    """M^{-1} = -J M^T J, exact for symplectic M."""
    J = standard_J(half_dim(M))
    return -J @ M.T @ J


def check_Pk(P, k: int, tol: float = 1e-9) -> bool:
    """True iff P^k = I and P^m != I for 1 <= m < k."""
    P = np.asarray(P, dtype=float)
    eye = np.eye(P.shape[0])
    power = eye.copy()
    for m in range(1, k + 1):
        power = power @ P
        close = np.max(np.abs(power - eye)) <= tol
        if m < k and close:
            return False
    return bool(close)


def diamond(*mats: np.ndarray) -> np.ndarray:
    """Symplectic direct sum of symplectic matrices in the (q..., p...) layout."""
    halves = [half_dim(M) for M in mats]
    n = sum(halves)
    out = np.zeros((2 * n, 2 * n))
    off = 0
    for M, h in zip(mats, halves):
        M = np.asarray(M, dtype=float)
        idx = np.r_[off:off + h, n + off:n + off + h]
        out[np.ix_(idx, idx)] = M
        off += h
    return out


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """exp(J S) times a random symplectic shear; well conditioned for small scale."""
    from scipy.linalg import expm

    S = rng.normal(scale=scale, size=(2 * n, 2 * n))
    S = (S + S.T) / 2
    return expm(standard_J(n) @ S)


# ---------------------------------------------------------------------------
# spectrum on the unit circle


def snap_turns(z: complex, tol: float = UNIT_TOL, max_den: int = SNAP_DENOMINATOR):
    """Angle of z in turns, as a Fraction in [0, 1) when within tol of a/b, b <= max_den."""
    turns = (math.atan2(z.imag, z.real) / (2 * math.pi)) % 1.0
    frac = Fraction(turns).limit_denominator(max_den)
    if abs(float(frac) - turns) * 2 * math.pi <= tol:
        return frac % 1
    if abs(turns - 1.0) * 2 * math.pi <= tol:
        return Fraction(0)
    return turns


@dataclass(frozen=True)
class Eigencluster:
    turns: Fraction | float | None  # None when off the circle
    value: complex
    multiplicity: int


@dataclass
class UnitSpectrum:
    eigenvalues: list[Eigencluster]
    krein_split: dict = field(default_factory=dict)  # turns -> (pos, neg)
    off_circle_count: int = 0
    e: int = 0
    semisimple: bool = True


def _cluster_eigenvalues(eigs: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    remaining = list(eigs)
    clusters = []
    while remaining:
        z = remaining.pop(0)
        group = [z]
        rest = []
        for w in remaining:
            (group if abs(w - z) <= tol else rest).append(w)
        remaining = rest
        clusters.append((complex(np.mean(group)), len(group)))
    return clusters


def _eigenspace(M: np.ndarray, lam: complex, dim: int, tol: float) -> np.ndarray | None:
    """Orthonormal basis of ker(M - lam) if it has dimension `dim`, else None."""
    A = M.astype(complex) - lam * np.eye(M.shape[0])
    _, s, vh = np.linalg.svd(A)
    scale = max(1.0, np.linalg.norm(M, 2))
    if np.sum(s <= tol * scale) < dim:
        return None
    return vh[-dim:].conj().T


def krein_form(n: int) -> np.ndarray:
    """Hermitian matrix sqrt(-1) J."""
    return 1j * standard_J(n)


def unit_spectrum(M, tol: float = UNIT_TOL, cluster_tol: float = 1e-6,
                  kernel_tol: float = 1e-6) -> UnitSpectrum:
    """Group the spectrum of M, snap unit eigenvalues to roots of unity, split by Krein sign.

    `tol` decides membership of the unit circle and rational snapping,
    `cluster_tol` merges numerically split multiple eigenvalues.
    """
    M = np.asarray(M, dtype=float)
    n = half_dim(M)
    eigs = np.linalg.eigvals(M)
    clusters = _cluster_eigenvalues(sorted(eigs, key=lambda z: (round(z.real, 6), z.imag)),
                                    cluster_tol)
    out = []
    split = {}
    off = 0
    semisimple = True
    K = krein_form(n)
    for value, mult in clusters:
        if abs(abs(value) - 1.0) > max(tol, cluster_tol):
            off += mult
            out.append(Eigencluster(None, value, mult))
            continue
        turns = snap_turns(value, tol)
        exact = complex(np.exp(2j * math.pi * float(turns)))
        out.append(Eigencluster(turns, exact, mult))
        basis = _eigenspace(M, exact if isinstance(turns, Fraction) else value, mult, kernel_tol)
        if basis is None:
            semisimple = False
            continue
        if turns in (Fraction(0), Fraction(1, 2)):
            continue
        form = basis.conj().T @ K @ basis
        w = np.linalg.eigvalsh((form + form.conj().T) / 2)
        split[turns] = (int(np.sum(w > 0)), int(np.sum(w < 0)))
    e = 2 * n - off
    return UnitSpectrum(out, split, off, e, semisimple)


def elliptic_height(M, tol: float = 1e-4) -> int:
    """Total multiplicity of eigenvalues on the unit circle.

    The default tolerance is loose on purpose: Jordan blocks at 1 of
    integrated matrices split by roughly sqrt(integration error).
    """
    M = np.asarray(M, dtype=float)
    eigs = np.linalg.eigvals(M)
    return int(np.sum(np.abs(np.abs(eigs) - 1.0) <= tol))


def is_semisimple(M, tol: float = 1e-6) -> bool:
    spec = unit_spectrum(M, kernel_tol=tol)
    if not spec.semisimple:
        return False
    M = np.asarray(M, dtype=float)
    for c in spec.eigenvalues:
        if c.turns is None and _eigenspace(M, c.value, c.multiplicity, tol) is None:
            return False
    return True


# ---------------------------------------------------------------------------
# classification of finite-order matrices


@dataclass
class PClass:
    k: int
    p: int
    r: int
    j: list[int]
    admissible: bool
    reason: str = ""
    blocks: dict = field(default_factory=dict)  # m -> count over 1..k-1, including m >= k/2

    @property
    def n(self) -> int:
        return self.p + sum(self.blocks.values())

    @property
    def margin(self) -> int:
        """k - 2 sum m j_m."""
        return self.k - 2 * sum(m * c for m, c in self.blocks.items())

    def to_json(self) -> dict:
        return {"k": self.k, "p": self.p, "j": list(self.j),
                "admissible": self.admissible, "reason": self.reason}


def pclass_from_blocks(k: int, p: int, blocks: dict) -> PClass:
    blocks = {int(m): int(c) for m, c in blocks.items() if c}
    r = max(blocks, default=0)
    j = [blocks.get(m, 0) for m in range(1, r + 1)]
    reasons = []
    margin = k - 2 * sum(m * c for m, c in blocks.items())
    if margin <= 1:
        reasons.append(f"k - 2*sum(m*j_m) = {margin} is not > 1")
    if 2 * r >= k and blocks:
        reasons.append(f"r = {r} is not < k/2 (blocks R(2m pi/k) with m >= k/2 present)")
    return PClass(k, p, r, j, not reasons, "; ".join(reasons), blocks)


def _unit_eigenspaces(M: np.ndarray, k: int, tol: float):
    """Yield (m, basis) for each k-th root e^{2 pi i m/k}, 0 <= m <= k/2, present in sigma(M)."""
    eigs = np.linalg.eigvals(M)
    size = M.shape[0]
    counts = {}
    for z in eigs:
        turns = snap_turns(z, max(tol, 1e-6), max_den=max(k, 1))
        if not isinstance(turns, Fraction) or (turns * k).denominator != 1 \
                or abs(abs(z) - 1) > max(tol, 1e-6):
            raise ClassificationError(f"eigenvalue {z:.6g} is not a {k}-th root of unity")
        m = int(turns * k) % k
        counts[m] = counts.get(m, 0) + 1
    for m in sorted(counts):
        if 2 * m > k:
            continue
        lam = np.exp(2j * math.pi * m / k)
        mult = counts[m]
        if counts.get((k - m) % k, 0) != mult:
            raise ClassificationError("spectrum is not closed under conjugation")
        basis = _eigenspace(M, lam, mult, 1e-6)
        if basis is None:
            raise NotSemisimpleError(
                f"eigenvalue exp(2 pi i {m}/{k}) has a nontrivial Jordan block")
        if basis.shape[0] != size:
            raise ClassificationError("bad eigenspace shape")
        yield m, basis


def classify_P(P, k: int, tol: float = 1e-9) -> PClass:
    """Normal-form class of P^{-1}: p copies of I_2 and j_m copies of R(2 m pi/k)."""
    P = np.asarray(P, dtype=float)
    n = half_dim(P)
    if not check_Pk(P, k, max(tol, 1e-9) * 10):
        raise ClassificationError(f"P does not have exact order {k}")
    M = symplectic_inverse(P)
    K = krein_form(n)
    p = 0
    blocks: dict[int, int] = {}
    for m, basis in _unit_eigenspaces(M, k, tol):
        mult = basis.shape[1]
        if m == 0:
            p += mult // 2
        elif 2 * m == k:
            blocks[m] = blocks.get(m, 0) + mult // 2
        else:
            form = basis.conj().T @ K @ basis
            w = np.linalg.eigvalsh((form + form.conj().T) / 2)
            neg, pos = int(np.sum(w < 0)), int(np.sum(w > 0))
            # a block R(theta) has Krein-negative e^{i theta} eigenvector
            if neg:
                blocks[m] = blocks.get(m, 0) + neg
            if pos:
                blocks[k - m] = blocks.get(k - m, 0) + pos
    return pclass_from_blocks(k, p, blocks)


def block_angles(c: PClass) -> list[float]:
    """Rotation angle of every 2x2 block of the normal form, in diamond order."""
    angles = [0.0] * c.p
    for m in sorted(c.blocks):
        angles += [2 * math.pi * m / c.k] * c.blocks[m]
    return angles


def normal_form_representative(c: PClass) -> np.ndarray:
    """I_{2p} <> R(2 pi/k)^{<> j_1} <> ... assembled by the diamond product."""
    return diamond(*[rotation(a) for a in block_angles(c)])


def _symplectic_basis_real(S: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Symplectic Gram-Schmidt on a real subspace: pairs (u, w) with u^T J w = -1."""
    n = S.shape[0] // 2
    J = standard_J(n)
    vecs = [v for v in np.linalg.qr(S)[0].T]
    pairs = []
    while vecs:
        u = vecs.pop(0)
        if not vecs:
            raise ClassificationError("odd-dimensional symplectic subspace")
        scores = [abs(u @ J @ w) for w in vecs]
        i = int(np.argmax(scores))
        if scores[i] < 1e-10:
            raise ClassificationError("degenerate symplectic form on eigenspace")
        w = vecs.pop(i)
        w = -w / (u @ J @ w)
        new = []
        for x in vecs:
            x = x - (w @ J @ x) * u + (u @ J @ x) * w
            new.append(x)
        vecs = new
        pairs.append((u, w))
    return pairs


def symplectic_conjugator(P, k: int, tol: float = 1e-9):
    """Real symplectic U and normal form N with U N U^{-1} = P^{-1}.

    Blocks of N are ordered as in `normal_form_representative`.
    """
    P = np.asarray(P, dtype=float)
    n = half_dim(P)
    c = classify_P(P, k, tol)
    M = symplectic_inverse(P)
    K = krein_form(n)
    by_m: dict[int, list] = {}
    for m, basis in _unit_eigenspaces(M, k, tol):
        if m == 0 or 2 * m == k:
            real = np.hstack([basis.real, basis.imag])
            q, s, _ = np.linalg.svd(real, full_matrices=False)
            real = q[:, : basis.shape[1]]
            by_m.setdefault(m, []).extend(_symplectic_basis_real(real))
            continue
        form = basis.conj().T @ K @ basis
        w, V = np.linalg.eigh((form + form.conj().T) / 2)
        for a in range(len(w)):
            v = basis @ V[:, a] / math.sqrt(abs(w[a]))
            if w[a] < 0:
                pair = (math.sqrt(2) * v.real, -math.sqrt(2) * v.imag)
                by_m.setdefault(m, []).append(pair)
            else:
                pair = (math.sqrt(2) * v.real, math.sqrt(2) * v.imag)
                by_m.setdefault(k - m, []).append(pair)
    U = np.zeros((2 * n, 2 * n))
    b = 0
    for m in sorted(by_m):
        for uq, up in by_m[m]:
            U[:, b] = uq
            U[:, n + b] = up
            b += 1
    N = normal_form_representative(c)
    defect = symplectic_defect(U)
    if defect > 1e-7 or np.max(np.abs(U @ N @ symplectic_inverse(U) - M)) > 1e-7:
        raise ClassificationError(
            f"symplectic normalization failed (defect {defect:.2e}, cond {np.linalg.cond(U):.2e})")
    return U, N


# ---------------------------------------------------------------------------
# splitting numbers


@dataclass(frozen=True)
class SplittingRecord:
    omega: Fraction | float  # turns
    s_plus: int
    s_minus: int
    c: int


def _krein_counts(M: np.ndarray, lam: complex, tol: float) -> tuple[int, int]:
    n = half_dim(M)
    A = M.astype(complex) - lam * np.eye(2 * n)
    basis = null_space(A, rcond=tol)
    if basis.shape[1] == 0:
        return 0, 0
    form = basis.conj().T @ krein_form(n) @ basis
    w = np.linalg.eigvalsh((form + form.conj().T) / 2)
    return int(np.sum(w > 0)), int(np.sum(w < 0))


def splitting_numbers(M, omega, tol: float = 1e-8) -> SplittingRecord:
    """Splitting numbers (S+, S-) of a semisimple M with spectrum on U, at omega.

    omega is given in turns (Fraction or float).  S+ is the dimension of the
    Krein-positive part of ker(M - omega) under v*(sqrt(-1) J)v, S- the
    negative part; this reproduces (1,1) for I_2 at 1 and (0,1), (1,0) for
    R(theta) at e^{+i theta}, e^{-i theta}.
    """
    M = np.asarray(M, dtype=float)
    spec = unit_spectrum(M)
    if not spec.semisimple or spec.off_circle_count:
        raise NotSemisimpleError("splitting numbers are only tabulated for semisimple "
                                 "matrices with spectrum on the unit circle")
    lam = np.exp(2j * math.pi * float(omega))
    s_plus, s_minus = _krein_counts(M, lam, tol)
    c = 0
    for cl in spec.eigenvalues:
        if cl.turns == 0:
            continue
        c += _krein_counts(M, cl.value, tol)[1]
    return SplittingRecord(omega, s_plus, s_minus, c)


def splitting_table(M, tol: float = 1e-8) -> dict:
    """turns -> (S+, S-) over the unit spectrum of M."""
    M = np.asarray(M, dtype=float)
    spec = unit_spectrum(M)
    return {cl.turns: _krein_counts(M, cl.value, tol)
            for cl in spec.eigenvalues if cl.turns is not None}


def ceil_E(a) -> int:
    """E(a) = min{m in Z : m >= a}; exact for Fractions."""
    return math.ceil(a)
