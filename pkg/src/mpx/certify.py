"""Minimal P-symmetric period certificates.

The certificate records the integers a proof-by-contradiction needs and then
evaluates the argument on them:

* window: 2p + 2 - nu^P <= i^P <= 2p + 1 for the orbit on [0, tau];
* if e(P^{-1} gamma(tau)) <= 2n - 2, a shorter period is excluded outright;
* otherwise a shorter period T = tau / l forces i^P(gamma_T, 1) = 2p and
  nu^P(gamma_T, 1) = 1, and the iteration lower bound at m = k + 1 becomes
  k + 2p - 2 sum m j_m, which exceeds the window's upper bound 2p + 1
  exactly when the class margin k - 2 sum m j_m is > 1.

The verdict is a pure function of the recorded fields (`decide_verdict`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .galerkin import galerkin_index
from .hamiltonian import PSolutionOrbit, linearization_generator, minimal_P_symmetric_period
from .index import IndexCache, lemma23_check, lemma32_check
from .paths import GeneratorField, SymplecticPath, fundamental_solution, order_of, reference_xi
from .symplectic import PClass, classify_P, elliptic_height, half_dim, symplectic_inverse

VERDICTS = ("certified_ktau", "certified_by_remark34", "numeric_only", "inconsistent")
PERIOD_RTOL = 1e-6


@dataclass
class IndexRow:
    m: int
    crossing_i: int
    crossing_nu: int
    galerkin_i: int | None
    galerkin_nu: int | None

    @property
    def agreed(self) -> bool:
        if self.galerkin_i is None:
            return True
        return (self.crossing_i, self.crossing_nu) == (self.galerkin_i, self.galerkin_nu)

    def to_json(self) -> dict:
        return {"m": self.m, "crossing": {"i": self.crossing_i, "nu": self.crossing_nu},
                "galerkin": None if self.galerkin_i is None else {"i": self.galerkin_i, "nu": self.galerkin_nu},
                "agreed": self.agreed}


def index_table(gamma: SymplecticPath, B: GeneratorField, P, k: int, tau: float, m_max: int,
                galerkin: bool = True) -> list[IndexRow]:
    """(i^{P^m}(gamma, m), nu^{P^m}(gamma, m)) for m = 1..m_max by both pipelines."""
    cache = IndexCache(gamma, P)
    rows = []
    for m in range(1, m_max + 1):
        rec = cache.iterated(m)
        gi = gn = None
        if galerkin:
            Pm = np.linalg.matrix_power(P, m)
            km = order_of(Pm)
            Bm = GeneratorField(B.n, m * tau, B.func, Pm, B.spec, B.batch)
            res = galerkin_index(Bm, Pm, km, m * tau)
            gi, gn = res.i, res.nu
        rows.append(IndexRow(m, rec.i, rec.nu, gi, gn))
    return rows


def lower_bound_from_pattern(c: PClass, lemma32_value: int) -> int:
    """Iteration lower bound at m = k+1 under i^P = 2p, nu^P = 1."""
    n = c.n
    return (c.k + 1) * (2 * c.p + 1 - n) + n - 1 + lemma32_value


def decide_verdict(f: dict) -> tuple[str, str]:
    """Verdict and explanation from the recorded certificate fields."""
    if f.get("degenerate"):
        return "numeric_only", "constant orbit: every candidate period passes, nothing to certify"
    if not f["pipelines_agree"]:
        return "inconsistent", "crossing and Galerkin indices disagree"
    if not f["lemma23_at_k1"]["pass"]:
        return "inconsistent", "iteration lower bound at m = k+1 violated by computed indices"
    lam, ktau = f["numeric_period"], f["k"] * f["tau"]
    if lam is None:
        return "inconsistent", "no candidate P-symmetric period passed the scan"
    numeric_full = abs(lam - ktau) <= PERIOD_RTOL * ktau
    route = None
    why = []
    if not f["class"]["admissible"]:
        why.append("P is outside the admissible class: " + f["class"]["reason"])
    elif not f["window"]["pass"]:
        why.append("index window fails for this orbit")
    elif f["e_values"]["PinvM"] <= 2 * f["n"] - 2:
        route = "certified_by_remark34"
        why.append(f"e(P^-1 gamma(tau)) = {f['e_values']['PinvM']} <= 2n - 2")
    elif f["contradiction"]["lower_bound"] > f["contradiction"]["upper_bound"]:
        route = "certified_ktau"
        why.append("a shorter period would force lower bound "
                   f"{f['contradiction']['lower_bound']} > upper bound {f['contradiction']['upper_bound']}")
    else:
        why.append("contradiction bound does not exclude shorter periods")
    if route is not None and not numeric_full:
        return "inconsistent", f"index route claims k tau but numeric period is {lam!r}; " + "; ".join(why)
    if route is not None:
        return route, "; ".join(why) + "; numeric period agrees"
    why.append(f"numeric period {lam!r}" + (" equals k tau" if numeric_full else " is shorter than k tau"))
    return "numeric_only", "; ".join(why)


@dataclass
class Certificate:
    fields: dict
    rows: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return self.fields["verdict"]

    @property
    def exit_code(self) -> int:
        return 1 if self.verdict == "inconsistent" else 0

    def to_json(self) -> dict:
        return self.fields


def _short_period_pattern(sol: PSolutionOrbit, T: float, c: PClass) -> dict:
    """Indices of the orbit viewed as a P-solution on [0, T]."""
    model = sol.model
    P = sol.P

    def batch(ts):
        xs = np.atleast_2d(sol.x(np.asarray(ts, dtype=float)))
        return np.array([model.hess(x) for x in xs])

    G = GeneratorField(model.n, T, lambda t: batch(np.array([t]))[0], P, {"type": "orbit_hessian"}, batch)
    gT = fundamental_solution(G, T)
    cache = IndexCache(gT, P)
    one = cache.single(0)
    k1 = cache.iterated(c.k + 1)
    return {"T": T, "i1": one.i, "nu1": one.nu, "i_k1": k1.i,
            "matches": one.i == 2 * c.p and one.nu == 1 and k1.i == 2 * c.p + 1}


def certify(sol: PSolutionOrbit, galerkin: bool = True, period_tol: float = 1e-6) -> Certificate:
    P, k, tau = sol.P, sol.k, sol.tau
    n = half_dim(P)
    c = classify_P(P, k)
    scan = minimal_P_symmetric_period(sol, period_tol)
    f = {"n": n, "k": k, "tau": tau, "orbit": sol.summary(), "class": c.to_json(),
         "numeric_period": scan.lambda_min, "period_scan": scan.to_json(),
         "degenerate": scan.degenerate}
    if scan.degenerate:
        f.update({"pipelines_agree": True, "indices": [], "lemma23_at_k1": {"pass": True}})
        f["verdict"], f["explanation"] = decide_verdict(f)
        return Certificate(f)

    B = linearization_generator(sol)
    gamma = fundamental_solution(B, tau)
    rows = index_table(gamma, B, P, k, tau, k + 1, galerkin)
    f["indices"] = [r.to_json() for r in rows]
    f["pipelines_agree"] = all(r.agreed for r in rows)

    i1, nu1 = rows[0].crossing_i, rows[0].crossing_nu
    lo, hi = 2 * c.p + 2 - nu1, 2 * c.p + 1
    f["window"] = {"lower": lo, "value": i1, "upper": hi, "pass": lo <= i1 <= hi}

    Pinv = symplectic_inverse(P)
    f["e_values"] = {"PinvM": elliptic_height(Pinv @ gamma.end), "Pinv": elliptic_height(Pinv)}

    xi = reference_xi(P, k, tau)
    l32 = lemma32_check(c, xi)
    f["lemma32"] = {"lhs": l32.detail["lhs"], "rhs": l32.detail["rhs"], "pass": l32.passed}
    cache = IndexCache(gamma, P, xi)
    l23 = lemma23_check(gamma, P, k + 1, cache)
    f["lemma23_at_k1"] = {"lower": l23.lower, "value": l23.value, "upper": l23.upper, "pass": l23.passed}

    lb = lower_bound_from_pattern(c, l32.detail["lhs"])
    f["contradiction"] = {"lower_bound": lb, "upper_bound": 2 * c.p + 1, "margin": c.margin,
                          "excludes_shorter": lb > 2 * c.p + 1}
    lam = scan.lambda_min
    if lam is not None and lam < k * tau * (1 - PERIOD_RTOL):
        f["short_period_pattern"] = _short_period_pattern(sol, lam / k, c)
    f["verdict"], f["explanation"] = decide_verdict(f)
    return Certificate(f, rows)


__all__ = ["Certificate", "IndexRow", "VERDICTS", "certify", "decide_verdict", "index_table",
           "lower_bound_from_pattern"]
