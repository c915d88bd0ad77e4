"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly:

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import sys
import time
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from _instances import P_from_blocks, admissible_classes, random_instance  # noqa: E402
from mpx.cli import main as cli_main  # noqa: E402
from mpx.galerkin import galerkin_index  # noqa: E402
from mpx.index import (  # noqa: E402
    MINUS_ONE,
    ONE,
    IndexCache,
    UnitRational,
    bott_check,
    lemma22_check,
    lemma23_check,
    lemma24_check,
    lemma32_check,
    maslov_P_index,
    maslov_P_index_direct,
    omega_index,
    precise_iteration,
    splitting_by_limit,
)
from mpx.paths import (  # noqa: E402
    classical_iterate,
    constant_generator,
    constant_path,
    exponential_path,
    fundamental_solution,
    reference_xi,
)
from mpx.symplectic import (  # noqa: E402
    classify_P,
    rotation,
    splitting_numbers,
    splitting_table,
    standard_J,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: dict[int, tuple[bool, str]] = {}


def record(num: int, passed: bool, detail: str) -> tuple[bool, str]:
    RESULTS[num] = (passed, detail)
    return passed, detail


def line(num: int) -> str:
    passed, detail = RESULTS[num]
    return f"ACCEPTANCE {num} {'PASS' if passed else 'FAIL'} {detail}"


# ---------------------------------------------------------------------------
# 1 and 5 share the 50 random instances


OMEGA0 = (ONE, MINUS_ONE, UnitRational.of(1, 3))


@lru_cache(maxsize=1)
def _random_sweep():
    t0 = time.time()
    bott_fail, ineq_fail, non_int, n_bott, n_ineq = [], [], [], 0, 0
    for seed in range(50):
        g, P, k, _ = random_instance(seed)
        cache = IndexCache(g, P)
        for w0 in OMEGA0:
            for m in range(1, 7):
                for chk in bott_check(g, P, m, w0, cache):
                    n_bott += 1
                    if not chk.passed:
                        bott_fail.append((seed, m, str(w0), chk.name, chk.detail["lhs"], chk.detail["rhs"]))
        checks = [lemma22_check(g, P, MINUS_ONE, cache), lemma22_check(g, P, UnitRational.of(1, 3), cache)]
        checks += [lemma23_check(g, P, m, cache) for m in range(1, 7)]
        checks += [lemma24_check(g, P, m, cache) for m in range(1, 6)]
        for chk in checks:
            n_ineq += 1
            if not all(isinstance(v, (int, np.integer)) for v in (chk.lower, chk.value, chk.upper)):
                non_int.append((seed, chk.name))
            if not chk.passed:
                ineq_fail.append((seed, chk.name, chk.lower, chk.value, chk.upper))
    return {"bott_fail": bott_fail, "ineq_fail": ineq_fail, "non_int": non_int,
            "n_bott": n_bott, "n_ineq": n_ineq, "seconds": time.time() - t0}


def criterion_1():
    s = _random_sweep()
    ok = not s["bott_fail"] and s["seconds"] < 300
    return record(1, ok, f"bott: {s['n_bott'] - len(s['bott_fail'])}/{s['n_bott']} exact "
                         f"(50 instances, m<=6, omega0 in 1,-1,e^(2pi i/3)); {s['seconds']:.0f}s"
                         + (f"; first failure {s['bott_fail'][0]}" if s["bott_fail"] else ""))


def criterion_5():
    s = _random_sweep()
    ok = not s["ineq_fail"] and not s["non_int"]
    return record(5, ok, f"iteration inequalities: {s['n_ineq'] - len(s['ineq_fail'])}/{s['n_ineq']} hold, "
                         f"{len(s['non_int'])} non-integer bounds"
                         + (f"; first failure {s['ineq_fail'][0]}" if s["ineq_fail"] else ""))


# ---------------------------------------------------------------------------


def criterion_2():
    t0 = time.time()
    bad, worst, done, seed = [], 0, 0, 100
    while done < 20:
        g, P, k, G = random_instance(seed)
        seed += 1
        if g.n > 2:
            continue
        rec = maslov_P_index_direct(g, P)
        res = galerkin_index(G, P, k, 1.0)
        worst = max(worst, res.stabilized_at)
        if (rec.i, rec.nu) != (res.i, res.nu) or res.stabilized_at >= 512:
            bad.append((seed - 1, (rec.i, rec.nu), (res.i, res.nu), res.stabilized_at))
        done += 1
    secs = time.time() - t0
    return record(2, not bad and secs < 600,
                  f"crossing == Galerkin on {20 - len(bad)}/20 instances (n<=2); "
                  f"largest stabilizing truncation {worst}; {secs:.0f}s" + (f"; {bad[0]}" if bad else ""))


def criterion_3():
    t0 = time.time()
    classes = admissible_classes(3, 8)
    bad32, badpi = [], []
    for k, p, blocks in classes:
        ms = [0] * p + [m for m in sorted(blocks) for _ in range(blocks[m])]
        P = P_from_blocks(k, ms)
        c = classify_P(P, k)
        xi = reference_xi(P, k)
        chk = lemma32_check(c, xi)
        if not chk.passed:
            bad32.append((k, p, blocks, chk.detail))
        i1 = omega_index(xi).i
        for m in range(2, k + 2):
            direct = omega_index(classical_iterate(xi, m)).i
            if precise_iteration(i1, xi.end, m) != direct:
                badpi.append((k, p, blocks, m))
    secs = time.time() - t0
    ok = not bad32 and not badpi and secs < 120
    return record(3, ok, f"(k+1) i(xi) - i(xi, k+1) identity on {len(classes) - len(bad32)}/{len(classes)} admissible classes; "
                         f"precise iteration mismatches {len(badpi)}; {secs:.0f}s")


def criterion_4():
    t0 = time.time()
    bad = []
    total = 0
    # the tabulated basic blocks
    base = {"I2": (np.eye(2), [(Fraction(0), (1, 1))])}
    th = Fraction(1, 5)
    base["R"] = (rotation(2 * math.pi * float(th)), [(th, (0, 1)), (1 - th, (1, 0))])
    for name, (M, expect) in base.items():
        xi = exponential_path(standard_J(1) @ np.diag([2 * math.pi * float(expect[0][0])] * 2))
        assert np.allclose(xi.end, M)
        for turns, sp in expect:
            total += 1
            lim = splitting_by_limit(xi, UnitRational(turns))
            tab = splitting_numbers(M, turns)
            if not (lim == sp == (tab.s_plus, tab.s_minus)):
                bad.append((name, turns, lim, sp))
    for k, p, blocks in admissible_classes(3, 8):
        ms = [0] * p + [m for m in sorted(blocks) for _ in range(blocks[m])]
        P = P_from_blocks(k, ms)
        xi = reference_xi(P, k)
        Pinv = xi.end
        table = splitting_table(Pinv)
        for turns, (sp, sm) in table.items():
            total += 1
            if splitting_by_limit(xi, UnitRational(turns)) != (sp, sm):
                bad.append((k, p, blocks, turns))
        if splitting_numbers(Pinv, Fraction(0)).s_plus != p:
            bad.append((k, p, blocks, "S+(1)"))
        for m, jm in blocks.items():
            if splitting_numbers(Pinv, Fraction(m, k)).s_minus != jm:
                bad.append((k, p, blocks, f"S-(m={m})"))
    secs = time.time() - t0
    return record(4, not bad and secs < 60,
                  f"limit == table on {total - len(bad)}/{total} eigenvalues; "
                  f"S+(1) = p and S-(e^(2m pi i/k)) = j_m on all admissible classes; {secs:.0f}s"
                  + (f"; {bad[0]}" if bad else ""))


def criterion_6():
    t0 = time.time()
    alpha = 2 * math.pi / 5
    P = rotation(alpha)
    values = []
    i = 0
    while len(values) < 20:
        b = 6 * math.pi * (i + 0.5) / 20
        i += 1
        if min(abs(b - alpha - 2 * math.pi * j) for j in range(3)) > 0.05:
            values.append(b)
    bad = []
    for b in values:
        expected = 2 * sum(1 for j in range(10) if alpha + 2 * math.pi * j < b)
        G = constant_generator(b * np.eye(2), 1.0, P)
        g = fundamental_solution(G, 1.0)
        direct = maslov_P_index_direct(g, P).i
        via_xi = maslov_P_index(g, P).i
        gal = galerkin_index(G, P, 5, 1.0).i
        if not (direct == via_xi == gal == expected):
            bad.append((round(b, 4), expected, direct, via_xi, gal))
    secs = time.time() - t0
    return record(6, not bad and secs < 60,
                  f"closed-form count matched by both pipelines on {20 - len(bad)}/20 values of b tau; {secs:.0f}s"
                  + (f"; {bad[0]}" if bad else ""))


def _cli(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(list(argv))
    return code, json.loads(buf.getvalue())


def criterion_7():
    t0 = time.time()
    problems = []
    cfg = str(CONFIGS / "quartic_k5.json")
    code, rep = _cli("solve", "--config", cfg)
    orb = rep["orbit"]
    r2 = float(np.dot(orb["x0"], orb["x0"]))
    if code or orb["residual"] > 1e-10 or orb["energy_drift"] > 1e-9 \
            or abs(r2 - 2 * math.pi / 5) > 1e-8:
        problems.append(f"solve: code {code}, residual {orb['residual']:.2e}, |x0|^2 {r2}")

    def period_of(cfg_name, target):
        code, rep = _cli("certify", "--config", str(CONFIGS / cfg_name))
        cert = rep["certificate"]
        lam = cert["numeric_period"]
        if lam is None or abs(lam - target) > 1e-6 * target:
            problems.append(f"{cfg_name}: numeric period {lam} != {target}")
        return code, cert

    code, cert = period_of("quartic_k5.json", 5.0)
    base_verdict = cert["verdict"]
    if code or base_verdict == "inconsistent":
        problems.append(f"quartic_k5: verdict {base_verdict}")
    code, cert = period_of("quartic_k5_higher_mode.json", 5.0 / 6.0)
    high_verdict = cert["verdict"]
    if high_verdict.startswith("certified"):
        problems.append(f"higher mode certified: {high_verdict}")
    code, cert = period_of("quartic_k5_admissible.json", 5.0)
    adm_verdict = cert["verdict"]
    if adm_verdict != "certified_ktau":
        problems.append(f"admissible variant: {adm_verdict}")
    secs = time.time() - t0
    return record(7, not problems and secs < 120,
                  f"P=R(2pi/5): lambda_min=5, verdict {base_verdict}; higher mode: lambda_min=5/6, "
                  f"verdict {high_verdict}; P=R(-2pi/5): verdict {adm_verdict}; {secs:.0f}s"
                  + (f"; {problems}" if problems else ""))


def criterion_8():
    t0 = time.time()
    bad = []
    for n in (1, 2, 3):
        for factor in (1, 2, 4):
            const = constant_path(n, steps=16 * factor)
            rot = exponential_path(standard_J(n) * 0.3, 1.0, steps=512 * factor)
            got = (omega_index(const, ONE).i, omega_index(rot, ONE).i, omega_index(const, MINUS_ONE).i)
            if got != (-n, n, 0):
                bad.append((n, factor, got))
    secs = time.time() - t0
    return record(8, not bad and secs < 60,
                  f"anchors (-n, n, 0) reproduced for n=1..3 at grid x1, x2, x4; {secs:.0f}s"
                  + (f"; {bad}" if bad else ""))


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


@pytest.mark.slow
@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_acceptance(num):
    passed, _ = CRITERIA[num]()
    print(line(num))
    assert passed, line(num)


if __name__ == "__main__":
    for num in sorted(CRITERIA):
        CRITERIA[num]()
        print(line(num), flush=True)
    sys.exit(0 if all(p for p, _ in RESULTS.values()) else 1)
