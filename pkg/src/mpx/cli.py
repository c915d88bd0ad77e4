"""mpx command line: classify, index, bott, inequalities, galerkin, solve, certify.

Exit codes: 0 all checks pass, 1 an identity or inequality failed (or the
pipelines disagree), 2 numerical breakdown or bad input.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .certify import certify, index_table
from .galerkin import GalerkinError, galerkin_index
from .hamiltonian import (
    PSolutionOrbit,
    SolverError,
    flow,
    hamiltonian_from_spec,
    linearization_generator,
    solve_with_restarts,
    validate_hamiltonian,
)
from .index import (
    IndexCache,
    IndexError_,
    UnitRational,
    bott_check,
    lemma22_check,
    lemma23_check,
    lemma24_check,
    maslov_P_index,
)
from .io import ConfigError, build_P, dumps, load_config, write_json
from .paths import GeneratorField, fundamental_solution, generator_from_spec, order_of
from .symplectic import (
    ClassificationError,
    NotSemisimpleError,
    classify_P,
    normal_form_representative,
    symplectic_conjugator,
    symplectic_defect,
)

log = logging.getLogger("mpx")

OK, FAILED, BROKEN = 0, 1, 2


class Context:
    """Parsed config plus the objects derived from it, built lazily."""

    def __init__(self, cfg: dict, args):
        self.cfg = cfg
        self.args = args
        self.k = cfg["k"]
        self.tau = float(cfg.get("tau", 1.0))
        self.seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        self.P = build_P(cfg)
        self.n = self.P.shape[0] // 2
        self._orbit = None

    @property
    def threads(self) -> int:
        return max(1, self.args.threads or int(os.environ.get("MPX_THREADS", "1")))

    def galerkin_opts(self) -> dict:
        g = dict(self.cfg.get("galerkin", {}))
        g.pop("enabled", None)
        return g

    @property
    def galerkin_enabled(self) -> bool:
        return self.cfg.get("galerkin", {}).get("enabled", True)

    def model(self):
        if "hamiltonian" not in self.cfg:
            raise ConfigError("config has no hamiltonian")
        return hamiltonian_from_spec(self.cfg["hamiltonian"], self.P)

    def orbit(self) -> tuple[PSolutionOrbit | None, dict]:
        if self._orbit is not None:
            return self._orbit
        model = self.model()
        solver = dict(self.cfg.get("solver", {}))
        if "orbit" in self.cfg:
            x0 = np.array(self.cfg["orbit"]["x0"], dtype=float)
            tr = flow(model, x0, self.tau, solver.get("steps"), variational=True)
            res = float(np.linalg.norm(tr.end - self.P @ x0))
            sol = PSolutionOrbit(model, x0, self.tau, self.k, tr, res)
            self._orbit = (sol, {"supplied": True, "residual": res})
            return self._orbit
        kw = {key: solver[key] for key in ("max_iter", "tol", "steps") if key in solver}
        best, found, failures = solve_with_restarts(
            model, self.tau, self.k, seed=self.seed, restarts=solver.get("restarts", 8),
            annulus=tuple(solver.get("annulus", (0.5, 2.0))), guess=solver.get("guess"),
            workers=self.threads, **kw)
        info = {"supplied": False, "converged": len(found), "failed": len(failures),
                "failures": failures[:10]}
        self._orbit = (best, info)
        return self._orbit

    def generator(self):
        """Generator from the config, or the linearization along the solved orbit."""
        if "generator" in self.cfg:
            return generator_from_spec(self.cfg["generator"], self.P, self.k, self.tau)
        sol, _ = self.orbit()
        if sol is None:
            raise SolverError("no orbit available for the linearization")
        return linearization_generator(sol)

    def path(self):
        return fundamental_solution(self.generator(), self.tau)


def _omega(args) -> UnitRational:
    return UnitRational.parse(args.omega) if args.omega else UnitRational.of(0)


# ---------------------------------------------------------------------------
# commands


def cmd_classify(ctx: Context) -> tuple[dict, int]:
    c = classify_P(ctx.P, ctx.k)
    U, N = symplectic_conjugator(ctx.P, ctx.k)
    report = {"class": c.to_json(), "normal_form": normal_form_representative(c),
              "conjugator": {"U": U, "symplectic_defect": symplectic_defect(U),
                             "reconstruction_error": float(np.max(np.abs(
                                 U @ N @ np.linalg.inv(U) - np.linalg.inv(ctx.P))))}}
    return report, OK


def cmd_index(ctx: Context) -> tuple[dict, int]:
    omega = _omega(ctx.args)
    m = ctx.args.m or 1
    gen = ctx.generator()
    gamma = fundamental_solution(gen, ctx.tau)
    cache = IndexCache(gamma, ctx.P)
    rec = cache.iterated(m, omega)
    report = {"m": m, "crossing": rec.to_json()}
    agree = True
    if m == 1:
        xi_rec = maslov_P_index(gamma, ctx.P, omega)
        report["xi_route"] = {"i": xi_rec.i, "nu": xi_rec.nu}
        agree &= (xi_rec.i, xi_rec.nu) == (rec.i, rec.nu)
    if omega.is_one and ctx.galerkin_enabled:
        rows = index_table(gamma, gen, ctx.P, ctx.k, ctx.tau, m, True)
        row = rows[-1]
        report["galerkin"] = {"i": row.galerkin_i, "nu": row.galerkin_nu}
        agree &= row.agreed
    if m > 1:
        terms = [cache.single(w) for w in omega.roots(m)]
        report["bott_sum"] = {"i": sum(t.i for t in terms), "nu": sum(t.nu for t in terms)}
        agree &= (report["bott_sum"]["i"], report["bott_sum"]["nu"]) == (rec.i, rec.nu)
    report["agree"] = agree
    return report, OK if agree else FAILED


def cmd_bott(ctx: Context) -> tuple[dict, int]:
    omega = _omega(ctx.args)
    ms = [ctx.args.m] if ctx.args.m else list(range(1, 7))
    gamma = ctx.path()
    cache = IndexCache(gamma, ctx.P)
    # warm the per-omega cache in parallel; conjugates are mirrored inside the cache
    roots = {w for m in ms for w in omega.roots(m)}
    with ThreadPoolExecutor(ctx.threads) as pool:
        list(pool.map(cache.single, sorted(roots, key=lambda w: w.turns)))
    checks = []
    for m in ms:
        checks.extend(bott_check(gamma, ctx.P, m, omega, cache))
    ok = all(c.passed for c in checks)
    return {"omega0": omega.to_json(), "checks": [c.to_json() for c in checks], "pass": ok}, \
        OK if ok else FAILED


def cmd_inequalities(ctx: Context) -> tuple[dict, int]:
    ms = [ctx.args.m] if ctx.args.m else list(range(1, 7))
    omega = _omega(ctx.args)
    if omega.is_one:
        omega = UnitRational.of(1, 2)
    gamma = ctx.path()
    cache = IndexCache(gamma, ctx.P)
    checks = [lemma22_check(gamma, ctx.P, omega, cache)]
    for m in ms:
        checks.append(lemma23_check(gamma, ctx.P, m, cache))
        checks.append(lemma24_check(gamma, ctx.P, m, cache))
    ok = all(c.passed for c in checks)
    return {"checks": [c.to_json() for c in checks], "pass": ok}, OK if ok else FAILED


def cmd_galerkin(ctx: Context) -> tuple[dict, int]:
    m = ctx.args.m or 1
    gen = ctx.generator()
    Pm = np.linalg.matrix_power(ctx.P, m)
    if m > 1:
        gen = GeneratorField(gen.n, m * ctx.tau, gen.func, Pm, gen.spec, gen.batch)
    res = galerkin_index(gen, Pm, order_of(Pm), m * ctx.tau, **ctx.galerkin_opts())
    if ctx.args.out:
        res.write_audit_csv(Path(ctx.args.out) / "galerkin_audit.csv")
    return {"m": m, **res.to_json()}, OK


def cmd_solve(ctx: Context) -> tuple[dict, int]:
    sol, info = ctx.orbit()
    report = {"search": info}
    if sol is None:
        report["orbit"] = None
        return report, FAILED
    report["orbit"] = sol.summary()
    report["validation"] = validate_hamiltonian(sol.model, seed=ctx.seed, orbit=sol)
    if ctx.args.out:
        sol.to_csv(Path(ctx.args.out) / "orbit.csv")
    return report, OK


def cmd_certify(ctx: Context) -> tuple[dict, int]:
    sol, info = ctx.orbit()
    if sol is None:
        return {"search": info, "certificate": None}, FAILED
    period = ctx.cfg.get("period", {})
    cert = certify(sol, galerkin=ctx.galerkin_enabled, period_tol=period.get("tol", 1e-6))
    report = {"search": info, "certificate": cert.to_json()}
    if ctx.args.out:
        out = Path(ctx.args.out)
        sol.to_csv(out / "orbit.csv")
        with open(out / "indices.csv", "w") as fh:
            fh.write("m,crossing_i,crossing_nu,galerkin_i,galerkin_nu\n")
            for r in cert.rows:
                fh.write(f"{r.m},{r.crossing_i},{r.crossing_nu},{r.galerkin_i},{r.galerkin_nu}\n")
    return report, cert.exit_code


COMMANDS = {
    "classify": (cmd_classify, "classify P and print its normal form"),
    "index": (cmd_index, "Maslov (P, omega)-index of the generator or orbit"),
    "bott": (cmd_bott, "check the Bott-type iteration formula"),
    "inequalities": (cmd_inequalities, "check the iteration inequalities"),
    "galerkin": (cmd_galerkin, "Galerkin Morse-index count"),
    "solve": (cmd_solve, "find a P-boundary orbit by shooting"),
    "certify": (cmd_certify, "minimal P-symmetric period certificate"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpx", description="Maslov (P, omega)-index laboratory.")
    parser.add_argument("--version", action="version", version=f"mpx {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON problem setup")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", help="directory for JSON and CSV outputs")
    common.add_argument("--omega", help="a/b meaning exp(2 pi i a/b); default 0/1")
    common.add_argument("--m", type=int, help="iteration count")
    common.add_argument("--threads", type=int, help="worker threads (default $MPX_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.m is not None and args.m < 1:
        print("error: --m must be >= 1", file=sys.stderr)
        return BROKEN
    try:
        cfg = load_config(args.config)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
        ctx = Context(cfg, args)
        report, code = COMMANDS[args.command][0](ctx)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BROKEN
    except (SolverError, IndexError_, GalerkinError, ClassificationError, NotSemisimpleError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return BROKEN
    report = {"command": args.command, "exit_code": code, **report}
    text = dumps(report)
    print(text)
    if args.out:
        write_json(report, Path(args.out) / f"{args.command}.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
