"""Config loading and report serialization."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np

from .symplectic import (
    check_Pk,
    diamond,
    half_dim,
    is_symplectic,
    random_symplectic,
    rotation,
    symplectic_inverse,
)


class ConfigError(ValueError):
    """Config failed validation."""


def load_schema() -> dict:
    return json.loads(resources.files("mpx").joinpath("config.schema.json").read_text())


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    return validate_config(cfg)


def build_P(cfg: dict) -> np.ndarray:
    """Boundary matrix from an explicit matrix or a normal-form spec of P^{-1}."""
    spec = cfg["P"]
    k = cfg["k"]
    if isinstance(spec, list):
        P = np.array(spec, dtype=float)
    else:
        angles = [0.0] * spec["p"]
        for b in sorted(spec["blocks"], key=lambda b: b["m"]):
            angles += [2 * math.pi * b["m"] / k] * b["j"]
        if not angles:
            raise ConfigError("P spec has no blocks")
        N = diamond(*[rotation(a) for a in angles])
        seed = spec.get("conjugator_seed")
        if seed is None:
            V = np.eye(N.shape[0])
        else:
            V = random_symplectic(half_dim(N), np.random.default_rng(seed))
        P = symplectic_inverse(V @ N @ symplectic_inverse(V))
    if P.shape[0] != P.shape[1] or P.shape[0] % 2:
        raise ConfigError("P must be square of even size")
    if "n" in cfg and half_dim(P) != cfg["n"]:
        raise ConfigError(f"n = {cfg['n']} does not match P of size {P.shape[0]}")
    if not is_symplectic(P, 1e-9):
        raise ConfigError("P is not symplectic")
    if not check_Pk(P, k, 1e-8):
        raise ConfigError(f"P does not have exact order k = {k}")
    return P


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return json.dumps(str(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        s = f"{x:.17g}"
        if "e" not in s and "." not in s and "n" not in s:
            s += ".0"
        return s
    return json.dumps(x)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_fmt(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    return _fmt(obj)


def write_json(obj, fname) -> None:
    with open(fname, "w") as fh:
        fh.write(dumps(obj) + "\n")


__all__ = ["ConfigError", "build_P", "dumps", "load_config", "load_schema", "validate_config", "write_json"]
