"""Experiment configuration: INI files with dotted keys such as ``map.kind``.

Every key has a default; unknown keys and malformed values raise
:class:`ConfigError` naming the key.  :meth:`ExperimentConfig.resolved`
lists every key with its effective value, which the CLI embeds in each
output file.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

import numpy as np

from .density import GridDensity
from .maps import ExpandingMap, make_perturbed_linear


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


def _int(s):
    return int(s)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _str(s):
    return s.strip()


def _floats(s):
    if not s.strip():
        return ()
    return tuple(_float(t) for t in s.replace(",", " ").split())


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "map.kind": (_str, "doubling"),
    "map.degree": (_int, 2),
    "map.delta": (_float, 0.0),
    "density.kind": (_str, "constant"),
    "density.a": (_float, 0.0),
    "density.b": (_float, 0.0),
    "density.k": (_int, 1),
    "density.start": (_float, 0.3),
    "density.length": (_float, 0.4),
    "density.values": (_floats, ()),
    "grid.resolution": (_int, 1024),
    "coupling.eps": (_float, 0.05),
    "coupling.eps_grid": (_floats, ()),
    "solver.tol": (_float, 1e-10),
    "solver.max_iter": (_int, 500),
    "solver.mass_tol": (_float, 1e-10),
    "solver.support_floor": (_float, 1e-12),
    "solver.cold_check": (_int, 1),
    "sync.steps": (_int, 20),
    "sync.min_cells": (_int, 8),
    "particles.n": (_int, 10000),
    "particles.steps": (_int, 5),
    "particles.seed": (_int, 0),
}

MAP_KINDS = ("doubling", "perturbed_linear")
DENSITY_KINDS = ("constant", "trig", "bump", "nodes")


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def resolved(self) -> list[tuple[str, str]]:
        out = []
        for key in sorted(self.values):
            v = self.values[key]
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            out.append((key, str(v)))
        return out

    # builders ----------------------------------------------------------------

    def build_map(self, check: bool = True) -> ExpandingMap:
        kind = self["map.kind"]
        if kind == "doubling":
            return make_perturbed_linear(2, 0.0, check=check)
        return make_perturbed_linear(self["map.degree"], self["map.delta"], check=check)

    def build_density(self) -> GridDensity:
        M = self["grid.resolution"]
        kind = self["density.kind"]
        if kind == "constant":
            return GridDensity.constant(M)
        if kind == "trig":
            return GridDensity.trig(M, self["density.a"], self["density.b"], self["density.k"])
        if kind == "bump":
            return GridDensity.bump(M, self["density.start"], self["density.length"])
        vals = np.asarray(self["density.values"], dtype=float)
        if vals.size == M:
            return GridDensity(vals).normalize()
        # coarser node lists are interpolated periodically onto the grid
        x = np.arange(M) / M
        xs = np.arange(vals.size + 1) / vals.size
        return GridDensity(np.interp(x, xs, np.append(vals, vals[0]))).normalize()


def parse(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"unparseable config ({exc.__class__.__name__})") from None
    raw: dict[str, str] = {}
    for section in cp.sections():
        for opt, val in cp.items(section):
            raw[f"{section}.{opt}"] = val
    return from_mapping(raw)


def load(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse(text)


def from_mapping(raw: dict[str, str]) -> ExperimentConfig:
    values = {k: d for k, (_, d) in SCHEMA.items()}
    for key in sorted(raw):
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(raw[key]) if isinstance(raw[key], str) else raw[key]
        except ValueError:
            raise ConfigError(key, f"cannot parse {raw[key]!r} as {parser.__name__.strip('_')}") from None
    _validate(values)
    return ExperimentConfig(values)


def _validate(v: dict) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(key, msg)

    need(v["map.kind"] in MAP_KINDS, "map.kind", f"must be one of {', '.join(MAP_KINDS)}")
    if v["map.kind"] == "perturbed_linear":
        need(v["map.degree"] >= 2, "map.degree", "must be >= 2")
    need(v["density.kind"] in DENSITY_KINDS, "density.kind", f"must be one of {', '.join(DENSITY_KINDS)}")
    M = v["grid.resolution"]
    need(M >= 16 and M & (M - 1) == 0, "grid.resolution", "must be a power of two >= 16")
    need(0.0 <= v["coupling.eps"] < 1.0, "coupling.eps", "must lie in [0, 1)")
    grid = v["coupling.eps_grid"]
    need(all(0.0 <= e < 1.0 for e in grid), "coupling.eps_grid", "entries must lie in [0, 1)")
    need(all(b > a for a, b in zip(grid, grid[1:])), "coupling.eps_grid", "must be strictly increasing")
    need(v["solver.tol"] > 0, "solver.tol", "must be positive")
    need(v["solver.max_iter"] >= 1, "solver.max_iter", "must be >= 1")
    need(v["solver.mass_tol"] > 0, "solver.mass_tol", "must be positive")
    need(0 < v["solver.support_floor"] < 1, "solver.support_floor", "must lie in (0, 1)")
    need(v["solver.cold_check"] in (0, 1), "solver.cold_check", "must be 0 or 1")
    need(v["sync.steps"] >= 1, "sync.steps", "must be >= 1")
    need(v["sync.min_cells"] >= 1, "sync.min_cells", "must be >= 1")
    need(v["particles.n"] >= 1, "particles.n", "must be >= 1")
    need(v["particles.steps"] >= 0, "particles.steps", "must be >= 0")
    need(v["particles.seed"] >= 0, "particles.seed", "must be >= 0")
    kind = v["density.kind"]
    if kind == "trig":
        need(math.hypot(v["density.a"], v["density.b"]) <= 1.0, "density.a",
             "trig density would be negative: need sqrt(a^2 + b^2) <= 1")
        need(v["density.k"] >= 1, "density.k", "must be >= 1")
    elif kind == "bump":
        need(0.0 < v["density.length"] < 1.0, "density.length", "must lie in (0, 1)")
        need(v["density.length"] * M >= 2, "density.length", "bump narrower than two grid cells")
    elif kind == "nodes":
        vals = v["density.values"]
        need(len(vals) >= 2, "density.values", "need at least two node values")
        need(all(x >= 0 for x in vals), "density.values", "values must be nonnegative")
        need(sum(vals) > 0, "density.values", "values must not all be zero")
