"""Command-line experiment runner.

Usage::

    coupledcircle <command> --config FILE [--out DIR] [--threads K]

Commands: validate-map, fixed-point, sweep-eps, synchronize, particles.
Exit status is 0 on success, 2 when the configuration or a mathematical
precondition is rejected, and 3 when an iteration fails to converge (the
partial results are still written).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import kernels
from .config import ConfigError, ExperimentConfig, from_mapping, load
from .density import SupportError
from .maps import InvalidMapError, validate
from .particles import empirical_vs_continuum
from .synchronization import (
    BranchAmbiguity,
    HypothesisError,
    evolve_tracking,
    orbit_offsets,
    reconstruct_xstar,
    wasserstein_slack,
    wasserstein_trajectory,
)
from .transfer import fixed_point, sweep_epsilon

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

log = logging.getLogger("coupledcircle")


class Invalid(Exception):
    """A precondition failure to be reported with exit status 2."""


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(float(v))
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, int) or hasattr(v, "__index__"):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class Writer:
    """Writes CSV and JSON outputs, each carrying the resolved config."""

    def __init__(self, out: Path, command: str, cfg: ExperimentConfig):
        self.out = out
        self.command = command
        self.cfg = cfg
        self.written: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    def header(self) -> list[str]:
        lines = [f"# coupledcircle {self.command}"]
        lines += [f"# {k} = {v}" for k, v in self.cfg.resolved()]
        return lines

    def csv(self, name: str, columns, rows) -> Path:
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in self.header():
                fh.write(line + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.written.append(path)
        return path

    def report(self, name: str, payload: dict) -> Path:
        path = self.out / name
        doc = {"command": self.command, "config": dict(self.cfg.resolved()), "result": _jsonable(payload)}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=False)
            fh.write("\n")
        self.written.append(path)
        return path


def _map(cfg: ExperimentConfig):
    try:
        return cfg.build_map()
    except InvalidMapError as exc:
        key = "map.kind" if cfg["map.kind"] == "doubling" else "map.delta"
        raise ConfigError(key, str(exc)) from None


def _density(cfg: ExperimentConfig):
    try:
        return cfg.build_density()
    except ValueError as exc:
        raise ConfigError("density.kind", str(exc)) from None


def cmd_validate_map(cfg: ExperimentConfig, w: Writer) -> int:
    T = cfg.build_map(check=False)
    rep = validate(T)
    w.report("validate_map.json", {**rep.as_dict(), "omega": T.omega, "Omega": T.Omega,
                                    "Dmax": T.Dmax, "degree": T.degree})
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  (margin {c.margin:.6g})")
    if not rep.ok:
        raise Invalid("map fails: " + "; ".join(rep.failed()))
    return EXIT_OK


def cmd_fixed_point(cfg: ExperimentConfig, w: Writer) -> int:
    T = _map(cfg)
    d0 = _density(cfg)
    f, rep = fixed_point(cfg["coupling.eps"], d0, T, cfg["solver.tol"], cfg["solver.max_iter"])
    w.csv("fixed_density.csv", ["x", "f"], zip(f.nodes, f.values))
    w.csv("fixed_point_iterations.csv", ["k", "bv_distance"], enumerate(rep.bv_distances, 1))
    payload = rep.as_dict()
    payload["mass"] = f.quadrature_mass
    payload["mass_ok"] = abs(f.quadrature_mass - 1.0) <= cfg["solver.mass_tol"]
    w.report("fixed_point.json", payload)
    print(f"eps={rep.eps:g} iterations={rep.iterations} residual={rep.residual:.3e} "
          f"gamma_est={_fmt(rep.gamma_est)} converged={rep.converged}")
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_sweep_eps(cfg: ExperimentConfig, w: Writer) -> int:
    grid = cfg["coupling.eps_grid"]
    if len(grid) < 2:
        raise ConfigError("coupling.eps_grid", "need at least two values for a sweep")
    T = _map(cfg)
    d0 = _density(cfg)
    sw = sweep_epsilon(grid, d0, T, cfg["solver.tol"], cfg["solver.max_iter"],
                       cold_check=bool(cfg["solver.cold_check"]))
    w.csv("sweep.csv", ["eps", "residual", "gamma_est", "ratio"], sw.rows())
    w.report("sweep.json", {
        "K_est": sw.K_est,
        "cold_check_bv": sw.cold_check,
        "flagged": sw.flagged,
        "ratios": sw.ratios,
        "converged": [r.converged for r in sw.reports],
        "iterations": [r.iterations for r in sw.reports],
    })
    print(f"K_est={_fmt(sw.K_est)} flagged={sw.flagged}")
    return EXIT_NOT_CONVERGED if sw.flagged else EXIT_OK


def cmd_synchronize(cfg: ExperimentConfig, w: Writer) -> int:
    T = _map(cfg)
    d0 = _density(cfg)
    try:
        hist = evolve_tracking(cfg["coupling.eps"], d0, T, cfg["sync.steps"],
                               cfg["solver.support_floor"], cfg["sync.min_cells"])
    except (HypothesisError, SupportError) as exc:
        raise Invalid(str(exc)) from None
    payload = {"q": hist.q, "steps": hist.steps, "stop_reason": hist.stop_reason,
               "contraction_slack": list(hist.contraction_slack())}
    status = EXIT_OK
    try:
        x = reconstruct_xstar(hist, T)
        wasserstein_trajectory(hist, x, T)
        payload["xstar"] = x
        payload["w1_series"] = hist.w1_series
        payload["w1_slack"] = list(wasserstein_slack(hist))
        payload["orbit_offsets"] = list(orbit_offsets(hist, x, T))
    except (BranchAmbiguity, ValueError) as exc:
        payload["xstar_error"] = str(exc)
        status = EXIT_NOT_CONVERGED
    w.csv("sync.csv", ["n", "support_start", "support_length", "w1_to_dirac", "bound_qn"], hist.rows())
    w.report("sync.json", payload)
    print(f"q={hist.q:g} steps={hist.steps} ({hist.stop_reason}) xstar={_fmt(payload.get('xstar'))}")
    return status


def cmd_particles(cfg: ExperimentConfig, w: Writer) -> int:
    T = _map(cfg)
    d0 = _density(cfg)
    res = empirical_vs_continuum(d0, T, cfg["coupling.eps"], cfg["particles.steps"],
                                 cfg["particles.n"], cfg["particles.seed"])
    w.csv("particles.csv", ["n", "w1_empirical_vs_continuum", "ensemble_diameter"], res.rows())
    w.report("particles.json", {"seed": res.seed, "n_particles": res.n_particles,
                                "w1": res.w1, "diameters": res.diameters})
    print(f"seed={res.seed} N={res.n_particles} max W1={max(res.w1):.3e}")
    return EXIT_OK


COMMANDS = {
    "validate-map": cmd_validate_map,
    "fixed-point": cmd_fixed_point,
    "sweep-eps": cmd_sweep_eps,
    "synchronize": cmd_synchronize,
    "particles": cmd_particles,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coupledcircle", description="Self-consistent transfer operator experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="INI file with dotted keys (defaults apply when omitted)")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    p.add_argument("--threads", metavar="K", type=int, default=1, help="worker threads; 0 means all cores")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 0:
        print("error: --threads: must be >= 0", file=sys.stderr)
        return EXIT_INVALID
    kernels.set_num_threads(args.threads)
    try:
        cfg = load(args.config) if args.config else from_mapping({})
        writer = Writer(Path(args.out), args.command, cfg)
        return COMMANDS[args.command](cfg, writer)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Invalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
