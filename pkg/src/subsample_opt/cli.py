"""Command-line entry point: ``subsample-opt <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .design import SingularDesignError, dump_design, load_design
from .distributions import DomainError, parse_dist
from .efficiency import FAMILIES, curve_minimum, efficiency_curve
from .optimality import check_equivalence
from .solver import SolverError, solve_optimal
from .subsample import MalformedRecordError, subsample_csv
from .tables import WHICH, render

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_EQUIVALENCE = 0, 1, 2, 3
SUBCOMMANDS = ("design", "check", "efficiency", "curve", "subsample", "tables")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that signals usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    dist_spec: str | None = None
    degree: int = 1
    alpha: float | None = None
    alphas: list = field(default_factory=list)
    paths: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        given = [os.path.abspath(p) for p in self.paths.values() if p and p != "-"]
        if len(given) != len(set(given)):
            raise UsageError(f"input and output paths must differ: {self.paths}")
        for name, tol in self.tolerances.items():
            if not tol > 0:
                raise UsageError(f"tolerance {name} must be positive, got {tol}")
        if self.degree < 1:
            raise UsageError(f"degree must be >= 1, got {self.degree}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise UsageError(f"alpha must lie in (0, 1), got {self.alpha}")


def parse_alphas(text: str) -> list[float]:
    """``0.1,0.2,0.5`` or an inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(v, 12) for v in start + step * np.arange(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse alpha grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subsample-opt", description="D-optimal 0-1 subsampling designs.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    d = sub.add_parser("design", help="solve for the optimal design")
    d.add_argument("--dist", required=True, help="e.g. normal:0,1 | exp:1 | unif:-1,1 | t:5")
    d.add_argument("--degree", type=int, required=True)
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--method", choices=("auto", "newton", "closed-form"), default="auto")
    d.add_argument("--out", help="design JSON path")

    c = sub.add_parser("check", help="verify the equivalence conditions")
    c.add_argument("--design", required=True)
    c.add_argument("--grid", type=int, default=4096)

    for name in ("efficiency", "curve"):
        e = sub.add_parser(name, help="D-efficiency of a reference design"
                           if name == "efficiency" else "efficiency curve and its minimum")
        e.add_argument("--dist", required=True)
        e.add_argument("--degree", type=int, required=True)
        e.add_argument("--family", choices=FAMILIES, required=True)
        e.add_argument("--alphas", required=name == "efficiency",
                       default="0.01:0.99:0.01", help="csv list or start:stop:step")
        e.add_argument("--out", required=True, help="CSV path")
        if name == "curve":
            e.add_argument("--footer", help="JSON path for the minimum (default: <out>.min.json)")

    s = sub.add_parser("subsample", help="apply a design to a CSV file")
    s.add_argument("--design", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--column", default="0", help="header name or 0-based index")
    s.add_argument("--out", required=True)
    s.add_argument("--on-error", choices=("skip", "abort"), default="abort")

    t = sub.add_parser("tables", help="regenerate the reference tables")
    t.add_argument("--which", choices=(*WHICH, "all"), default="all")
    t.add_argument("--out", help="write the tables here instead of standard output")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(ns.subcommand)
    cfg.dist_spec = getattr(ns, "dist", None)
    cfg.degree = getattr(ns, "degree", 1)
    cfg.alpha = getattr(ns, "alpha", None)
    if ns.subcommand in ("efficiency", "curve"):
        cfg.alphas = parse_alphas(ns.alphas)
    paths = {}
    for key in ("design", "inp", "out", "footer"):
        val = getattr(ns, key, None)
        if val:
            paths[key] = val
    if ns.subcommand == "curve" and "footer" not in paths:
        paths["footer"] = paths["out"] + ".min.json"
    cfg.paths = paths
    if ns.subcommand == "check":
        if ns.grid < 2:
            raise UsageError("--grid must be at least 2")
        cfg.options["grid"] = ns.grid
    for key in ("method", "family", "column", "on_error", "which"):
        if hasattr(ns, key):
            cfg.options[key] = getattr(ns, key)
    cfg.validate()
    return cfg


def _json_out(obj) -> str:
    return json.dumps(obj, indent=2)


def _run_design(cfg: RunConfig) -> int:
    dist = parse_dist(cfg.dist_spec)
    try:
        rep = solve_optimal(dist, cfg.degree, cfg.alpha, cfg.options["method"])
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if getattr(exc, "diagnostics", None):
            print(_json_out(exc.diagnostics), file=sys.stderr)
        return EXIT_SOLVER
    if "out" in cfg.paths:
        dump_design(rep.design, cfg.paths["out"], rep.to_dict())
    bnds = ", ".join(f"{v:.5f}" for v in rep.boundaries)
    print(f"{dist.spec()} degree={cfg.degree} alpha={cfg.alpha}: branch={rep.branch} "
          f"boundaries=[{bnds}] s*={rep.threshold:.6f} logdet={rep.logdet:.6f}")
    return EXIT_OK if rep.equivalence_ok else EXIT_SOLVER


def _run_check(cfg: RunConfig) -> int:
    design = load_design(cfg.paths["design"])
    report = check_equivalence(design, grid=cfg.options["grid"])
    print(_json_out(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_EQUIVALENCE


def _write_curve(path, points):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "efficiency", "logdet", "logdet_opt", "design_id"])
        for p in points:
            w.writerow([repr(p.alpha), repr(p.efficiency), repr(p.logdet), repr(p.logdet_opt), p.design_id])


def _run_efficiency(cfg: RunConfig) -> int:
    dist = parse_dist(cfg.dist_spec)
    points = efficiency_curve(dist, cfg.degree, cfg.options["family"], cfg.alphas)
    _write_curve(cfg.paths["out"], points)
    failed = [p for p in points if not p.ok]
    print(f"{len(points)} points written to {cfg.paths['out']}, {len(failed)} failed")
    for p in failed:
        print(f"  alpha={p.alpha}: {p.error}", file=sys.stderr)
    if cfg.subcommand == "curve":
        a_min, e_min = curve_minimum(dist, cfg.degree, cfg.options["family"], cfg.alphas, points)
        with open(cfg.paths["footer"], "w") as fh:
            json.dump({"alpha_min": a_min, "eff_min": e_min}, fh, indent=2)
            fh.write("\n")
        print(f"minimum efficiency {e_min:.5f} at alpha={a_min:.5f}")
    return EXIT_SOLVER if failed else EXIT_OK


def _run_subsample(cfg: RunConfig) -> int:
    design = load_design(cfg.paths["design"])
    with open(cfg.paths["inp"], newline="") as src, open(cfg.paths["out"], "w", newline="") as dst:
        stats = subsample_csv(src, dst, design, cfg.options["column"], cfg.options["on_error"])
    print(_json_out(stats.to_dict()), file=sys.stderr)
    if stats.empty_input:
        print("warning: no valid input records", file=sys.stderr)
    print(f"accepted {stats.n_accepted} of {stats.n_total} records "
          f"(rate {stats.empirical_rate:.5f}, design {stats.expected_rate})")
    return EXIT_OK


def _run_tables(cfg: RunConfig) -> int:
    text = render(cfg.options["which"])
    if "out" in cfg.paths:
        with open(cfg.paths["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


RUNNERS = {
    "design": _run_design,
    "check": _run_check,
    "efficiency": _run_efficiency,
    "curve": _run_efficiency,
    "subsample": _run_subsample,
    "tables": _run_tables,
}


def run(cfg: RunConfig) -> int:
    """Dispatch a validated configuration; returns the process exit code."""
    try:
        return RUNNERS[cfg.subcommand](cfg)
    except (SolverError, SingularDesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DomainError, MalformedRecordError, UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
