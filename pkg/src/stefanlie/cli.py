"""Command-line entry point: ``stefanlie <subcommand> PROBLEM.json``.

Exit codes: 0 success, 1 input or validation error in the problem file,
2 no admitted symmetry, 3 solver non-convergence, 4 validation failure.
Artifacts go to ``--out`` (default ``$STEFANLIE_OUTPUT_DIR`` or
``./stefanlie_out``); JSON is written with sorted keys and no timestamps,
CSV with ``,`` separators, a header row and LF line endings.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .expr import ExprError, ValidationError
from .problem import QuadratureError, RangeError, describe_problem, load_problem
from .reduction import ContractError, reduce
from .solver import (InversionError, ShootingConfig, SolverError, solve_self_similar,
                     solve_traveling_wave)
from .symmetry import UnsupportedCaseError, admitted_symmetries, classify_mai, classify_problem
from .validate import GridError, SimulationError, ValidationConfig, validate_solution

SCHEMA_VERSION = 1
OUTPUT_ENV = "STEFANLIE_OUTPUT_DIR"

EXIT_OK, EXIT_INPUT, EXIT_NO_SYMMETRY, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3, 4
SUBCOMMANDS = ("classify", "check", "reduce", "solve", "validate", "pipeline")


class StageError(Exception):
    def __init__(self, stage: str, code: int, message: str, payload: Optional[dict] = None):
        super().__init__(message)
        self.stage, self.code, self.payload = stage, code, payload or {}


@dataclass
class RunConfig:
    subcommand: str
    problem: str
    out_dir: str
    formats: tuple = ("json", "csv")
    tolerances: dict = field(default_factory=dict)
    kind: str = "auto"
    method: str = "both"
    guesses: Optional[tuple] = None
    simulate: bool = True
    n_points: int = 400
    t0: float = 1.0
    t_end: float = 4.0

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")

    def shooting(self) -> ShootingConfig:
        return ShootingConfig(guesses=self.guesses, **self.tolerances)

    def validation(self) -> ValidationConfig:
        return ValidationConfig(t0=self.t0, t_end=self.t_end, n_points=self.n_points,
                                simulate=self.simulate)

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "problem": os.path.basename(self.problem),
                "formats": list(self.formats), "tolerances": dict(sorted(self.tolerances.items())),
                "kind": self.kind, "method": self.method,
                "guesses": list(self.guesses) if self.guesses else None,
                "simulate": self.simulate, "n_points": self.n_points, "t0": self.t0,
                "t_end": self.t_end, "resolved": {"shooting": self.shooting().to_dict(),
                                                  "validation": self.validation().to_dict()}}


# ---------------------------------------------------------------------------
# output helpers

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(cfg: RunConfig, name: str, obj) -> Optional[str]:
    if "json" not in cfg.formats:
        return None
    path = os.path.join(cfg.out_dir, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def write_csv(cfg: RunConfig, name: str, header, rows) -> Optional[str]:
    if "csv" not in cfg.formats:
        return None
    path = os.path.join(cfg.out_dir, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=",", lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(a)) for a in r])
    return path


def _envelope(cfg: RunConfig, payload: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool": "stefanlie", "version": __version__,
            "config": cfg.to_dict(), **payload}


# ---------------------------------------------------------------------------
# stages

def stage_load(cfg: RunConfig):
    try:
        phys, P = load_problem(cfg.problem)
    except FileNotFoundError as exc:
        raise StageError("load", EXIT_INPUT, f"problem file not found: {exc.filename}")
    except json.JSONDecodeError as exc:
        raise StageError("load", EXIT_INPUT, f"problem file is not valid JSON: {exc}")
    except (ExprError, ValidationError, RangeError, QuadratureError, TypeError, ValueError) as exc:
        raise StageError("load", EXIT_INPUT, f"invalid problem: {exc}")
    return phys, P


def stage_classify(P) -> dict:
    c1, c2 = classify_problem(P)
    try:
        fam = classify_mai(c1, c2)
    except UnsupportedCaseError as exc:
        return {"d1": str(c1), "d2": str(c2), "table_case": None, "dimension": None,
                "basis": [], "note": str(exc)}
    return {"d1": str(c1), "d2": str(c2), "table_case": fam.table_case,
            "dimension": fam.dimension, "basis": [op.label for op in fam.basis],
            "infinite_family": fam.infinite_family, "mirrored": fam.mirrored}


def stage_check(P):
    res = admitted_symmetries(P)
    return res, {"admission": res.to_dict(), "conditions": res.rows()}


def _kinds(cfg: RunConfig, admission) -> list:
    forms = [f for f in ("X1", "X2") if f in admission.forms()]
    if cfg.kind != "auto":
        want = "X1" if cfg.kind == "TravelingWave" else "X2"
        if want not in forms:
            raise StageError("reduce", EXIT_NO_SYMMETRY,
                             f"{cfg.kind} requested but {want} is not admitted",
                             {"rejected": admission.to_dict()["rejected"]})
        forms = [want]
    if not forms:
        raise StageError("check", EXIT_NO_SYMMETRY, "no admitted symmetry",
                         {"rejected": admission.to_dict()["rejected"]})
    return forms


def stage_reduce(P, form, admission):
    try:
        return reduce(P, form, admission)
    except ContractError as exc:
        raise StageError("reduce", EXIT_NO_SYMMETRY, str(exc))


def stage_solve(R, cfg: RunConfig):
    try:
        sc = cfg.shooting()
        if R.kind == "TravelingWave":
            return solve_traveling_wave(R, sc, method=cfg.method)
        return solve_self_similar(R, sc)
    except (SolverError, InversionError) as exc:
        payload = {}
        if getattr(exc, "samples", None):
            payload["samples"] = exc.samples
        raise StageError("solve", EXIT_SOLVER, str(exc), payload)
    except ValueError as exc:
        raise StageError("solve", EXIT_INPUT, str(exc))


def stage_validate(R, sol, cfg: RunConfig):
    vc = cfg.validation()
    try:
        return validate_solution(R, sol, vc)
    except (GridError, SimulationError) as exc:
        raise StageError("validate", EXIT_VALIDATION, str(exc))


def _profile_rows(prof):
    return prof.table() if prof is not None else []


def _write_profiles(cfg, tag, R, sol):
    var = R.variable
    write_csv(cfg, f"{tag}u_profile.csv", [var, "u", "flux"], _profile_rows(sol.u_profile))
    write_csv(cfg, f"{tag}v_profile.csv", [var, "v", "flux"], _profile_rows(sol.v_profile))


def _write_fronts(cfg, tag, R, sol, track):
    if track is None:
        return
    if R.kind == "SelfSimilar":
        last = "s2_over_sqrt_t"
        derived = track.s2 / np.sqrt(track.times)
    else:
        last = "s2_minus_mu_t"
        derived = track.s2 - sol.params["mu"] * track.times
    write_csv(cfg, f"{tag}fronts.csv", ["t", "s1", "s2", last],
              zip(track.times, track.s1, track.s2, derived))


# ---------------------------------------------------------------------------
# commands

def _format_check(rows) -> str:
    lines = [f"{'operator':<34} {'item':<4} {'condition':<26} {'verdict':<7} residual"]
    for r in rows:
        res = r["residual"]
        res = "nan" if res is None or (isinstance(res, float) and not math.isfinite(res)) \
            else f"{res:.3e}"
        lines.append(f"{r['operator'][:34]:<34} {r['item']:<4} {r['condition'][:26]:<26} "
                     f"{r['verdict']:<7} {res}")
    return "\n".join(lines)


def run(cfg: RunConfig, out=None) -> int:
    """Execute one subcommand; returns the process exit status."""
    out = out if out is not None else sys.stdout
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
        if not os.access(cfg.out_dir, os.W_OK):
            raise OSError(f"output directory {cfg.out_dir} is not writable")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    summary = {}
    try:
        phys, P = stage_load(cfg)
        summary["problem"] = describe_problem(P)
        summary["goodman_transform"] = phys is not None
        cls = stage_classify(P)
        summary["classify"] = cls
        if cfg.subcommand == "classify":
            case = cls["table_case"]
            print(f"d1: {cls['d1']}, d2: {cls['d2']}", file=out)
            print(f"Table 1 case {case}, dim {cls['dimension']}" if case is not None
                  else cls["note"], file=out)
            for b in cls["basis"]:
                print(f"  {b}", file=out)
            write_json(cfg, "classify.json", _envelope(cfg, summary))
            return EXIT_OK

        admission, check = stage_check(P)
        summary["check"] = check["admission"]
        if cfg.subcommand == "check":
            print(_format_check(check["conditions"]), file=out)
            print(f"admitted: {sorted(admission.forms()) or 'none'}", file=out)
            write_json(cfg, "check.json", _envelope(cfg, {**summary, "conditions":
                                                          check["conditions"]}))
            return EXIT_OK if admission.admitted else EXIT_NO_SYMMETRY

        forms = _kinds(cfg, admission)
        reductions = [stage_reduce(P, f, admission) for f in forms]
        summary["reduce"] = [R.to_dict() for R in reductions]
        if cfg.subcommand == "reduce":
            for R in reductions:
                print(R.describe(), file=out)
            write_json(cfg, "reduce.json", _envelope(cfg, summary))
            return EXIT_OK

        summary["solve"] = []
        solutions = []
        for R in reductions:
            sol = stage_solve(R, cfg)
            solutions.append((R, sol))
            summary["solve"].append(sol.to_dict())
            tag = "tw_" if R.kind == "TravelingWave" else "ss_"
            _write_profiles(cfg, tag, R, sol)
            print(f"{R.kind}: " + ", ".join(f"{k} = {v:.12g}" for k, v in sol.params.items())
                  + f" [{sol.status}]", file=out)
        if cfg.subcommand == "solve":
            write_json(cfg, "solve.json", _envelope(cfg, summary))
            return EXIT_OK

        summary["validate"] = []
        failed = False
        for R, sol in solutions:
            if sol.degenerate or sol.u_profile is None:
                summary["validate"].append({"kind": R.kind, "skipped": "degenerate solution"})
                continue
            rep, track = stage_validate(R, sol, cfg)
            summary["validate"].append({"kind": R.kind, **rep.to_dict()})
            tag = "tw_" if R.kind == "TravelingWave" else "ss_"
            _write_fronts(cfg, tag, R, sol, track)
            for c in rep.checks:
                print(f"  {R.kind} {c['name']}: {c['value']:.3e} "
                      f"(tol {c['tolerance']:.1e}) {'pass' if c['passed'] else 'FAIL'}", file=out)
            failed |= not rep.passed
        name = "summary.json" if cfg.subcommand == "pipeline" else "validate.json"
        write_json(cfg, name, _envelope(cfg, summary))
        return EXIT_VALIDATION if failed else EXIT_OK
    except StageError as exc:
        summary["error"] = {"stage": exc.stage, "code": exc.code, "message": str(exc),
                            **exc.payload}
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        if exc.code == EXIT_NO_SYMMETRY and "rejected" in exc.payload:
            for r in exc.payload["rejected"]:
                print(f"  rejected {r['operator']}: item {r['item']} ({r['condition']})",
                      file=sys.stderr)
        try:
            write_json(cfg, f"{cfg.subcommand}_error.json", _envelope(cfg, summary))
        except OSError:
            pass
        return exc.code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stefanlie", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"stefanlie {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("problem", help="problem JSON file")
        s.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV})")
        s.add_argument("--format", nargs="+", choices=("json", "csv"), default=["json", "csv"])
        s.add_argument("--rtol", type=float)
        s.add_argument("--atol", type=float)
        s.add_argument("--root-tol", type=float)
        s.add_argument("--far-tol", type=float)
        s.add_argument("--mu-cap", type=float)
        s.add_argument("--kind", choices=("auto", "TravelingWave", "SelfSimilar"), default="auto")
        s.add_argument("--method", choices=("first_integral", "shooting", "both"), default="both")
        s.add_argument("--guess", nargs=2, type=float, metavar=("OMEGA1", "OMEGA2"))
        s.add_argument("--no-simulate", action="store_true")
        s.add_argument("--n-points", type=int, default=400)
        s.add_argument("--t0", type=float, default=1.0)
        s.add_argument("--t-end", type=float, default=4.0)
    return p


def config_from_args(args) -> RunConfig:
    tol = {k: getattr(args, k) for k in ("rtol", "atol", "root_tol", "far_tol", "mu_cap")
           if getattr(args, k) is not None}
    out_dir = args.out or os.environ.get(OUTPUT_ENV) or os.path.join(os.getcwd(), "stefanlie_out")
    return RunConfig(args.subcommand, args.problem, out_dir, tuple(args.format), tol,
                     args.kind, args.method, tuple(args.guess) if args.guess else None,
                     not args.no_simulate, args.n_points, args.t0, args.t_end)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.shooting()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
