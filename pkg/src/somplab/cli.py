"""Command-line front end.

Subcommands: solve, ric, check, perturb, experiment.  Exit codes are
part of the contract: 0 success (including a guarantee verdict of
"fails", which is an answer, not an error), 1 usage or input-format
problems, 2 domain or numerical errors, 3 red alert (an experiment
produced a trial whose passed guarantee was violated).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import InvalidConfig, ParseError, SomplabError
from .guarantees import MODES, check_guarantee
from .harness import TrialChecks, render_report, run_experiment
from .matrixio import read_matrix, write_matrix
from .model import min_support_row_norm
from .perturb import (
    B_MODES,
    ENSEMBLES,
    InstanceConfig,
    PerturbationSpec,
    apply_perturbation,
    calibrate_perturbation,
)
from .rip import DEFAULT_SUBSET_BUDGET, ric_exact
from .solver import SolverOptions, somp_solve


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exceptions, not exits."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    p = _Parser(prog="somplab", description="joint-sparse recovery toolbox")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="recover a row-sparse signal",
                        description="Greedy joint recovery from a sensing matrix "
                                    "and observation file; prints the support.")
    sp.add_argument("--phi", required=True, help="sensing matrix file")
    sp.add_argument("--y", required=True, help="observation matrix file")
    sp.add_argument("--sparsity", type=int, required=True, help="number of rows to select")
    sp.add_argument("--out", help="write the recovered signal matrix here")
    sp.add_argument("--trace", help="write per-iteration details to this file")

    rp = sub.add_parser("ric", help="exact restricted isometry constant",
                        description="Enumerate all column subsets of the given "
                                    "order and print the exact constant.")
    rp.add_argument("--matrix", required=True)
    rp.add_argument("--order", type=int, required=True)
    rp.add_argument("--budget", type=int, default=DEFAULT_SUBSET_BUDGET,
                    help="largest subset count the enumeration may attempt")

    cp = sub.add_parser("check", help="evaluate the recovery guarantee",
                        description="Evaluate the sufficient recovery condition "
                                    "for given perturbation levels.  The verdict "
                                    "is printed and the exit code stays 0 either way.")
    cp.add_argument("--phi", required=True, help="clean sensing matrix file")
    cp.add_argument("--sparsity", type=int, required=True)
    cp.add_argument("--mode", choices=MODES, default="general")
    cp.add_argument("--y", help="clean observation file (noisy modes)")
    cp.add_argument("--x", help="true signal file; its weakest occupied row "
                                "supplies the floor (noisy modes)")
    cp.add_argument("--t0", type=float,
                    help="weakest occupied-row norm, given directly instead of --x")
    cp.add_argument("--eps0", type=float, default=0.0,
                    help="relative spectral size of the sensing perturbation")
    cp.add_argument("--eps", type=float,
                    help="submatrix-level relative size (defaults to --eps0)")
    cp.add_argument("--epsb", type=float, default=0.0,
                    help="relative size of the observation perturbation")
    cp.add_argument("--budget", type=int, default=DEFAULT_SUBSET_BUDGET)

    pp = sub.add_parser("perturb", help="calibrate and apply a perturbation",
                        description="Scale random perturbations to hit the "
                                    "target levels, write the perturbed files, "
                                    "and print the realized levels.")
    pp.add_argument("--phi", required=True)
    pp.add_argument("--y", required=True)
    pp.add_argument("--eps0", type=float, default=0.0)
    pp.add_argument("--epsb", type=float, default=0.0)
    pp.add_argument("--b-mode", choices=B_MODES, default="gaussian")
    pp.add_argument("--sparsity", type=int, default=1,
                    help="submatrix width for level measurement")
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--out-prefix", required=True,
                    help="write PREFIX.phi.txt, PREFIX.y.txt, PREFIX.e.txt, PREFIX.b.txt")
    pp.add_argument("--budget", type=int, default=DEFAULT_SUBSET_BUDGET)

    ep = sub.add_parser("experiment", help="run a Monte Carlo sweep",
                        description="Run the trial sweep described by a JSON "
                                    "config and render the deterministic report.")
    ep.add_argument("--config", required=True, help="JSON experiment description")
    ep.add_argument("--out", help="write the report here instead of stdout")
    return p


def _cmd_solve(args) -> int:
    Phi = read_matrix(args.phi)
    Y = read_matrix(args.y)
    result = somp_solve(Y, Phi, args.sparsity)
    if args.trace:
        t = result.trace
        lines = [f"iter={i} selected={j} residual={t.residual_norms[i]!r}"
                 for i, j in enumerate(t.selected)]
        if result.terminated_early:
            lines.append(f"stopped early: {result.terminated_early}")
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("".join(line + "\n" for line in lines))
    print(",".join(str(j) for j in result.support))
    if args.out:
        write_matrix(args.out, result.signal)
    return 0


def _cmd_ric(args) -> int:
    A = read_matrix(args.matrix)
    est = ric_exact(A, args.order, subset_budget=args.budget)
    print(f"order={est.order}")
    print(f"delta={est.delta!r}")
    print(f"witness={','.join(str(j) for j in est.witness_subset)}")
    print(f"subsets_examined={est.subsets_examined}")
    return 0


def _cmd_check(args) -> int:
    from .rip import PerturbationLevels

    Phi = read_matrix(args.phi)
    k = args.sparsity
    noisy = args.mode != "noiseless"
    Y = read_matrix(args.y) if args.y else None
    if args.x is not None and args.t0 is not None:
        raise _UsageError("somplab check: give --x or --t0, not both")
    t0 = args.t0
    if args.x is not None:
        t0 = min_support_row_norm(read_matrix(args.x)).t0
    if noisy and Y is None:
        raise _UsageError("somplab check: --y is required for noisy modes")
    if noisy and t0 is None:
        raise _UsageError("somplab check: --x or --t0 is required for noisy modes")
    eps = args.eps if args.eps is not None else args.eps0
    levels = PerturbationLevels(eps0=args.eps0, eps=eps, epsb=args.epsb, order=k)
    delta = ric_exact(Phi, k + 1, subset_budget=args.budget)
    report = check_guarantee(Phi, Y, t0, k, levels, delta, mode=args.mode)
    print(f"mode={report.mode}")
    print(f"order={delta.order}")
    print(f"delta={delta.delta!r}")
    print(f"eps0={levels.eps0!r}")
    print(f"eps={levels.eps!r}")
    print(f"epsb={levels.epsb!r}")
    print(f"eps_h={report.eps_h!r}")
    print(f"q_threshold={'-' if report.q_threshold is None else repr(report.q_threshold)}")
    print(f"error_bound={'-' if report.error_bound is None else repr(report.error_bound)}")
    if report.error_bound_direct is not None:
        print(f"error_bound_direct={report.error_bound_direct!r}")
    if report.q_threshold is None:
        print(f"condition unsatisfiable ({report.note})")
    elif report.condition_holds:
        print(f"condition holds ({delta.delta:.6g} < {report.q_threshold:.6g})")
    else:
        print(f"condition fails ({delta.delta:.6g} >= {report.q_threshold:.6g})")
    return 0


def _cmd_perturb(args) -> int:
    Phi = read_matrix(args.phi)
    Y = read_matrix(args.y)
    spec = PerturbationSpec(target_eps0=args.eps0, target_epsb=args.epsb,
                            seed=args.seed, b_mode=args.b_mode)
    spec = calibrate_perturbation(Phi, Y, spec, order=args.sparsity,
                                  subset_budget=args.budget)
    Y_obs, Phi_obs = apply_perturbation(Y, Phi, spec)
    write_matrix(f"{args.out_prefix}.phi.txt", Phi_obs)
    write_matrix(f"{args.out_prefix}.y.txt", Y_obs)
    write_matrix(f"{args.out_prefix}.e.txt", spec.E)
    write_matrix(f"{args.out_prefix}.b.txt", spec.B)
    lv = spec.realized
    print(f"eps0={lv.eps0!r}")
    print(f"eps={lv.eps!r}")
    print(f"epsb={lv.epsb!r}")
    return 0


_INSTANCE_KEYS = {"m", "n", "L", "k", "ensemble", "signal_row_norm_min",
                  "embed_overlap", "matrix"}
_PERTURBATION_KEYS = {"eps0", "epsb", "b_mode"}
_CHECK_KEYS = {"ric", "guarantee", "selected_scores", "filter_proximity",
               "filter_deviation"}
_SOLVER_KEYS = {"residual_stop_tol", "rank_tol"}
_TOP_KEYS = {"instance", "perturbation", "trials", "master_seed", "mode",
             "checks", "subset_budget", "solver"}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise InvalidConfig(f"unknown key {unknown[0]!r} in {where}")


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise InvalidConfig(f"missing key {key!r} in {where}")
    return d[key]


def _load_config(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidConfig("config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")

    inst = _require(raw, "instance", "config")
    if not isinstance(inst, dict):
        raise InvalidConfig("'instance' must be an object")
    _reject_unknown(inst, _INSTANCE_KEYS, "instance")
    ensemble = inst.get("ensemble", "gaussian")
    if ensemble not in ENSEMBLES:
        raise InvalidConfig(f"unknown ensemble {ensemble!r}")
    matrix = None
    if "matrix" in inst:
        if ensemble != "user-supplied":
            raise InvalidConfig("'matrix' requires ensemble 'user-supplied'")
        matrix = read_matrix(inst["matrix"])
    cfg = InstanceConfig(
        m=_require(inst, "m", "instance"), n=_require(inst, "n", "instance"),
        L=_require(inst, "L", "instance"), k=_require(inst, "k", "instance"),
        signal_row_norm_min=inst.get("signal_row_norm_min", 0.0),
        matrix_ensemble=ensemble, matrix=matrix,
        embed_overlap=inst.get("embed_overlap", 0.5))

    pert = raw.get("perturbation", {})
    if not isinstance(pert, dict):
        raise InvalidConfig("'perturbation' must be an object")
    _reject_unknown(pert, _PERTURBATION_KEYS, "perturbation")
    eps0 = pert.get("eps0", 0.0)
    epsb = pert.get("epsb", 0.0)
    b_mode = pert.get("b_mode", "gaussian")
    if b_mode not in B_MODES:
        raise InvalidConfig(f"unknown b_mode {b_mode!r}")
    eps0_levels = [float(v) for v in (eps0 if isinstance(eps0, list) else [eps0])]
    epsb_levels = [float(v) for v in (epsb if isinstance(epsb, list) else [epsb])]
    if not eps0_levels or not epsb_levels:
        raise InvalidConfig("perturbation level lists must be nonempty")

    checks_raw = raw.get("checks", {})
    if not isinstance(checks_raw, dict):
        raise InvalidConfig("'checks' must be an object")
    _reject_unknown(checks_raw, _CHECK_KEYS, "checks")
    checks = TrialChecks(**{k: bool(v) for k, v in checks_raw.items()})

    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise InvalidConfig("'solver' must be an object")
    _reject_unknown(solver_raw, _SOLVER_KEYS, "solver")
    opts = SolverOptions(**{k: float(v) for k, v in solver_raw.items()})

    mode = raw.get("mode", "general")
    if mode not in MODES:
        raise InvalidConfig(f"unknown mode {mode!r}")
    trials = _require(raw, "trials", "config")
    master_seed = _require(raw, "master_seed", "config")
    if not isinstance(trials, int) or trials < 1:
        raise InvalidConfig("'trials' must be a positive integer")
    if not isinstance(master_seed, int) or master_seed < 0:
        raise InvalidConfig("'master_seed' must be a nonnegative integer")
    subset_budget = raw.get("subset_budget", DEFAULT_SUBSET_BUDGET)
    if not isinstance(subset_budget, int) or subset_budget < 1:
        raise InvalidConfig("'subset_budget' must be a positive integer")
    return dict(cfg=cfg, eps0_levels=eps0_levels, epsb_levels=epsb_levels,
                trials=trials, master_seed=master_seed, checks=checks,
                mode=mode, b_mode=b_mode, subset_budget=subset_budget, opts=opts)


def _cmd_experiment(args) -> int:
    parsed = _load_config(args.config)
    report = run_experiment(
        parsed["cfg"], parsed["eps0_levels"], parsed["epsb_levels"],
        parsed["trials"], parsed["master_seed"], checks=parsed["checks"],
        mode=parsed["mode"], b_mode=parsed["b_mode"],
        subset_budget=parsed["subset_budget"], opts=parsed["opts"])
    text = render_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if report.red_alert:
        print("red alert: a passed guarantee was violated", file=sys.stderr)
        return 3
    return 0


_COMMANDS = {"solve": _cmd_solve, "ric": _cmd_ric, "check": _cmd_check,
             "perturb": _cmd_perturb, "experiment": _cmd_experiment}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (_UsageError, ParseError, InvalidConfig, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SomplabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
