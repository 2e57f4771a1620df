"""Monte Carlo verification harness.

A trial generates a clean instance, calibrates and applies a
perturbation, solves from the perturbed observations, and records what
the guarantee machinery predicted next to what actually happened.  The
one invariant that must never break: a trial whose sufficient condition
passed and whose recovery still went wrong is a red alert, not a
statistic.

Determinism: the seeds of trial t derive from SeedSequence([master_seed,
t]) (two 64-bit words: instance seed, perturbation seed).  Sweep points
share trial seeds on purpose, so levels are compared on identical
instances and noise directions.  Reports render to text without wall
times, which keeps a rerun byte-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidOrder, PreconditionViolated, TraceMismatch
from .guarantees import GuaranteeReport, check_guarantee, perturbation_magnitude_for_mode
from .model import (
    as_matrix,
    as_support,
    min_support_row_norm,
    relative_frobenius_error,
    support_of,
)
from .perturb import (
    InstanceConfig,
    PerturbationSpec,
    apply_perturbation,
    calibrate_perturbation,
    gen_sensing_matrix,
    gen_sparse_signal,
)
from .rip import DEFAULT_SUBSET_BUDGET, RicEstimate, residual_sensing_matrix, ric_exact
from .solver import IterationTrace, RecoveryResult, SolverOptions, somp_solve, solve_perturbed

_SCORE_VANISH_TOL = 1e-10


@dataclass(frozen=True)
class TrialChecks:
    """Which optional diagnostics a trial should run."""

    ric: bool = True
    guarantee: bool = True
    selected_scores: bool = True
    filter_proximity: bool = False
    filter_deviation: bool = False


@dataclass(frozen=True)
class FilterProximityDiagnostic:
    """Row-wise matched-filter proximity check against an exact constant."""

    max_deviation: float
    bound: float
    delta: float
    order: int
    passed: bool


@dataclass(frozen=True)
class FilterDeviationDiagnostic:
    """Per-iteration filter distance between a perturbed and a clean run.

    Iterations are compared while the two selection prefixes agree; (the
    first diverging iteration is still comparable, since its filters
    were formed before the diverging picks).  ``diverged_at`` is the
    0-based iteration where selections first differ, None if never.
    """

    deviations: tuple[float, ...]
    bound: float
    diverged_at: int | None
    passed: bool


@dataclass(frozen=True)
class TrialRecord:
    """Everything observed in one trial, ready for tabulation."""

    m: int
    n: int
    L: int
    k: int
    seed: int
    pert_seed: int
    eps0_target: float
    epsb_target: float
    eps0: float
    eps: float
    epsb: float
    delta: float | None
    guarantee: str                    # "pass" | "fail" | "unsat" | "-"
    support_exact: bool
    rel_error: float
    error_bound: float | None
    bound_ok: bool | None
    selected_scores_ok: bool | None
    filter_proximity_ok: bool | None
    filter_deviation_ok: bool | None
    stop: str                         # "-" or the early-stop reason
    wall_time_s: float                # never serialized: reports must be reproducible


def selected_scores_vanish(trace: IterationTrace, rel_tol: float = _SCORE_VANISH_TOL) -> bool:
    """True when already-selected indices score (numerically) zero.

    At every iteration, the matched-filter rows of previously selected
    indices are exact zeros in exact arithmetic; here they must stay
    below ``rel_tol`` times the iteration's largest score.
    """
    for i, scores in enumerate(trace.score_tables):
        prev = trace.selected[:i]
        if prev and float(np.max(scores[list(prev)])) > rel_tol * float(np.max(scores)):
            return False
    return True


def reference_omp_smv(y, Phi, k: int, opts: SolverOptions | None = None) -> RecoveryResult:
    """Plain single-vector orthogonal matching pursuit, written separately.

    Serves as an independent cross-check of the joint solver in the
    L = 1 case: same smallest-index tie-break, same relative residual
    stopping rule, but its own selection arithmetic (absolute
    correlations) and its own least-squares routine.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        if y.shape[1] != 1:
            raise PreconditionViolated("reference solver handles a single measurement vector")
        y = y[:, 0]
    if y.ndim != 1 or y.size != Phi.shape[0]:
        raise PreconditionViolated(f"vector of length {y.size} against {Phi.shape[0]} rows")
    m, n = Phi.shape
    if int(k) != k or not 1 <= int(k) <= min(m, n):
        raise PreconditionViolated(f"sparsity {k} outside 1..min({m}, {n})")
    k = int(k)
    opts = opts if opts is not None else SolverOptions()

    y_norm = float(np.linalg.norm(y))
    stop_at = opts.residual_stop_tol * y_norm
    r = y.copy()
    x = np.zeros(n)
    picked: list[int] = []
    tables, filters, rnorms, ranks = [], [], [], []
    stopped = None
    for _ in range(k):
        if float(np.linalg.norm(r)) <= stop_at:
            stopped = "zero-residual"
            break
        c = Phi.T @ r
        scores = np.abs(c)
        j = int(np.argmax(scores))
        picked.append(j)
        sol, _res, rank, _sv = np.linalg.lstsq(Phi[:, picked], y, rcond=None)
        x = np.zeros(n)
        x[picked] = sol
        r = y - Phi[:, picked] @ sol
        tables.append(scores)
        filters.append(c[:, None])
        rnorms.append(float(np.linalg.norm(r)))
        ranks.append(rank < len(picked))
    trace = IterationTrace(
        label="reference",
        selected=tuple(picked),
        score_tables=tuple(tables),
        filter_matrices=tuple(filters),
        residual_norms=tuple(rnorms),
        initial_residual_norm=y_norm,
        rank_deficient=tuple(ranks),
    )
    return RecoveryResult(support=as_support(picked, n), signal=x[:, None],
                          trace=trace, terminated_early=stopped)


def matched_filter_oracle(Phi, support, x_star, subset_budget: int = DEFAULT_SUBSET_BUDGET,
                          delta: RicEstimate | None = None) -> FilterProximityDiagnostic:
    """Check that the clean matched filter stays row-wise close to the signal.

    For a signal ``x_star`` supported away from ``support`` and
    A = the sensing columns projected off the selected span, every
    unselected row of H = A^T A x_star satisfies

        ||H(j) - x_star(j)||_2  <=  delta / (1 - delta) ||x_star||_F

    with ``delta`` the exact isometry constant at order
    ``||x_star||_0 + |support| + 1`` (computed here by full enumeration
    unless a matching estimate is passed in).  Requires delta < 1; the
    bound is meaningless otherwise.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    support = as_support(support, Phi.shape[1])
    x_star = as_matrix(x_star, "signal")
    star_rows = support_of(x_star)
    if set(star_rows) & set(support):
        raise PreconditionViolated("signal support overlaps the selected support")
    order = len(star_rows) + len(support) + 1
    if order > Phi.shape[1]:
        raise InvalidOrder(f"required order {order} exceeds the column count {Phi.shape[1]}")
    if delta is None:
        delta = ric_exact(Phi, order, subset_budget)
    elif delta.order != order:
        raise PreconditionViolated(f"estimate has order {delta.order}, need {order}")
    d = delta.delta
    if d >= 1.0:
        raise PreconditionViolated(f"isometry constant {d} >= 1: proximity bound undefined")
    A = residual_sensing_matrix(Phi, support)
    H = A.T @ (A @ x_star)
    others = [j for j in range(Phi.shape[1]) if j not in support]
    dev = float(np.max(np.linalg.norm(H[others] - x_star[others], axis=1)))
    x_norm = float(np.linalg.norm(x_star))
    bound = d / (1.0 - d) * x_norm
    passed = dev <= bound + 1e-12 * max(1.0, x_norm)
    return FilterProximityDiagnostic(max_deviation=dev, bound=bound, delta=d,
                                     order=order, passed=passed)


def filter_deviation_diagnostic(trace_perturbed: IterationTrace, trace_clean: IterationTrace,
                                bound: float) -> FilterDeviationDiagnostic:
    """Compare matched filters of a perturbed and a clean run iteration by
    iteration, against a precomputed deviation bound.

    Both traces must come from the same instance; structurally
    incompatible traces (different filter shapes) raise TraceMismatch.
    Divergence of the selection sequences is an observation, not an
    error: comparison simply stops after the first diverging iteration.
    """
    if not trace_perturbed.filter_matrices or not trace_clean.filter_matrices:
        raise TraceMismatch("need at least one executed iteration in both traces")
    if trace_perturbed.filter_matrices[0].shape != trace_clean.filter_matrices[0].shape:
        raise TraceMismatch(
            f"filter shapes differ: {trace_perturbed.filter_matrices[0].shape} "
            f"vs {trace_clean.filter_matrices[0].shape}")
    diverged_at = None
    last = min(len(trace_perturbed.selected), len(trace_clean.selected))
    for i in range(last):
        if trace_perturbed.selected[i] != trace_clean.selected[i]:
            diverged_at = i
            break
    compare_until = last if diverged_at is None else diverged_at + 1
    deviations = tuple(
        float(np.linalg.norm(trace_perturbed.filter_matrices[i] - trace_clean.filter_matrices[i]))
        for i in range(compare_until))
    passed = all(d <= bound + 1e-12 * max(1.0, bound) for d in deviations)
    return FilterDeviationDiagnostic(deviations=deviations, bound=bound,
                                     diverged_at=diverged_at, passed=passed)


def run_trial(cfg: InstanceConfig, pert: PerturbationSpec,
              checks: TrialChecks = TrialChecks(), mode: str = "general",
              subset_budget: int = DEFAULT_SUBSET_BUDGET,
              delta: RicEstimate | None = None,
              opts: SolverOptions | None = None) -> TrialRecord:
    """Run one generate/perturb/solve/check trial and record the outcome.

    ``delta`` may carry a precomputed order-(k+1) estimate of the clean
    sensing matrix (useful when many trials share it); it is validated
    and used instead of re-enumerating.  A failing step raises with
    context; nothing is skipped silently.
    """
    started = time.perf_counter()
    Phi = gen_sensing_matrix(cfg)
    X = gen_sparse_signal(cfg)
    Y = Phi @ X
    true_support = support_of(X)

    spec = calibrate_perturbation(Phi, Y, pert, order=max(cfg.k, 1), subset_budget=subset_budget)
    Y_obs, Phi_obs = apply_perturbation(Y, Phi, spec)

    if delta is not None and delta.order != cfg.k + 1:
        raise PreconditionViolated(
            f"provided estimate has order {delta.order}, need k + 1 = {cfg.k + 1}")
    if checks.ric and delta is None:
        delta = ric_exact(Phi, cfg.k + 1, subset_budget)

    report: GuaranteeReport | None = None
    if checks.guarantee:
        if delta is None:
            raise PreconditionViolated("guarantee check needs the isometry check enabled")
        t0 = min_support_row_norm(X).t0
        report = check_guarantee(Phi, Y, t0, cfg.k, spec.realized, delta, mode=mode)

    solved = solve_perturbed(Y_obs, Phi_obs, cfg.k, opts)
    support_exact = solved.support == true_support
    rel_error = relative_frobenius_error(solved.signal, X)

    scores_ok = selected_scores_vanish(solved.trace) if checks.selected_scores else None

    proximity_ok = None
    deviation_ok = None
    if checks.filter_proximity or checks.filter_deviation:
        clean = somp_solve(Y, Phi, cfg.k, opts)
        if checks.filter_proximity:
            if delta is None:
                raise PreconditionViolated(
                    "filter proximity check needs the isometry check enabled")
            if delta.delta >= 1.0:
                proximity_ok = None  # bound undefined at this isometry constant
            else:
                proximity_ok = True
                for i in range(len(clean.trace.selected)):
                    prefix = clean.trace.selected[:i]
                    if not set(prefix) <= set(true_support):
                        continue  # hypothesis gone; nothing to assert here
                    X_rest = X.copy()
                    X_rest[list(prefix)] = 0.0
                    diag = matched_filter_oracle(Phi, prefix, X_rest, subset_budget,
                                                 delta=delta)
                    proximity_ok = proximity_ok and diag.passed
        if checks.filter_deviation:
            if report is not None and math.isfinite(report.eps_h):
                dev = filter_deviation_diagnostic(solved.trace, clean.trace, report.eps_h)
                deviation_ok = dev.passed
            else:
                deviation_ok = None  # no finite bound to compare against

    verdict = "-"
    bound_ok = None
    error_bound = None
    if report is not None:
        if report.q_threshold is None:
            verdict = "unsat"
        else:
            verdict = "pass" if report.condition_holds else "fail"
        error_bound = report.error_bound
        if error_bound is not None:
            bound_ok = rel_error <= error_bound

    lv = spec.realized
    return TrialRecord(
        m=cfg.m, n=cfg.n, L=cfg.L, k=cfg.k, seed=cfg.seed, pert_seed=spec.seed,
        eps0_target=spec.target_eps0, epsb_target=spec.target_epsb,
        eps0=lv.eps0, eps=lv.eps, epsb=lv.epsb,
        delta=None if delta is None else delta.delta,
        guarantee=verdict, support_exact=support_exact, rel_error=rel_error,
        error_bound=error_bound, bound_ok=bound_ok,
        selected_scores_ok=scores_ok, filter_proximity_ok=proximity_ok,
        filter_deviation_ok=deviation_ok,
        stop=solved.terminated_early or "-",
        wall_time_s=time.perf_counter() - started,
    )


def trial_seeds(master_seed: int, trial: int) -> tuple[int, int]:
    """Deterministic (instance seed, perturbation seed) of trial ``trial``.

    Two 64-bit words drawn from SeedSequence([master_seed, trial]); the
    derivation is part of the report contract, so experiments reproduce
    from the master seed alone.
    """
    state = np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


@dataclass(frozen=True)
class PointSummary:
    """Aggregates of one sweep point."""

    eps0_target: float
    epsb_target: float
    trials: int
    support_recovery_rate: float
    mean_rel_error: float
    max_rel_error: float
    bound_rate: float | None
    guarantee_pass_count: int
    recovery_rate_given_pass: float | None
    bound_rate_given_pass: float | None


@dataclass(frozen=True)
class ExperimentReport:
    """All trial records of a sweep plus the aggregates over them."""

    cfg: InstanceConfig
    mode: str
    b_mode: str
    trials_per_point: int
    master_seed: int
    checks: TrialChecks
    points: tuple[PointSummary, ...]
    records: tuple[TrialRecord, ...]
    support_recovery_rate: float
    mean_rel_error: float
    max_rel_error: float
    bound_rate: float | None
    guarantee_pass_count: int
    recovery_rate_given_pass: float | None
    bound_rate_given_pass: float | None
    red_alert: bool


def _bound_rate(records) -> float | None:
    # unconditional: over every trial that evaluated a bound at all
    scored = [r for r in records if r.bound_ok is not None]
    if not scored:
        return None
    return sum(bool(r.bound_ok) for r in scored) / len(scored)


def _summarize(eps0_target, epsb_target, records) -> PointSummary:
    n = len(records)
    passed = [r for r in records if r.guarantee == "pass"]
    return PointSummary(
        eps0_target=eps0_target,
        epsb_target=epsb_target,
        trials=n,
        support_recovery_rate=sum(r.support_exact for r in records) / n,
        mean_rel_error=sum(r.rel_error for r in records) / n,
        max_rel_error=max(r.rel_error for r in records),
        bound_rate=_bound_rate(records),
        guarantee_pass_count=len(passed),
        recovery_rate_given_pass=(sum(r.support_exact for r in passed) / len(passed)
                                  if passed else None),
        bound_rate_given_pass=(sum(bool(r.bound_ok) for r in passed) / len(passed)
                               if passed else None),
    )


def run_experiment(cfg: InstanceConfig, eps0_levels, epsb_levels, trials: int,
                   master_seed: int, checks: TrialChecks = TrialChecks(),
                   mode: str = "general", b_mode: str = "gaussian",
                   subset_budget: int = DEFAULT_SUBSET_BUDGET,
                   opts: SolverOptions | None = None) -> ExperimentReport:
    """Run a deterministic sweep over perturbation levels.

    ``eps0_levels`` x ``epsb_levels`` form the sweep grid (scalars are
    promoted to one-element lists).  Each point runs ``trials`` trials
    whose seeds depend only on (master_seed, trial index), so points see
    identical instances and noise directions at different scales.
    """
    eps0_levels = [float(e) for e in np.atleast_1d(eps0_levels)]
    epsb_levels = [float(e) for e in np.atleast_1d(epsb_levels)]
    if trials < 1:
        raise PreconditionViolated("need at least one trial per point")
    all_records: list[TrialRecord] = []
    points: list[PointSummary] = []
    shared_delta: RicEstimate | None = None
    if checks.ric and cfg.matrix_ensemble == "user-supplied":
        # one matrix for every trial: enumerate once
        shared_delta = ric_exact(cfg.matrix, cfg.k + 1, subset_budget)
    for e0 in eps0_levels:
        for eb in epsb_levels:
            recs = []
            for t in range(trials):
                iseed, pseed = trial_seeds(master_seed, t)
                tcfg = replace(cfg, seed=iseed)
                tpert = PerturbationSpec(target_eps0=e0, target_epsb=eb,
                                         seed=pseed, b_mode=b_mode)
                recs.append(run_trial(tcfg, tpert, checks=checks, mode=mode,
                                      subset_budget=subset_budget,
                                      delta=shared_delta, opts=opts))
            points.append(_summarize(e0, eb, recs))
            all_records.extend(recs)

    passed = [r for r in all_records if r.guarantee == "pass"]
    red_alert = any(r.guarantee == "pass"
                    and (not r.support_exact or r.bound_ok is False)
                    for r in all_records)
    return ExperimentReport(
        cfg=cfg, mode=mode, b_mode=b_mode, trials_per_point=trials,
        master_seed=master_seed, checks=checks,
        points=tuple(points), records=tuple(all_records),
        support_recovery_rate=sum(r.support_exact for r in all_records) / len(all_records),
        mean_rel_error=sum(r.rel_error for r in all_records) / len(all_records),
        max_rel_error=max(r.rel_error for r in all_records),
        bound_rate=_bound_rate(all_records),
        guarantee_pass_count=len(passed),
        recovery_rate_given_pass=(sum(r.support_exact for r in passed) / len(passed)
                                  if passed else None),
        bound_rate_given_pass=(sum(bool(r.bound_ok) for r in passed) / len(passed)
                               if passed else None),
        red_alert=red_alert,
    )


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


_COLUMNS = ("point", "trial", "seed", "pert_seed", "eps0_target", "epsb_target",
            "eps0", "eps", "epsb", "delta", "guarantee", "support_exact",
            "rel_error", "error_bound", "bound_ok", "selected_scores_ok",
            "filter_proximity_ok", "filter_deviation_ok", "stop")


def render_report(report: ExperimentReport) -> str:
    """Render an experiment to reproducible text: a tab-separated trial
    table followed by a summary block.  Wall times are deliberately
    omitted so identical seeds give identical bytes."""
    cfg = report.cfg
    lines = [
        "# somplab experiment report",
        f"# instance: m={cfg.m} n={cfg.n} L={cfg.L} k={cfg.k} "
        f"ensemble={cfg.matrix_ensemble} signal_row_norm_min={_fmt(float(cfg.signal_row_norm_min))}",
        f"# sweep: mode={report.mode} b_mode={report.b_mode} "
        f"trials_per_point={report.trials_per_point} master_seed={report.master_seed}",
        f"# checks: ric={_fmt(report.checks.ric)} guarantee={_fmt(report.checks.guarantee)} "
        f"selected_scores={_fmt(report.checks.selected_scores)} "
        f"filter_proximity={_fmt(report.checks.filter_proximity)} "
        f"filter_deviation={_fmt(report.checks.filter_deviation)}",
        "\t".join(_COLUMNS),
    ]
    per_point = report.trials_per_point
    for i, rec in enumerate(report.records):
        point, trial = divmod(i, per_point)
        row = (point, trial, rec.seed, rec.pert_seed, rec.eps0_target, rec.epsb_target,
               rec.eps0, rec.eps, rec.epsb, rec.delta, rec.guarantee, rec.support_exact,
               rec.rel_error, rec.error_bound, rec.bound_ok, rec.selected_scores_ok,
               rec.filter_proximity_ok, rec.filter_deviation_ok, rec.stop)
        lines.append("\t".join(_fmt(v) for v in row))
    lines.append("summary:")
    for i, p in enumerate(report.points):
        lines.append(
            f"point={i} eps0={_fmt(p.eps0_target)} epsb={_fmt(p.epsb_target)} "
            f"trials={p.trials} support_recovery_rate={_fmt(p.support_recovery_rate)} "
            f"mean_rel_error={_fmt(p.mean_rel_error)} max_rel_error={_fmt(p.max_rel_error)} "
            f"bound_rate={_fmt(p.bound_rate)} "
            f"guarantee_pass_count={p.guarantee_pass_count} "
            f"recovery_rate_given_pass={_fmt(p.recovery_rate_given_pass)} "
            f"bound_rate_given_pass={_fmt(p.bound_rate_given_pass)}")
    lines.append(
        f"overall trials={len(report.records)} "
        f"support_recovery_rate={_fmt(report.support_recovery_rate)} "
        f"mean_rel_error={_fmt(report.mean_rel_error)} "
        f"max_rel_error={_fmt(report.max_rel_error)} "
        f"bound_rate={_fmt(report.bound_rate)} "
        f"guarantee_pass_count={report.guarantee_pass_count} "
        f"recovery_rate_given_pass={_fmt(report.recovery_rate_given_pass)} "
        f"bound_rate_given_pass={_fmt(report.bound_rate_given_pass)} "
        f"red_alert={_fmt(report.red_alert)}")
    return "\n".join(lines) + "\n"
