"""Experiment orchestration: seeded trial sweeps, paired algorithm comparisons,
timing benchmarks, and theory curves, all emitted as plain CSV.

Trial seeds derive from ``SeedSequence((master_seed, rho_index, alpha_index,
trial))`` so any single trial can be reproduced in isolation and parallel
execution cannot perturb the results.  Within a (rho, alpha, trial) cell every
requested algorithm consumes the identical problem instance, enabling paired
statistics.  CSV cells are written with ``repr`` floats, so reruns are
byte-identical except for the wall-time column.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .metrics import aggregate, compute_metrics
from .model import SignalParams, make_instance
from .recovery import (CisrConfig, DegenerateParameters, RfpiConfig,
                       cisr_recover, naive_cavity_recover, rfpi_recover)
from .theory import NoConvergence, RSParams, rs_predict

__all__ = [
    "ExperimentPlan",
    "TrialRecord",
    "ExperimentReport",
    "ALGORITHMS",
    "run_plan",
    "run_timing_benchmark",
    "emit_theory_curves",
    "default_parallelism",
]

ALGORITHMS = ("rfpi", "cisr", "nort", "naive_cavity")

TRIAL_HEADER = ("rho,alpha,trial,algorithm,seed,mse,cosine,overlap_m,fp,fn,"
                "converged,outer_iters,inner_iters,restarts,wall_time_s")
SUMMARY_HEADER = ("rho,alpha,algorithm,trials,mse_mean,mse_std,mse_stderr,"
                  "cosine_mean,cosine_std,fp_mean,fn_mean,converged_fraction,"
                  "inner_iters_mean,wall_time_mean_s,wall_time_std_s")
THEORY_HEADER = ("rho,alpha,m,chi,q_hat,m_hat,q_big_hat,mse,fp,fn,at_lhs,"
                 "stable,converged")
TIMING_HEADER = "k,algorithm,trials,wall_time_mean_s,wall_time_std_s,inner_iters_mean"


def default_parallelism() -> int:
    """CLI/plan fallback: ONEBIT_CS_THREADS, else the CPU count."""
    env = os.environ.get("ONEBIT_CS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentPlan:
    """A full sweep specification; everything an experiment needs to rerun."""

    alphas: Sequence[float]
    rhos: Sequence[float]
    n: int = 128
    trials: int = 200
    master_seed: int = 0
    algorithms: Sequence[str] = ("rfpi",)
    rfpi_cfg: RfpiConfig = field(default_factory=RfpiConfig)
    cisr_cfg: CisrConfig = field(default_factory=CisrConfig)
    output_dir: Path = Path("results")
    theory_only: bool = False
    parallelism: int = 0  # 0 -> default_parallelism()
    exact_support: bool = True
    cavity_max_iters: int = 500
    cavity_tol: float = 1e-8
    timing_ks: Sequence[int] = (4, 8, 16, 32)
    timing_alpha: float = 3.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.alphas or not self.rhos:
            raise ValueError("alphas and rhos must be nonempty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")


@dataclass(frozen=True)
class TrialRecord:
    rho: float
    alpha: float
    trial: int
    algorithm: str
    seed: int
    mse: float
    cosine: float
    overlap_m: float
    fp: Optional[float]
    fn_: Optional[float]
    converged: bool
    outer_iters: int
    inner_iters: int
    restarts: int
    wall_time_s: float


@dataclass
class ExperimentReport:
    trial_csv: Optional[Path]
    summary_csv: Optional[Path]
    theory_csv: Optional[Path]
    records: list
    failed_trials: int
    failed_conditions: int


def trial_seed(master_seed: int, rho_idx: int, alpha_idx: int, trial: int) -> int:
    """64-bit instance seed for one (condition, trial) cell."""
    ss = np.random.SeedSequence(entropy=(int(master_seed) & (2**64 - 1),
                                         rho_idx, alpha_idx, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def _signal_params(n: int, rho: float, exact_support: bool) -> SignalParams:
    if exact_support:
        return SignalParams(n=n, rho=rho, k_exact=max(1, int(round(rho * n))))
    return SignalParams(n=n, rho=rho)


def run_trial_cell(plan: ExperimentPlan, rho_idx: int, alpha_idx: int,
                   trial: int) -> list:
    """Run every requested algorithm on the single instance of one cell."""
    rho = float(plan.rhos[rho_idx])
    alpha = float(plan.alphas[alpha_idx])
    n = plan.n
    m = max(1, int(round(alpha * n)))
    seed = trial_seed(plan.master_seed, rho_idx, alpha_idx, trial)
    inst = make_instance(n, m, _signal_params(n, rho, plan.exact_support), seed)
    k_prior = max(1, int(round(rho * n)))
    records = []
    for algo in plan.algorithms:
        if algo == "rfpi":
            res = rfpi_recover(inst, plan.rfpi_cfg)
        elif algo == "cisr":
            res = cisr_recover(inst, plan.cisr_cfg, k_prior=k_prior)
        elif algo == "nort":
            res = cisr_recover(inst, replace(plan.cisr_cfg, onsager_enabled=False),
                               k_prior=k_prior)
        elif algo == "naive_cavity":
            try:
                res, _trace = naive_cavity_recover(inst, max_iters=plan.cavity_max_iters,
                                                   tol=plan.cavity_tol)
            except DegenerateParameters:
                # nothing recoverable: record the failure, keep the sweep alive
                records.append(TrialRecord(
                    rho=rho, alpha=alpha, trial=trial, algorithm=algo, seed=seed,
                    mse=float("nan"), cosine=float("nan"), overlap_m=float("nan"),
                    fp=None, fn_=None, converged=False, outer_iters=0,
                    inner_iters=0, restarts=0, wall_time_s=0.0))
                continue
        else:  # pragma: no cover - guarded by plan validation
            raise ValueError(algo)
        tm = compute_metrics(inst.x0, res.x_hat)
        records.append(TrialRecord(
            rho=rho, alpha=alpha, trial=trial, algorithm=algo, seed=seed,
            mse=tm.mse, cosine=tm.direction_cosine, overlap_m=tm.overlap_m,
            fp=tm.fp, fn_=tm.fn_, converged=res.converged,
            outer_iters=res.outer_iterations,
            inner_iters=res.inner_iterations_total,
            restarts=res.restarts, wall_time_s=res.wall_time))
    return records


def _cell_worker(args):
    plan, ri, ai, t = args
    return run_trial_cell(plan, ri, ai, t)


def _fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header.split(","))
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _trial_rows(records):
    for r in records:
        yield (r.rho, r.alpha, r.trial, r.algorithm, r.seed, r.mse, r.cosine,
               r.overlap_m, r.fp, r.fn_, r.converged, r.outer_iters,
               r.inner_iters, r.restarts, r.wall_time_s)


def _summaries(plan: ExperimentPlan, records):
    for ri, rho in enumerate(plan.rhos):
        for ai, alpha in enumerate(plan.alphas):
            for algo in plan.algorithms:
                cell = [r for r in records
                        if r.rho == float(rho) and r.alpha == float(alpha)
                        and r.algorithm == algo]
                if not cell:
                    continue
                tms = [compute_like(r) for r in cell]
                s = aggregate(tms)
                wall = np.array([r.wall_time_s for r in cell])
                inner = np.array([r.inner_iters for r in cell], dtype=float)
                conv = np.array([r.converged for r in cell], dtype=float)
                yield (float(rho), float(alpha), algo, len(cell),
                       s.mean["mse"], s.std["mse"], s.stderr["mse"],
                       s.mean["direction_cosine"], s.std["direction_cosine"],
                       s.mean["fp"], s.mean["fn_"], float(conv.mean()),
                       float(inner.mean()), float(wall.mean()),
                       float(wall.std(ddof=1)) if wall.size > 1 else 0.0)


def compute_like(r: TrialRecord):
    """Rehydrate a TrialMetrics view from a stored record (for aggregation)."""
    from .metrics import TrialMetrics
    return TrialMetrics(mse=r.mse, direction_cosine=r.cosine, overlap_m=r.overlap_m,
                        fp=r.fp, fn_=r.fn_, support_size_est=0)


def _theory_rows(rhos, alphas):
    for rho in rhos:
        init = None
        for alpha in sorted(float(a) for a in alphas):
            params = RSParams(alpha=alpha, rho=float(rho))
            try:
                pred = rs_predict(params, init=init)
                point = pred.point
                init = point
                yield (float(rho), alpha, point.m, point.chi, point.q_hat,
                       point.m_hat, point.q_big_hat, pred.mse, pred.fp,
                       pred.fn_, pred.at_lhs, pred.stable_rs, point.converged)
            except NoConvergence:
                yield (float(rho), alpha, None, None, None, None, None, None,
                       None, None, None, None, False)


def emit_theory_curves(rhos: Sequence[float], alphas: Sequence[float],
                       out: Path) -> Path:
    """Write the theoretical prediction grid; non-converged points are
    flagged in the ``converged`` column, never dropped.  Successive alphas at
    fixed rho reuse the previous fixed point as a continuation start."""
    out = Path(out)
    _write_csv(out, THEORY_HEADER, _theory_rows(rhos, alphas))
    return out


def run_plan(plan: ExperimentPlan) -> ExperimentReport:
    """Execute the sweep and write trial / summary / theory CSVs.

    Per-trial failures are recorded (converged=false) and never abort the
    sweep.  Parallel workers each own their (condition, trial) cells;
    the output is sorted by (rho, alpha, trial, algorithm) so its content is
    independent of scheduling.
    """
    out_dir = Path(plan.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    theory_csv = out_dir / "theory.csv"
    emit_theory_curves(plan.rhos, plan.alphas, theory_csv)
    if plan.theory_only:
        return ExperimentReport(trial_csv=None, summary_csv=None,
                                theory_csv=theory_csv, records=[],
                                failed_trials=0, failed_conditions=0)
    tasks = [(plan, ri, ai, t)
             for ri in range(len(plan.rhos))
             for ai in range(len(plan.alphas))
             for t in range(plan.trials)]
    workers = plan.parallelism or default_parallelism()
    records = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell in pool.map(_cell_worker, tasks, chunksize=4):
                records.extend(cell)
    else:
        for task in tasks:
            records.extend(_cell_worker(task))
    order = {a: i for i, a in enumerate(plan.algorithms)}
    records.sort(key=lambda r: (r.rho, r.alpha, r.trial, order[r.algorithm]))
    trial_csv = out_dir / "trials.csv"
    summary_csv = out_dir / "summary.csv"
    _write_csv(trial_csv, TRIAL_HEADER, _trial_rows(records))
    _write_csv(summary_csv, SUMMARY_HEADER, _summaries(plan, records))
    failed = sum(1 for r in records if not r.converged)
    failed_conditions = 0
    for rho in plan.rhos:
        for alpha in plan.alphas:
            for algo in plan.algorithms:
                cell = [r for r in records if r.rho == float(rho)
                        and r.alpha == float(alpha) and r.algorithm == algo]
                if cell and not any(r.converged for r in cell):
                    failed_conditions += 1
    return ExperimentReport(trial_csv=trial_csv, summary_csv=summary_csv,
                            theory_csv=theory_csv, records=records,
                            failed_trials=failed,
                            failed_conditions=failed_conditions)


def run_timing_benchmark(plan: ExperimentPlan) -> Path:
    """Paired wall-time comparison at fixed alpha over the support sizes in
    ``plan.timing_ks``; forced serial so timings do not contend.

    A warmup trial per algorithm is run first (and discarded) so jit
    compilation never pollutes the first measurement.
    """
    algos = [a for a in plan.algorithms if a != "naive_cavity"]
    if len(algos) < 2:
        raise ValueError("timing benchmark needs at least two of rfpi/cisr/nort")
    n = plan.n
    out_dir = Path(plan.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    warm = replace(plan, rhos=(plan.timing_ks[0] / n,), alphas=(plan.timing_alpha,),
                   algorithms=tuple(algos), trials=1)
    run_trial_cell(warm, 0, 0, 0)
    rows = []
    for k in plan.timing_ks:
        rho = k / n
        sub = replace(plan, rhos=(rho,), alphas=(plan.timing_alpha,),
                      algorithms=tuple(algos))
        cells = []
        for t in range(plan.trials):
            cells.extend(run_trial_cell(sub, 0, 0, t))
        for algo in algos:
            sel = [r for r in cells if r.algorithm == algo]
            wall = np.array([r.wall_time_s for r in sel])
            inner = np.array([r.inner_iters for r in sel], dtype=float)
            rows.append((k, algo, len(sel), float(wall.mean()),
                         float(wall.std(ddof=1)) if wall.size > 1 else 0.0,
                         float(inner.mean())))
    timing_csv = out_dir / "timing.csv"
    _write_csv(timing_csv, TIMING_HEADER, rows)
    return timing_csv
