"""Command-line harness.

``onebit-cs run``    — experiment sweep: trials/summary/theory CSVs.
``onebit-cs timing`` — paired wall-time benchmark over support sizes.
``onebit-cs serve``  — start the HTTP service wrapping the library.

Flags mirror a flat key-value config file (``key = value`` per line, ``#``
comments); explicit flags override file values.  Exit codes: 0 full success,
1 configuration error, 2 partial failures (some trials did not converge).
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (ALGORITHMS, ExperimentPlan, run_plan,
                      run_timing_benchmark)
from .recovery import CisrConfig, RfpiConfig

__all__ = ["main", "build_plan", "load_config"]


def _parse_real(text: str) -> float:
    """Accept decimals and fractions like 1/8."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _parse_list(text: str):
    return [_parse_real(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def load_config(path) -> dict:
    """Flat key-value file mirroring the CLI flags; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


_PLAN_KEYS = ("n", "alphas", "rhos", "trials", "seed", "algos", "out",
              "theory_only", "parallelism", "delta", "lambda0",
              "lambda_growth", "b_shrink", "tol", "ks", "bernoulli")


def build_plan(args: argparse.Namespace) -> ExperimentPlan:
    """Merge config-file values and CLI flags (flags win) into a plan."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(cfg) - set(_PLAN_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    def pick(name, cast, default):
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            return cli_val
        if name in cfg:
            return cast(cfg[name])
        return default

    as_bool = lambda s: str(s).lower() in ("1", "true", "yes", "on")
    tol = pick("tol", float, None)
    rfpi = RfpiConfig(
        delta=pick("delta", float, RfpiConfig.delta),
        lambda0=pick("lambda0", float, RfpiConfig.lambda0),
        lambda_growth=pick("lambda_growth", float, RfpiConfig.lambda_growth),
        inner_tol=tol or RfpiConfig.inner_tol,
        outer_tol=tol or RfpiConfig.outer_tol,
    )
    cisr = CisrConfig(
        b_shrink=pick("b_shrink", float, CisrConfig.b_shrink),
        inner_tol=tol or CisrConfig.inner_tol,
        outer_tol=tol or CisrConfig.outer_tol,
    )
    algos = pick("algos", str, "rfpi")
    if isinstance(algos, str):
        algos = tuple(a.strip() for a in algos.split(",") if a.strip())
    alphas = pick("alphas", _parse_list, [1.0, 2.0, 3.0, 4.0])
    if isinstance(alphas, str):
        alphas = _parse_list(alphas)
    rhos = pick("rhos", _parse_list, [0.125])
    if isinstance(rhos, str):
        rhos = _parse_list(rhos)
    ks = pick("ks", str, "4,8,16,32")
    if isinstance(ks, str):
        ks = tuple(int(float(v)) for v in ks.split(","))
    return ExperimentPlan(
        n=int(pick("n", int, 128)),
        alphas=tuple(alphas),
        rhos=tuple(rhos),
        trials=int(pick("trials", int, 200)),
        master_seed=int(pick("seed", int, 0)),
        algorithms=tuple(algos),
        rfpi_cfg=rfpi,
        cisr_cfg=cisr,
        output_dir=Path(pick("out", str, "results")),
        theory_only=bool(pick("theory_only", as_bool, False)),
        parallelism=int(pick("parallelism", int, 0)),
        exact_support=not bool(pick("bernoulli", as_bool, False)),
        timing_ks=tuple(ks),
    )


def _add_shared(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key-value config file; flags override it")
    p.add_argument("--n", type=int, help="signal dimension N (default 128)")
    p.add_argument("--trials", type=int, help="trials per condition (default 200)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--algos", help=f"comma list from {','.join(ALGORITHMS)}")
    p.add_argument("--out", help="output directory (default results/)")
    p.add_argument("--parallelism", type=int,
                   help="worker count; 0 = ONEBIT_CS_THREADS or CPU count")
    p.add_argument("--delta", type=float, help="descent step")
    p.add_argument("--lambda0", type=float, help="initial shrinkage-schedule value")
    p.add_argument("--lambda-growth", dest="lambda_growth", type=float,
                   help="outer multiplier (> 1)")
    p.add_argument("--b-shrink", dest="b_shrink", type=float,
                   help="outer gain-shrink ratio in (0, 1)")
    p.add_argument("--tol", type=float, help="per-entry l1 convergence tolerance")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="onebit-cs",
                                     description="1-bit compressed sensing experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment sweep")
    _add_shared(p_run)
    p_run.add_argument("--alphas", help="comma list of measurement bit ratios")
    p_run.add_argument("--rhos", help="comma list of nonzero densities (fractions ok)")
    p_run.add_argument("--theory-only", dest="theory_only", action="store_const",
                       const=True, help="emit only the theory curves CSV")
    p_run.add_argument("--bernoulli", action="store_const", const=True,
                       help="Bernoulli(rho) support instead of exact K = round(rho N)")

    p_tim = sub.add_parser("timing", help="paired wall-time benchmark")
    _add_shared(p_tim)
    p_tim.add_argument("--ks", help="comma list of support sizes (default 4,8,16,32)")
    p_tim.add_argument("--alpha", type=float, default=None,
                       help="measurement bit ratio for the benchmark (default 3)")

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    try:
        plan = build_plan(args)
        if args.command == "timing":
            if getattr(args, "alpha", None):
                plan = replace(plan, timing_alpha=args.alpha)
            if len([a for a in plan.algorithms if a != "naive_cavity"]) < 2:
                plan = replace(plan, algorithms=("rfpi", "cisr", "nort"))
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    if args.command == "timing":
        path = run_timing_benchmark(plan)
        print(f"wrote {path}")
        return 0

    report = run_plan(plan)
    for path in (report.trial_csv, report.summary_csv, report.theory_csv):
        if path is not None:
            print(f"wrote {path}")
    if report.failed_conditions:
        print(f"{report.failed_conditions} condition(s) had no converged trial",
              file=sys.stderr)
    if report.failed_trials:
        print(f"{report.failed_trials} trial(s) did not converge", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
