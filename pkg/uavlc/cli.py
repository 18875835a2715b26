"""
Command-line entry point.

    uavlc run   --scenario bundled.json --scheme scheme1-dual --seed 0 --out results/
    uavlc sweep --sweep users --values 6,10 --schemes scheme1-dual,no-ris --seeds 20 --out results/
    uavlc serve --host 127.0.0.1 --port 8000

Exit codes: 0 ok, 2 invalid input / infeasible / no coverage, 3 solver failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from uavlc.core.config import get_settings
from uavlc.core.decorators import log_block
from uavlc.core.logging_config import configure_logging, logger
from uavlc.exceptions.app_exceptions import EXIT_INFEASIBLE, AppException
from uavlc.repositories.results import write_frame, write_solution, write_summary, write_sweep
from uavlc.repositories.scenarios import load_scenario
from uavlc.schemas.runs import SEED_MAX, RunConfig, RunOptions, Scheme
from uavlc.services.orchestrator import run, summarize
from uavlc.services.sweeps import BASELINE, SWEEP_VARS, plotdata, reduction_table, run_sweep

SCHEMES = [scheme.value for scheme in Scheme]
DEFAULT_SWEEP_SCHEMES = "scheme1-dual,scheme2-greedy,no-ris"

# flag -> RunOptions field
SOLVER_FLAGS = {
    "--outer-tol": ("outer_tol", float),
    "--max-outer": ("max_outer", int),
    "--sdp-tol": ("sdp_tol", float),
    "--sca-max-iters": ("sca_max_iters", int),
    "--randomization-trials": ("randomization_trials", int),
    "--user-dual-iters": ("user_dual_iters", int),
    "--ris-dual-iters": ("ris_dual_iters", int),
    "--step-size": ("step_size", float),
}


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, {SEED_MAX}]")
    return value


def _number_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _scheme_list(text: str) -> List[Scheme]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [name for name in names if name not in SCHEMES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown scheme(s) {unknown}, expected from {SCHEMES}")
    return [Scheme(name) for name in names]


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver overrides (default: UAVLC_* settings)")
    for flag, (name, kind) in SOLVER_FLAGS.items():
        group.add_argument(flag, dest=name, type=kind, default=None)
    group.add_argument(
        "--no-local-polish", dest="local_polish", action="store_const", const=False, default=None,
        help="skip the neighbourhood polish of association results",
    )


def _solver_options(args: argparse.Namespace) -> dict:
    options = RunOptions(
        local_polish=args.local_polish,
        **{name: getattr(args, name) for name, _ in SOLVER_FLAGS.values()},
    )
    return options.model_dump(exclude_none=True)


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="uavlc", description="RIS-assisted VLC UAV power minimization")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG (default: UAVLC_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run one scheme on one scenario")
    run_parser.add_argument("--scenario", type=Path, default=settings.base_scenario)
    run_parser.add_argument("--scheme", choices=SCHEMES, default=Scheme.SCHEME1_DUAL.value)
    run_parser.add_argument("--seed", type=_seed, default=0)
    run_parser.add_argument("--out", type=Path, required=True)
    _add_solver_flags(run_parser)

    sweep_parser = commands.add_parser("sweep", help="run a parameter sweep over random drops")
    sweep_parser.add_argument("--sweep", choices=SWEEP_VARS, required=True)
    sweep_parser.add_argument("--values", type=_number_list, required=True)
    sweep_parser.add_argument("--schemes", type=_scheme_list, default=_scheme_list(DEFAULT_SWEEP_SCHEMES))
    sweep_parser.add_argument("--seeds", type=int, default=settings.sweep_seeds)
    sweep_parser.add_argument("--scenario", type=Path, default=settings.base_scenario)
    sweep_parser.add_argument("--threads", type=int, default=settings.threads)
    sweep_parser.add_argument("--out", type=Path, required=True)
    _add_solver_flags(sweep_parser)

    serve_parser = commands.add_parser("serve", help="start the HTTP API")
    serve_parser.add_argument("--host", default="127.0.0.1")
    serve_parser.add_argument("--port", type=int, default=8000)
    return parser


@log_block("cli run")
def run_once(args: argparse.Namespace) -> None:
    scenario = load_scenario(args.scenario)
    config = RunConfig.from_settings(scheme=Scheme(args.scheme), seed=args.seed, **_solver_options(args))
    trace = run(scenario, config)
    write_solution(trace, args.out)
    write_summary([summarize(trace, scenario)], args.out)
    logger.info("Run written (out=%s, total_power_W=%.6e)", args.out, trace.solution.total_power)


@log_block("cli sweep")
def sweep(args: argparse.Namespace) -> None:
    base = load_scenario(args.scenario)
    rows = run_sweep(
        base, args.sweep, args.values, args.schemes, args.seeds,
        options=_solver_options(args), threads=args.threads,
    )
    write_sweep(rows, args.out)
    write_frame(plotdata(rows), args.out, "plotdata.csv")
    if BASELINE in args.schemes:
        write_frame(reduction_table(rows), args.out, "reduction.csv")
    failed = sum(not row.feasible for row in rows)
    logger.info("Sweep written (out=%s, rows=%s, infeasible=%s)", args.out, len(rows), failed)


def serve(args: argparse.Namespace) -> None:
    import uvicorn

    uvicorn.run("uavlc.main:app", host=args.host, port=args.port)


COMMANDS = {"run": run_once, "sweep": sweep, "serve": serve}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        configure_logging("DEBUG")
    try:
        COMMANDS[args.command](args)
    except AppException as exc:
        print(f"uavlc: error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(f"uavlc: error: {exc.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return 0


if __name__ == "__main__":
    sys.exit(main())
