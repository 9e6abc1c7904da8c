"""
Supply Network Control Simulator
Command-line entry point
"""
import argparse
import asyncio
import logging
import os
import sys

from dotenv import load_dotenv

from core.errors import NumericalFailure, ScenarioError, SupplyNetError, ValidationFailure
from handlers import commands
from utils import env

# Load environment variables
profile = os.getenv("PROFILE", "")
if profile == "local" or profile == "":
    load_dotenv()

logger = logging.getLogger("supplynet")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supplynet", description="Stochastic supply network control simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")

    p = sub.add_parser("simulate", help="trajectories of one run for every setting")
    p.add_argument("scenario")
    p.add_argument("--run-id", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--profile", default=None)

    p = sub.add_parser("mc", help="Monte Carlo normRMSE report")
    p.add_argument("scenario")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--db", default=None)
    p.add_argument("--exact-damping", action="store_true", default=None)
    p.add_argument("--trajectories", action="store_true")

    p = sub.add_parser("moments-check", help="closed-form moments against Monte Carlo")
    p.add_argument("scenario")
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--out", default=None)

    p = sub.add_parser("reduction-study", help="error reduction versus update count")
    p.add_argument("scenario")
    p.add_argument("--updates", default="1,2,3,6,12,24,48")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("oracle", help="brute-force optimal inflow for comparison")
    p.add_argument("scenario")
    p.add_argument("--cells", type=int, default=50)
    p.add_argument("--profile", default=None)
    p.add_argument("--out", default=None)
    return parser


async def dispatch(args: argparse.Namespace) -> int:
    if args.command == "validate":
        return await commands.validate_command(args.scenario)
    if args.command == "simulate":
        return await commands.simulate_command(args.scenario, args.run_id, args.out, args.profile)
    if args.command == "mc":
        return await commands.mc_command(
            args.scenario, args.n, args.seed, args.out,
            workers=args.workers, db_path=args.db, exact_damping=args.exact_damping,
            trajectories=args.trajectories,
        )
    if args.command == "moments-check":
        return await commands.moments_check_command(args.scenario, args.paths, args.out)
    if args.command == "reduction-study":
        return await commands.reduction_study_command(
            args.scenario, commands.parse_update_counts(args.updates), args.n, args.seed, args.out, args.workers
        )
    return await commands.oracle_command(args.scenario, args.cells, args.profile, args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=env.log_level(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return asyncio.run(dispatch(args))
    except (ValidationFailure, ScenarioError) as exc:
        logger.error("validation failed: %s", exc)
        return commands.EXIT_VALIDATION
    except NumericalFailure as exc:
        logger.error("numerical failure: %s", exc)
        return commands.EXIT_NUMERICAL
    except SupplyNetError as exc:
        logger.error("%s", exc)
        return commands.EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
