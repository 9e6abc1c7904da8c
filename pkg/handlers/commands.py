"""
Command Handlers
One coroutine per CLI subcommand; each returns the process exit code
"""
import logging
import os
from typing import List, Optional

from core.db_handler import RunDB
from core.errors import NotConverged
from core.harness import compare_demand_models, error_reduction_study, moments_check, monte_carlo, simulate_run
from core.oracle import oracle_control_optimizer, relative_l2_gap
from core.scenario import build_network, load_scenario
from models.report import ErrorReport
from utils import env
from utils.export import export_records, export_reduction, export_report, export_trajectory

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def parse_update_counts(text: str) -> List[int]:
    """'1,2,3,6' -> [1, 2, 3, 6]"""
    return [int(part) for part in text.split(",") if part.strip()]


def format_report(report: ErrorReport) -> str:
    lines = [f"{'setting':<8}{'leaf':>6}  {'profile':<10}{'normRMSE':>12}"]
    for row in report.rows:
        line = f"{row.setting.value:<8}{'v' + str(row.leaf):>6}  {row.damping_profile:<10}{row.norm_rmse:>12.6f}"
        if report.demand_model == "ou" and row.min_demand is not None:
            line += f"  min demand {row.min_demand:.4f}"
        lines.append(line)
    lines.append(f"{report.n_runs} runs, seed {report.seed}, {report.elapsed_seconds:.1f}s")
    return "\n".join(lines)


async def validate_command(scenario_path: str) -> int:
    scenario = load_scenario(scenario_path)
    for profile in scenario.damping_profiles:
        build_network(scenario, profile)
    print(f"{scenario.name}: ok ({len(scenario.nodes)} nodes, profiles {', '.join(scenario.damping_profiles)})")
    return EXIT_OK


async def simulate_command(scenario_path: str, run_id: int, out_dir: str, profile: Optional[str] = None) -> int:
    """
    Trajectory CSV per setting for one run
    """
    scenario = load_scenario(scenario_path)
    profile = profile or scenario.damping_profiles[0]
    trajectories = simulate_run(scenario, run_id, profile)
    for setting, trajectory in trajectories.items():
        path = os.path.join(out_dir, f"{scenario.name}_{setting.value}_{profile}_run{run_id}.csv")
        export_trajectory(trajectory, path)
        logger.info("trajectory written: %s", path)
    return EXIT_OK


async def mc_command(
    scenario_path: str,
    runs: Optional[int],
    seed: Optional[int],
    out_dir: Optional[str],
    workers: Optional[int] = None,
    db_path: Optional[str] = None,
    exact_damping: Optional[bool] = None,
    trajectories: bool = False,
) -> int:
    """
    Monte Carlo error report; optionally stored in the run ledger
    """
    scenario = load_scenario(scenario_path)
    report = await monte_carlo(
        scenario,
        runs=runs,
        seed=seed,
        workers=workers or env.worker_count(),
        exact_damping=exact_damping if exact_damping is not None else (env.exact_damping() or None),
    )
    print(format_report(report))
    if scenario.demand_model == "ou":
        for leaf, stats in compare_demand_models(scenario, runs).items():
            print(f"v{leaf}: OU min {stats['ou_min']:.4f}, Jacobi range [{stats['jacobi_min']:.4f}, {stats['jacobi_max']:.4f}]")
    if out_dir:
        path = export_report(report, os.path.join(out_dir, f"{scenario.name}_report.csv"))
        logger.info("report written: %s", path)
        if trajectories:
            await simulate_command(scenario_path, 0, out_dir)

    db_path = db_path or env.run_db_path()
    if db_path:
        db = RunDB(db_path)
        try:
            await db.init_db()
            written = await db.save_report(report)
            count = await db.get_run_counts(report.scenario)
            logger.info("ledger: %d rows stored, %d invocation(s) of %s", written, count, report.scenario)
        finally:
            await db.close()
    return EXIT_OK


async def moments_check_command(scenario_path: str, n_paths: int, out_dir: Optional[str]) -> int:
    scenario = load_scenario(scenario_path)
    rows = moments_check(scenario, n_paths=n_paths)
    for row in rows:
        flag = "ok" if row["within_3se"] else "MISMATCH"
        print(
            f"v{row['leaf']} t={row['t']:.3f}  mean {row['mean_formula']:.5f} vs {row['mean_mc']:.5f}"
            f" (se {row['mean_se']:.1e})  m2 {row['m2_formula']:.5f} vs {row['m2_mc']:.5f}"
            f" (se {row['m2_se']:.1e})  {flag}"
        )
    if out_dir:
        export_records(rows, os.path.join(out_dir, f"{scenario.name}_moments.csv"))
    return EXIT_OK


async def reduction_study_command(
    scenario_path: str,
    update_counts: List[int],
    runs: Optional[int],
    seed: Optional[int],
    out_dir: Optional[str],
    workers: Optional[int] = None,
) -> int:
    scenario = load_scenario(scenario_path)
    mc = scenario.monte_carlo.model_copy(
        update={k: v for k, v in (("runs", runs), ("seed", seed)) if v is not None}
    )
    scenario = scenario.model_copy(update={"monte_carlo": mc})
    rows = await error_reduction_study(scenario, update_counts, workers=workers or env.worker_count())
    for row in rows:
        print(f"{row.setting.value:<5} v{row.leaf}  {row.updates:>4} updates  {row.norm_rmse:.4f}  {row.reduction_percent:6.2f}%")
    if out_dir:
        export_reduction(rows, os.path.join(out_dir, f"{scenario.name}_reduction.csv"))
    return EXIT_OK


async def oracle_command(scenario_path: str, n_cells: int, profile: Optional[str], out_dir: Optional[str]) -> int:
    scenario = load_scenario(scenario_path)
    try:
        result = oracle_control_optimizer(scenario, n_cells=n_cells, profile=profile)
    except NotConverged as exc:
        logger.warning("%s", exc)
        result = exc.best
        code = EXIT_NUMERICAL
    else:
        code = EXIT_OK
    print(f"objective oracle {result.objective:.8g}  explicit {result.explicit_objective:.8g}")
    print(f"relative L2 gap {relative_l2_gap(result):.3e}, {result.sweeps} sweeps")
    if out_dir:
        records = [
            {"t_start": float(a), "t_end": float(b), "u_oracle": float(u), "u_explicit": float(e), "reachable": bool(r)}
            for a, b, u, e, r in zip(result.edges[:-1], result.edges[1:], result.control, result.explicit_control, result.reachable)
        ]
        export_records(records, os.path.join(out_dir, f"{scenario.name}_oracle.csv"))
    return code
