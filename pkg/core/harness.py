"""
Monte Carlo Harness
Batched simulation of demand paths and controlled supply, normRMSE
aggregation, update-count studies and the OU comparison
"""
import asyncio
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.control import ControlPolicy, ObservationBook, UpdateSchedule
from core.demand import jacobi_mean, jacobi_second_moment, simulate_jacobi, simulate_ou
from core.errors import EmptyWindow
from core.network import Network
from core.pdesim import NetworkSimulator, Trajectory
from core.scenario import build_network
from core.timefuncs import TransitMap
from models.demand import SamplePath
from models.report import ErrorReport, LeafError, ReductionRow
from models.scenario import ModelSetting, Scenario
from utils.rng import batch_normals, stream

logger = logging.getLogger(__name__)


# Error metric

def window_weights(times: np.ndarray, t_first: float, T: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rectangular-rule weights over the common-grid points in [t_first, T].
    Each point covers the interval up to the next point, the first one
    reaching back to t_first and the last one forward to T.

    Returns:
        (mask, widths) with widths summing to T - t_first

    Raises:
        EmptyWindow: t_first >= T or no grid point in the window
    """
    if t_first >= T:
        raise EmptyWindow(f"first arrival {t_first:.6g} is not before the horizon {T:.6g}")
    eps = 1e-12
    mask = (times >= t_first - eps) & (times <= T + eps)
    points = times[mask]
    if points.size == 0:
        raise EmptyWindow(f"no grid point in [{t_first:.6g}, {T:.6g}]")
    starts = np.concatenate(([t_first], points[1:]))
    ends = np.concatenate((points[1:], [T]))
    return mask, ends - starts


def norm_rmse_from_sums(sq_sums: np.ndarray, n_runs: int, times: np.ndarray, t_first: float, T: float) -> float:
    """
    normRMSE from per-time sums over runs of (D - f)^2
    """
    mask, widths = window_weights(times, t_first, T)
    rms = np.sqrt(sq_sums[mask] / n_runs)
    return float(np.sum(rms * widths) / (T - t_first))


def norm_rmse(supply: np.ndarray, demand: np.ndarray, times: np.ndarray, t_first: float, T: float) -> float:
    """
    Time-averaged root mean squared gap between supply and demand

    Args:
        supply: (runs, len(times)) supply at the leaf
        demand: (runs, len(times)) demand samples
        times: common grid
        t_first: first arrival t̃(v0, v_i, t0)
        T: horizon

    Returns:
        1 / (T - t_first) ∫ sqrt(E[(D - f)^2]) ds by the rectangular rule
    """
    supply = np.atleast_2d(supply)
    demand = np.atleast_2d(demand)
    return norm_rmse_from_sums(((demand - supply) ** 2).sum(axis=0), supply.shape[0], times, t_first, T)


# Per-process simulation context

class SimulationContext:
    """
    Everything deterministic about a scenario: networks per damping
    profile, transit maps, simulators and the update schedule
    """

    def __init__(self, scenario: Scenario, exact_damping: Optional[bool] = None):
        self.scenario = scenario
        t0, T = scenario.horizon.t0, scenario.horizon.T
        numerics = scenario.numerics
        exact = numerics.exact_damping if exact_damping is None else exact_damping
        self.networks: Dict[str, Network] = {}
        self.transits: Dict[str, TransitMap] = {}
        self.simulators: Dict[str, NetworkSimulator] = {}
        for profile in scenario.damping_profiles:
            network = build_network(scenario, profile)
            transit = TransitMap(network, t0, T)
            self.networks[profile] = network
            self.transits[profile] = transit
            self.simulators[profile] = NetworkSimulator(network, transit, numerics.dx, numerics.dt_common, exact)
        if scenario.control.schedule:
            self.schedule = UpdateSchedule(times=scenario.control.schedule)
        else:
            self.schedule = UpdateSchedule.from_update_count(t0, T, scenario.control.updates)
        first = self.networks[scenario.damping_profiles[0]]
        self.leaves = first.demand_nodes()
        self.demand_params = {leaf: scenario.demand(leaf).jacobi() for leaf in self.leaves}
        self.n_sde_steps = int(math.ceil((T - t0) / numerics.dt_sde - 1e-9))

    def demand_paths(self, runs: Sequence[int]) -> Dict[int, SamplePath]:
        """
        Demand paths of the given runs; Jacobi and OU share the normal draws
        """
        scenario = self.scenario
        t0, dt = scenario.horizon.t0, scenario.numerics.dt_sde
        paths = {}
        for leaf in self.leaves:
            normals = batch_normals(scenario.monte_carlo.seed, runs, leaf, self.n_sde_steps)
            spec = scenario.demand(leaf)
            if scenario.demand_model == "ou":
                paths[leaf] = simulate_ou(spec.ou(), t0, dt, normals)
            else:
                paths[leaf] = simulate_jacobi(spec.jacobi(), t0, dt, normals)
        return paths

    def policy(self, profile: str, setting: ModelSetting, paths: Dict[int, SamplePath]) -> ControlPolicy:
        return ControlPolicy(
            self.networks[profile],
            self.transits[profile],
            self.demand_params,
            setting,
            self.schedule,
            ObservationBook(paths),
        )

    def simulate(self, profile: str, setting: ModelSetting, paths: Dict[int, SamplePath], batch: int) -> Trajectory:
        return self.simulators[profile].run_simulation(self.policy(profile, setting, paths), paths, batch)


@lru_cache(maxsize=4)
def _cached_context(scenario_json: str, exact_damping: Optional[bool]) -> SimulationContext:
    return SimulationContext(Scenario.model_validate_json(scenario_json), exact_damping)


ChunkKey = Tuple[str, str, int]


def run_chunk(scenario_json: str, runs: Tuple[int, ...], exact_damping: Optional[bool] = None) -> Dict[str, object]:
    """
    Simulate a block of runs for every setting and damping profile.
    Module-level so it can be shipped to worker processes.

    Returns:
        {"sq_sums": {(setting, profile, leaf): per-time sums of (D - f)^2},
         "min_demand": {leaf: minimum demand over the block}, "runs": count}
    """
    context = _cached_context(scenario_json, exact_damping)
    scenario = context.scenario
    paths = context.demand_paths(runs)
    sq_sums: Dict[ChunkKey, np.ndarray] = {}
    for profile in scenario.damping_profiles:
        for setting in scenario.control.settings:
            trajectory = context.simulate(profile, setting, paths, len(runs))
            for leaf in context.leaves:
                gap = trajectory.demand[leaf] - trajectory.supply[leaf]
                sq_sums[(setting.value, profile, leaf)] = (gap * gap).sum(axis=0)
    return {
        "sq_sums": sq_sums,
        "min_demand": {leaf: float(paths[leaf].values.min()) for leaf in context.leaves},
        "runs": len(runs),
    }


class MonteCarloRunner:
    """
    Runs chunks of Monte Carlo runs off the event loop and reduces them in
    run-index order, so the report does not depend on the worker count
    """

    def __init__(self, scenario: Scenario, workers: int = 1, exact_damping: Optional[bool] = None):
        """
        Args:
            scenario: validated scenario
            workers: process pool size; 1 runs chunks on the default executor
            exact_damping: override of the scenario's damping substep
        """
        self.scenario = scenario
        self.workers = max(1, workers)
        self.exact_damping = exact_damping
        self._json = scenario.model_dump_json()

    def chunks(self) -> List[Tuple[int, ...]]:
        mc = self.scenario.monte_carlo
        return [tuple(range(start, min(start + mc.chunk_size, mc.runs))) for start in range(0, mc.runs, mc.chunk_size)]

    async def run(self) -> ErrorReport:
        """
        Execute all runs and aggregate normRMSE per (setting, profile, leaf)
        """
        started = time.perf_counter()
        loop = asyncio.get_event_loop()
        chunks = self.chunks()
        # grids and transit caches are built once here and shared by in-process chunks
        _cached_context(self._json, self.exact_damping)
        executor = ProcessPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            futures = [
                loop.run_in_executor(executor, run_chunk, self._json, runs, self.exact_damping)
                for runs in chunks
            ]
            results = []
            for idx, future in enumerate(futures):
                results.append(await future)
                logger.info("chunk %d/%d finished (%d runs)", idx + 1, len(chunks), len(chunks[idx]))
        finally:
            if executor is not None:
                executor.shutdown()
        report = self._reduce(results)
        report.elapsed_seconds = time.perf_counter() - started
        return report

    def _reduce(self, results: List[Dict[str, object]]) -> ErrorReport:
        scenario = self.scenario
        context = _cached_context(self._json, self.exact_damping)
        total_runs = sum(r["runs"] for r in results)
        sums: Dict[ChunkKey, np.ndarray] = {}
        min_demand: Dict[int, float] = {}
        for result in results:
            for key, value in result["sq_sums"].items():
                sums[key] = sums[key] + value if key in sums else value.copy()
            for leaf, value in result["min_demand"].items():
                min_demand[leaf] = min(min_demand.get(leaf, math.inf), value)

        rows = []
        T = scenario.horizon.T
        for setting in scenario.control.settings:
            for profile in scenario.damping_profiles:
                simulator = context.simulators[profile]
                for leaf in context.leaves:
                    t_first = context.transits[profile].node_arrival_time(
                        context.networks[profile].source, leaf, scenario.horizon.t0
                    )
                    value = norm_rmse_from_sums(sums[(setting.value, profile, leaf)], total_runs, simulator.common.times, t_first, T)
                    rows.append(
                        LeafError(
                            setting=setting,
                            leaf=leaf,
                            damping_profile=profile,
                            norm_rmse=value,
                            min_demand=min_demand.get(leaf),
                        )
                    )
        return ErrorReport(
            scenario=scenario.name,
            n_runs=total_runs,
            seed=scenario.monte_carlo.seed,
            demand_model=scenario.demand_model,
            rows=rows,
        )


async def monte_carlo(
    scenario: Scenario,
    runs: Optional[int] = None,
    seed: Optional[int] = None,
    workers: int = 1,
    exact_damping: Optional[bool] = None,
) -> ErrorReport:
    """
    N independent runs of every configured setting and damping profile

    Args:
        scenario: validated scenario
        runs: overrides monte_carlo.runs
        seed: overrides monte_carlo.seed
        workers: process pool size
        exact_damping: overrides numerics.exact_damping

    Returns:
        ErrorReport with one row per (setting, leaf, damping profile)
    """
    mc = scenario.monte_carlo.model_copy(
        update={k: v for k, v in (("runs", runs), ("seed", seed)) if v is not None}
    )
    scenario = scenario.model_copy(update={"monte_carlo": mc})
    logger.info("monte carlo: %s, %d runs, seed %d, %d worker(s)", scenario.name, mc.runs, mc.seed, workers)
    return await MonteCarloRunner(scenario, workers, exact_damping).run()


async def error_reduction_study(
    scenario: Scenario,
    update_counts: Sequence[int],
    settings: Sequence[ModelSetting] = (ModelSetting.MS2, ModelSetting.MS3),
    workers: int = 1,
) -> List[ReductionRow]:
    """
    normRMSE reduction relative to the no-update run, per update count.
    Every count reuses the same seed, so all rows share their random numbers.

    Returns:
        rows for every (setting, leaf, update count), baseline included with 0%
    """
    profile = scenario.damping_profiles[0]
    base = scenario.model_copy(
        update={"damping_profiles": [profile], "control": scenario.control.model_copy(update={"settings": list(settings), "schedule": None})}
    )
    counts = sorted(set([0] + [int(n) for n in update_counts]))
    errors: Dict[int, ErrorReport] = {}
    for n in counts:
        variant = base.model_copy(update={"control": base.control.model_copy(update={"updates": n})})
        errors[n] = await monte_carlo(variant, workers=workers)
        logger.info("reduction study: %d update(s) done", n)

    rows = []
    for setting in settings:
        for leaf in sorted({row.leaf for row in errors[0].rows}):
            baseline = errors[0].lookup(setting, leaf)
            for n in counts:
                value = errors[n].lookup(setting, leaf)
                rows.append(
                    ReductionRow(
                        setting=setting,
                        leaf=leaf,
                        updates=n,
                        norm_rmse=value,
                        reduction_percent=0.0 if n == 0 else 100.0 * (1.0 - value / baseline),
                    )
                )
    return rows


def simulate_run(scenario: Scenario, run_id: int, profile: Optional[str] = None) -> Dict[ModelSetting, Trajectory]:
    """
    Trajectories of a single run under every configured setting
    """
    context = SimulationContext(scenario)
    profile = profile or scenario.damping_profiles[0]
    paths = context.demand_paths((run_id,))
    return {setting: context.simulate(profile, setting, paths, 1) for setting in scenario.control.settings}


def compare_demand_models(scenario: Scenario, runs: Optional[int] = None) -> Dict[int, Dict[str, float]]:
    """
    Jacobi and OU demand driven by the same normal draws

    Returns:
        per leaf: minimum and maximum of both models over all runs
    """
    context = SimulationContext(scenario.model_copy(update={"demand_model": "jacobi"}))
    n_runs = runs or scenario.monte_carlo.runs
    t0, dt = scenario.horizon.t0, scenario.numerics.dt_sde
    chunk = scenario.monte_carlo.chunk_size
    out = {leaf: {"jacobi_min": math.inf, "jacobi_max": -math.inf, "ou_min": math.inf, "ou_max": -math.inf} for leaf in context.leaves}
    for start in range(0, n_runs, chunk):
        block = tuple(range(start, min(start + chunk, n_runs)))
        for leaf in context.leaves:
            normals = batch_normals(scenario.monte_carlo.seed, block, leaf, context.n_sde_steps)
            spec = scenario.demand(leaf)
            jacobi = simulate_jacobi(spec.jacobi(), t0, dt, normals).values
            ou = simulate_ou(spec.ou(), t0, dt, normals).values
            row = out[leaf]
            row["jacobi_min"] = min(row["jacobi_min"], float(jacobi.min()))
            row["jacobi_max"] = max(row["jacobi_max"], float(jacobi.max()))
            row["ou_min"] = min(row["ou_min"], float(ou.min()))
            row["ou_max"] = max(row["ou_max"], float(ou.max()))
    return out


def moments_check(
    scenario: Scenario,
    n_paths: int = 10000,
    probe_times: Optional[Sequence[float]] = None,
    block: int = 200,
) -> List[Dict[str, float]]:
    """
    Compare closed-form conditional moments with Monte Carlo estimates

    Args:
        scenario: scenario supplying demand parameters and dt
        n_paths: number of simulated paths per leaf
        probe_times: comparison times (default: 10 evenly spaced in (t0, T])
        block: paths simulated at once

    Returns:
        one dict per (leaf, time) with formula values, MC estimates and standard errors
    """
    t0, T = scenario.horizon.t0, scenario.horizon.T
    dt = scenario.numerics.dt_sde
    if probe_times is None:
        probe_times = list(t0 + (T - t0) * np.arange(1, 11) / 10.0)
    n_steps = int(math.ceil((max(probe_times) - t0) / dt - 1e-9))
    rows = []
    for spec in scenario.demands:
        p = spec.jacobi()
        first = np.zeros(len(probe_times))
        second = np.zeros(len(probe_times))
        fourth = np.zeros(len(probe_times))
        for start in range(0, n_paths, block):
            size = min(block, n_paths - start)
            rng = stream(scenario.monte_carlo.seed, start, spec.node)
            path = simulate_jacobi(p, t0, dt, rng.standard_normal((size, n_steps)))
            values = np.stack([path.value_at(t) for t in probe_times], axis=-1)
            first += values.sum(axis=0)
            second += (values ** 2).sum(axis=0)
            fourth += (values ** 4).sum(axis=0)
        for idx, t in enumerate(probe_times):
            mc_mean = first[idx] / n_paths
            mc_m2 = second[idx] / n_paths
            se_mean = math.sqrt(max(mc_m2 - mc_mean ** 2, 0.0) / n_paths)
            se_m2 = math.sqrt(max(fourth[idx] / n_paths - mc_m2 ** 2, 0.0) / n_paths)
            formula_mean = jacobi_mean(p, t0, p.d0, t)
            formula_m2 = jacobi_second_moment(p, t0, p.d0, t)
            rows.append(
                {
                    "leaf": spec.node,
                    "t": float(t),
                    "mean_formula": formula_mean,
                    "mean_mc": mc_mean,
                    "mean_se": se_mean,
                    "m2_formula": formula_m2,
                    "m2_mc": mc_m2,
                    "m2_se": se_m2,
                    "within_3se": abs(formula_mean - mc_mean) <= 3 * se_mean + 1e-12
                    and abs(formula_m2 - mc_m2) <= 3 * se_m2 + 1e-12,
                }
            )
    return rows
