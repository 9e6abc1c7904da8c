"""
Network Transport Simulation
Adaptive upwind scheme at CFL number one per arc, damping by splitting,
and node coupling on a common time grid
"""
import logging
import math
from typing import Callable, Dict, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.errors import NegativeDampingFactor
from core.network import Network
from core.timefuncs import TransitMap, antiderivative, evaluate, value_range_on
from models.demand import SamplePath
from models.network import Arc

logger = logging.getLogger(__name__)


def damping_step_factor(dt: float, mu: float) -> float:
    """
    Multiplicative damping substep 1 - dt * mu

    Raises:
        NegativeDampingFactor: dt * mu > 1
    """
    factor = 1.0 - dt * mu
    if factor < 0.0:
        raise NegativeDampingFactor(f"dt*mu = {dt * mu:.6g} exceeds 1; refine dx")
    return factor


def step_arc(densities: np.ndarray, boundary, factor: float) -> np.ndarray:
    """
    One upwind step at CFL number one followed by the damping substep.
    At CFL one the upwind update is an exact shift by one cell.

    Args:
        densities: (..., n_cells), cell 0 next to the arc entry
        boundary: density entering cell 0, broadcastable to densities[..., 0]
        factor: damping factor of this step (1 - dt mu, or exp(-∫mu))

    Returns:
        new density array
    """
    shifted = np.empty_like(densities)
    shifted[..., 0] = boundary
    shifted[..., 1:] = densities[..., :-1]
    shifted *= factor
    return shifted


def node_influx(t_left: float, f_left, t_right: float, f_right, t: float):
    """
    Linear interpolation of an arc's exit flux z_end * λ between two arc-grid
    times bracketing t
    """
    if t_right <= t_left:
        return f_right
    w = (t - t_left) / (t_right - t_left)
    return (1.0 - w) * f_left + w * f_right


def node_outflux_boundary(alpha, t_prev: float, f_prev, lam_prev: float, t_next: float, f_next, lam_next: float, t: float):
    """
    Boundary density of an outgoing arc at its grid time t in [t_prev, t_next]:
    α times the linear interpolation of f_in / λ_m between the bracketing
    common-grid times, with λ_m taken at the same times as the fluxes
    """
    if t_next <= t_prev:
        return alpha * f_next / lam_next
    w = (t - t_prev) / (t_next - t_prev)
    return alpha * ((1.0 - w) * f_prev / lam_prev + w * f_next / lam_next)


class ArcGrid:
    """
    Spatial cells and adaptive time steps of one arc: dt_k = dx / λ(t_k)
    """

    def __init__(self, arc: Arc, dx: float, t0: float, t_end: float, exact_damping: bool = False):
        """
        Args:
            arc: arc definition
            dx: target cell width, adjusted so the arc length is a whole number of cells
            t0: start time
            t_end: grid is extended until it passes t_end
            exact_damping: use exp(-∫mu) instead of 1 - dt mu
        """
        self.arc = arc
        self.n_cells = max(1, int(round(arc.length / dx)))
        self.dx = arc.length / self.n_cells
        times = [t0]
        while times[-1] <= t_end:
            times.append(times[-1] + self.dx / evaluate(arc.velocity, times[-1]))
        self.times = np.array(times)
        self.n_steps = len(times) - 1
        self.velocity = evaluate(arc.velocity, self.times)
        dts = np.diff(self.times)
        if exact_damping:
            self.factors = np.array(
                [math.exp(-antiderivative(arc.damping, a, b)) for a, b in zip(self.times[:-1], self.times[1:])]
            )
        else:
            mu = evaluate(arc.damping, self.times[:-1])
            self.factors = np.array([damping_step_factor(dt, m) for dt, m in zip(dts, mu)])


class CommonGrid:
    """
    Fixed-step grid t#_j = t0 + j dt on which node fluxes are exchanged
    """

    def __init__(self, t0: float, T: float, dt: float):
        self.dt = dt
        n = int(math.ceil((T - t0) / dt - 1e-9))
        self.times = t0 + dt * np.arange(n + 1)
        self.T = T

    @classmethod
    def default(cls, network: Network, dx: float, t0: float, T: float) -> "CommonGrid":
        """dt# = dx / max λ, so every arc takes at least one step per common step"""
        fastest = max(value_range_on(arc.velocity, t0, T)[1] for arc in network.arcs.values())
        return cls(t0, T, dx / fastest)


class NetworkState:
    """
    Densities and flux histories of all arcs for a batch of runs
    """

    def __init__(self, grids: Mapping[int, ArcGrid], network: Network, n_common: int, batch: int):
        self.densities = {a: np.zeros((batch, g.n_cells)) for a, g in grids.items()}
        self.exit_flux = {a: np.zeros((batch, g.n_steps + 1)) for a, g in grids.items()}
        self.entry_flux = {a: np.zeros((batch, g.n_steps)) for a, g in grids.items()}
        self.step_index = {a: 0 for a in grids}
        self.node_inflow = {v: np.zeros((batch, n_common)) for v in network.nodes if v != network.source}


class Trajectory(BaseModel):
    """
    Result of one batched simulation on the common grid.
    Arrays have shape (batch, len(times)).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    control: np.ndarray
    supply: Dict[int, np.ndarray]
    demand: Dict[int, np.ndarray]
    first_arrival: Dict[int, float]
    node_inflow: Dict[int, np.ndarray]
    arc_entry_flux: Dict[int, np.ndarray] = {}

    @property
    def batch(self) -> int:
        return self.control.shape[0]


def _resample(src_times: np.ndarray, values: np.ndarray, dst_times: np.ndarray) -> np.ndarray:
    """Row-wise linear interpolation of (batch, n) values onto dst_times"""
    idx = np.clip(np.searchsorted(src_times, dst_times, side="right"), 1, len(src_times) - 1)
    left, right = src_times[idx - 1], src_times[idx]
    w = np.clip((dst_times - left) / np.where(right > left, right - left, 1.0), 0.0, 1.0)
    return values[:, idx - 1] * (1.0 - w) + values[:, idx] * w


class NetworkSimulator:
    """
    Advances all arcs on their own grids and couples them at nodes.
    Grids depend only on the network, so one simulator serves every run.
    """

    def __init__(
        self,
        network: Network,
        transit: TransitMap,
        dx: float,
        dt_common: Optional[float] = None,
        exact_damping: bool = False,
    ):
        """
        Args:
            network: validated network
            transit: transit-time queries, used for first-arrival times
            dx: spatial step
            dt_common: common grid step (default dx / max λ)
            exact_damping: exponential damping substep instead of 1 - dt mu
        """
        self.network = network
        self.transit = transit
        t0, T = transit.t0, transit.horizon
        if dt_common is None:
            self.common = CommonGrid.default(network, dx, t0, T)
        else:
            self.common = CommonGrid(t0, T, dt_common)
        t_end = self.common.times[-1]
        self.grids = {a: ArcGrid(arc, dx, t0, t_end, exact_damping) for a, arc in network.arcs.items()}
        self.order = network.bfs_arcs()
        logger.debug(
            "simulator ready: %d common steps, arc steps %s",
            len(self.common.times) - 1,
            {a: g.n_steps for a, g in self.grids.items()},
        )

    def run_simulation(
        self,
        policy,
        demand_paths: Mapping[int, SamplePath],
        batch: int,
        inflow: Optional[Callable[[float], np.ndarray]] = None,
        record_fluxes: bool = False,
    ) -> Trajectory:
        """
        Simulate a batch of runs

        Args:
            policy: ControlPolicy providing optimal_inflow and node_alphas
            demand_paths: demand per leaf, values shaped (batch, n + 1)
            batch: number of runs
            inflow: optional override u(t) -> (batch,) at arc-1 grid times
            record_fluxes: keep arc entry fluxes on the common grid

        Returns:
            Trajectory on the common grid
        """
        network, common = self.network, self.common
        n_common = len(common.times)
        state = NetworkState(self.grids, network, n_common, batch)
        source = network.source
        source_arc = network.source_arc()
        controls = np.zeros((batch, self.grids[source_arc].n_steps))

        for j in range(n_common - 1):
            t_prev, t_next = common.times[j], common.times[j + 1]
            for arc_id in self.order:
                grid = self.grids[arc_id]
                tail = grid.arc.tail
                z = state.densities[arc_id]
                k = state.step_index[arc_id]
                while k < grid.n_steps and grid.times[k] <= t_next:
                    t_k = grid.times[k]
                    if tail == source:
                        u = inflow(t_k) if inflow is not None else policy.optimal_inflow(t_k)
                        u = np.broadcast_to(u, (batch,))
                        controls[:, k] = u
                        boundary = u / grid.velocity[k]
                    else:
                        f_prev = state.node_inflow[tail][:, j]
                        f_next = state.node_inflow[tail][:, j + 1]
                        f_here = node_influx(t_prev, f_prev, t_next, f_next, t_k)
                        alpha = policy.node_alphas(tail, t_k, f_in=f_here)[arc_id]
                        boundary = node_outflux_boundary(
                            alpha,
                            t_prev, f_prev, evaluate(grid.arc.velocity, t_prev),
                            t_next, f_next, evaluate(grid.arc.velocity, t_next),
                            t_k,
                        )
                    z = step_arc(z, boundary, grid.factors[k])
                    state.entry_flux[arc_id][:, k] = boundary * grid.velocity[k]
                    k += 1
                    state.exit_flux[arc_id][:, k] = z[:, -1] * grid.velocity[k]
                state.densities[arc_id] = z
                state.step_index[arc_id] = k
                state.node_inflow[grid.arc.head][:, j + 1] = node_influx(
                    grid.times[k - 1], state.exit_flux[arc_id][:, k - 1],
                    grid.times[k], state.exit_flux[arc_id][:, k],
                    t_next,
                ) if k > 0 else 0.0

        times = common.times
        arc1 = self.grids[source_arc]
        leaves = network.demand_nodes()
        first_arrival = {}
        for leaf in leaves:
            t_first = self.transit.try_node_arrival_time(source, leaf, self.transit.t0)
            first_arrival[leaf] = math.inf if t_first is None else t_first
        demand = {}
        for leaf in leaves:
            values = demand_paths[leaf].interpolate(times)
            demand[leaf] = np.broadcast_to(values, (batch, len(times))).copy()
        entry = {}
        if record_fluxes:
            entry = {a: _resample(g.times[:-1], state.entry_flux[a], times) for a, g in self.grids.items()}
        return Trajectory(
            times=times,
            control=_resample(arc1.times[:-1], controls, times),
            supply={leaf: state.node_inflow[leaf] for leaf in leaves},
            demand=demand,
            first_arrival=first_arrival,
            node_inflow=state.node_inflow,
            arc_entry_flux=entry,
        )
