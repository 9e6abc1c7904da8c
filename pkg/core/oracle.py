"""
Control Oracle
Brute-force minimiser of the deterministic tracking objective over
piecewise-constant source inflows, used to cross-check the explicit control
"""
import logging
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.demand import jacobi_mean_path, jacobi_second_moment_path
from core.errors import NotConverged
from core.harness import SimulationContext, window_weights
from models.demand import SamplePath
from models.scenario import ModelSetting, Scenario

logger = logging.getLogger(__name__)

MAX_CELLS = 200


class OracleResult(BaseModel):
    """
    Piecewise-constant optimal inflow and objective values
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    edges: np.ndarray
    control: np.ndarray
    objective: float
    explicit_control: np.ndarray
    explicit_objective: float
    reachable: np.ndarray
    complete: np.ndarray
    sweeps: int
    projected_gradient: float


class _LeafTerms(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mask: np.ndarray
    widths: np.ndarray
    m1: np.ndarray
    m2: np.ndarray


def _objective(supply: Dict[int, np.ndarray], terms: Dict[int, _LeafTerms]) -> float:
    """Σ_leaves Σ_window w (m2 - 2 f m1 + f^2) for a single supply row per leaf"""
    total = 0.0
    for leaf, term in terms.items():
        f = supply[leaf][term.mask]
        total += float(np.sum(term.widths * (term.m2 - 2.0 * f * term.m1 + f * f)))
    return total


def _coordinate_descent(H: np.ndarray, b: np.ndarray, active: np.ndarray, tol: float, max_sweeps: int):
    """
    Projected coordinate descent for min ½ uᵀHu - bᵀu subject to u >= 0

    Returns:
        (u, sweeps, projected gradient norm, converged)
    """
    u = np.zeros(len(b))
    grad = -b.copy()
    pg_norm = np.inf
    for sweep in range(1, max_sweeps + 1):
        for k in np.flatnonzero(active):
            new = max(0.0, u[k] - grad[k] / H[k, k])
            delta = new - u[k]
            if delta != 0.0:
                grad += H[:, k] * delta
                u[k] = new
        projected = np.where(u > 0.0, grad, np.minimum(grad, 0.0))[active]
        pg_norm = float(np.linalg.norm(projected))
        if pg_norm <= tol:
            return u, sweep, pg_norm, True
    return u, max_sweeps, pg_norm, False


def oracle_control_optimizer(
    scenario: Scenario,
    n_cells: int = 50,
    profile: Optional[str] = None,
    tol: float = 1e-6,
    max_sweeps: int = 20000,
) -> OracleResult:
    """
    Minimise the time-integrated expected squared supply gap over inflows
    that are constant on n_cells equal cells of [t0, T].

    The routing is fixed to the MS1 rule, which does not depend on the
    inflow, so leaf supply is linear in the cell values. One batched
    simulation with unit inflow on each cell gives the response matrix and
    the objective becomes a quadratic in the cell values.

    Args:
        scenario: scenario; demand is observed at t0 only
        n_cells: control cells, at most MAX_CELLS
        profile: damping profile (default: first)
        tol: stop when the projected gradient norm falls below tol
        max_sweeps: coordinate sweeps before giving up

    Returns:
        OracleResult with the oracle and the explicit control on the same cells

    Raises:
        NotConverged: tolerance not reached; the best iterate is attached
    """
    if not 1 <= n_cells <= MAX_CELLS:
        raise ValueError(f"n_cells must lie in [1, {MAX_CELLS}]")
    context = SimulationContext(scenario)
    profile = profile or scenario.damping_profiles[0]
    simulator = context.simulators[profile]
    t0, T = scenario.horizon.t0, scenario.horizon.T
    times = simulator.common.times

    fixed = {
        leaf: SamplePath(t0=t0, dt=T - t0, values=np.array([p.d0, p.d0]))
        for leaf, p in context.demand_params.items()
    }
    policy = context.policy(profile, ModelSetting.MS1, fixed)
    edges = np.linspace(t0, T, n_cells + 1)
    basis = np.eye(n_cells)

    def unit_inflow(t: float) -> np.ndarray:
        cell = min(int(np.searchsorted(edges, t, side="right")) - 1, n_cells - 1)
        return basis[:, max(cell, 0)]

    response = simulator.run_simulation(policy, fixed, n_cells, inflow=unit_inflow)
    explicit = simulator.run_simulation(policy, fixed, 1)

    terms: Dict[int, _LeafTerms] = {}
    H = np.zeros((n_cells, n_cells))
    b = np.zeros(n_cells)
    constant = 0.0
    source = context.networks[profile].source
    for leaf, p in context.demand_params.items():
        t_first = context.transits[profile].node_arrival_time(source, leaf, t0)
        mask, widths = window_weights(times, t_first, T)
        window = times[mask]
        m1 = jacobi_mean_path(p, t0, p.d0, window)
        m2 = jacobi_second_moment_path(p, t0, p.d0, window)
        terms[leaf] = _LeafTerms(mask=mask, widths=widths, m1=m1, m2=m2)
        A = response.supply[leaf][:, mask]
        H += 2.0 * (A * widths) @ A.T
        b += 2.0 * A @ (widths * m1)
        constant += float(np.sum(widths * m2))

    active = np.diag(H) > 1e-14
    u, sweeps, pg_norm, converged = _coordinate_descent(H, b, active, tol, max_sweeps)
    objective = float(0.5 * u @ H @ u - b @ u + constant)

    # cells whose whole injection window reaches every leaf by T
    transit = context.transits[profile]
    complete = np.array(
        [all(transit.try_node_arrival_time(source, leaf, edges[k + 1]) is not None for leaf in terms) for k in range(n_cells)]
    ) & active

    cell_of = np.clip(np.searchsorted(edges, times, side="right") - 1, 0, n_cells - 1)
    explicit_cells = np.array(
        [explicit.control[0, cell_of == k].mean() if np.any(cell_of == k) else 0.0 for k in range(n_cells)]
    )
    result = OracleResult(
        edges=edges,
        control=u,
        objective=objective,
        explicit_control=explicit_cells,
        explicit_objective=_objective({leaf: explicit.supply[leaf][0] for leaf in terms}, terms),
        reachable=active,
        complete=complete,
        sweeps=sweeps,
        projected_gradient=pg_norm,
    )
    logger.info(
        "oracle: %d cells, %d sweeps, objective %.6g (explicit %.6g)",
        n_cells, sweeps, result.objective, result.explicit_objective,
    )
    if not converged:
        raise NotConverged(f"projected gradient {pg_norm:.3g} above {tol:.1e} after {sweeps} sweeps", best=result)
    return result


def relative_l2_gap(result: OracleResult) -> float:
    """
    ||u_oracle - u_explicit|| / ||u_explicit|| over cells whose injections
    reach every leaf within the horizon
    """
    diff = (result.control - result.explicit_control)[result.complete]
    ref = result.explicit_control[result.complete]
    norm = np.linalg.norm(ref)
    return float(np.linalg.norm(diff) / norm) if norm > 0 else float(np.linalg.norm(diff))
