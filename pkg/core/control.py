"""
Control Policy
Explicit optimal inflow at the source and flux distribution parameters at
inner nodes for the three information regimes MS1, MS2 and MS3
"""
import bisect
import logging
from typing import Dict, List, Mapping, Optional

import numpy as np
from pydantic import BaseModel, model_validator

from core.demand import mean_coefficients
from core.errors import AllNegative, NoSuchPath, OutOfHorizon
from core.network import Network
from core.timefuncs import TransitMap
from models.demand import JacobiParams, ObservationState, SamplePath
from models.scenario import ModelSetting

logger = logging.getLogger(__name__)

__all__ = [
    "ModelSetting",
    "UpdateSchedule",
    "ObservationBook",
    "ControlPolicy",
    "clamp_alphas",
    "lagrange_allocation",
]


class UpdateSchedule(BaseModel):
    """
    Demand update times t̂_1 = t0 < t̂_2 < ... <= T
    """
    times: List[float]

    @model_validator(mode="after")
    def _check_times(self):
        if not self.times:
            raise ValueError("schedule needs at least the start time")
        for left, right in zip(self.times, self.times[1:]):
            if right <= left:
                raise ValueError("update times must be strictly increasing")
        return self

    @classmethod
    def from_update_count(cls, t0: float, T: float, updates: int) -> "UpdateSchedule":
        """
        n updates split [t0, T] into n + 1 equal intervals.
        6 updates on [0, 2.5] gives a spacing of 5/14.
        """
        step = (T - t0) / (updates + 1)
        return cls(times=[t0 + j * step for j in range(updates + 1)])

    @property
    def t0(self) -> float:
        return self.times[0]

    def floor_update_time(self, s: float) -> float:
        """
        ⌊s⌋: latest update time not after s (t0 for s before the first update)
        """
        idx = bisect.bisect_right(self.times, s + 1e-12) - 1
        return self.times[max(idx, 0)]


class ObservationBook:
    """
    Demand information available to the controller: the true demand paths,
    read off at update times
    """

    def __init__(self, paths: Mapping[int, SamplePath]):
        self.paths = dict(paths)
        self._cache: Dict[float, ObservationState] = {}

    def state(self, s: float) -> ObservationState:
        if s not in self._cache:
            self._cache[s] = ObservationState(
                time=s, values={node: path.value_at(s) for node, path in self.paths.items()}
            )
        return self._cache[s]


def clamp_alphas(alphas):
    """
    Set negative distribution parameters to zero and hand their mass to the
    remaining arcs in proportion to their shares

    Args:
        alphas: array of shape (n_arcs,) or (n_arcs, batch) summing to 1 along axis 0

    Returns:
        clamped array of the same shape, entries in [0, 1], summing to 1

    Raises:
        AllNegative: no arc keeps a positive share
    """
    alphas = np.asarray(alphas, dtype=float)
    positive = np.maximum(alphas, 0.0)
    total = positive.sum(axis=0)
    if np.any(total <= 0.0):
        raise AllNegative("no outgoing arc has a positive share")
    return positive / total


def lagrange_allocation(expected: np.ndarray, gamma: np.ndarray, f_in) -> np.ndarray:
    """
    Minimiser of Σ_r (m_r - E_r)^2 subject to Σ_r γ_r m_r = f_in

    Args:
        expected: E_r, shape (n_leaves,) or (n_leaves, batch)
        gamma: γ_r, shape (n_leaves,)
        f_in: node inflow, scalar or (batch,)

    Returns:
        m_r = E_r + γ_r / Σγ² (f_in - Σ γ E)
    """
    gamma = np.asarray(gamma, dtype=float)
    expected = np.asarray(expected, dtype=float)
    g = gamma.reshape(gamma.shape + (1,) * (expected.ndim - 1))
    mismatch = np.asarray(f_in, dtype=float) - (g * expected).sum(axis=0)
    return expected + g / np.sum(gamma * gamma) * mismatch


class ControlPolicy:
    """
    Explicit controls for one information regime.

    Observed values may be arrays over a batch of runs; every returned
    quantity then carries the same batch shape.
    """

    def __init__(
        self,
        network: Network,
        transit: TransitMap,
        demands: Mapping[int, JacobiParams],
        setting: ModelSetting,
        schedule: UpdateSchedule,
        observations: ObservationBook,
    ):
        """
        Args:
            network: validated network
            transit: transit-time queries on the same network
            demands: demand parameters per leaf (only kappa and theta are used)
            setting: MS1, MS2 or MS3
            schedule: update times; ignored for MS1
            observations: demand information source
        """
        self.network = network
        self.transit = transit
        self.demands = dict(demands)
        self.setting = setting
        self.schedule = schedule if setting != ModelSetting.MS1 else UpdateSchedule(times=[transit.t0])
        self.observations = observations
        self._mean_cache: Dict[tuple, tuple] = {}

    # conditional expectations

    def conditional_mean(self, leaf: int, info_time: float, t: float):
        """
        E[D^{leaf}_t | observation at info_time]
        """
        key = (leaf, info_time, t)
        coeffs = self._mean_cache.get(key)
        if coeffs is None:
            p = self.demands[leaf]
            coeffs = mean_coefficients(p.kappa, p.theta, info_time, t)
            self._mean_cache[key] = coeffs
        decay, forcing = coeffs
        return decay * self.observations.state(info_time).value(leaf) + forcing

    def _info_time_for_injection(self, t_in: float) -> float:
        if self.setting == ModelSetting.MS1 or t_in < self.transit.t0:
            return self.transit.t0
        return self.schedule.floor_update_time(t_in)

    def _weighted_expectations(self, v_i: int, t: float, info_time: float) -> Dict[int, object]:
        """
        γ_i^r(t) E[D^r at t̃(v_i, v_r, t)] for every leaf below v_i that is reached by T
        """
        out = {}
        for leaf in self.network.demand_descendants(v_i):
            t_arr = self.transit.try_node_arrival_time(v_i, leaf, t)
            if t_arr is None:
                continue
            out[leaf] = self.transit.gamma(v_i, leaf, t) * self.conditional_mean(leaf, info_time, t_arr)
        return out

    # source inflow

    def optimal_inflow(self, t_in: float):
        """
        u(t_in): sum over leaves of the expected demand at arrival, scaled by γ_{v0}^r.
        Leaves reached after T are left out.
        """
        info_time = self._info_time_for_injection(t_in)
        weighted = self._weighted_expectations(self.network.source, t_in, info_time)
        if not weighted:
            return 0.0
        # OU demand can make this negative; it is reported, not clamped
        return sum(weighted.values())

    # distribution parameters

    def _balanced_shares(self, v_i: int, t: float, info_time: float) -> Dict[int, object]:
        weighted = self._weighted_expectations(v_i, t, info_time)
        arcs = self.network.outgoing_arcs(v_i)
        numerators = {}
        for k in arcs:
            leaves = self.network.demand_descendants(self.network.arc(k).head)
            numerators[k] = sum((weighted[q] for q in leaves if q in weighted), 0.0)
        return _normalise(numerators)

    def alpha_info_time(self, v_i: int, t: float) -> float:
        """
        Conditioning time of the MS1/MS2 routing at v_i and time t:
        t0 for MS1, ⌊t̃⁻¹(v0, v_i, t)⌋ otherwise
        """
        if self.setting == ModelSetting.MS1:
            return self.transit.t0
        try:
            injected = self.transit.injection_time(self.network.source, v_i, t)
        except OutOfHorizon:
            return self.transit.t0
        return self.schedule.floor_update_time(injected)

    def alpha(self, i: int, k: int, t: float):
        """
        α_{i,k}(t) for MS1/MS2: γ-weighted expected demand below arc k
        over that below arc i

        Raises:
            NoSuchPath: arc i is unknown or arc k does not leave its head
        """
        if i not in self.network.arcs:
            raise NoSuchPath(f"unknown arc {i}")
        v_i = self.network.arc(i).head
        if k not in self.network.outgoing_arcs(v_i):
            raise NoSuchPath(f"arc {k} does not leave v{v_i}")
        shares = self._balanced_shares(v_i, t, self.alpha_info_time(v_i, t))
        return shares[k]

    def ms3_allocation(self, v_i: int, f_in, t: float, info_time: Optional[float] = None):
        """
        Least-squares allocation at an inner node for a given inflow

        Args:
            v_i: inner node
            f_in: actual inflow at v_i, scalar or (batch,)
            t: current time
            info_time: conditioning time, defaults to ⌊t⌋

        Returns:
            (m, alphas): m maps each reachable leaf to its target supply,
            alphas maps each outgoing arc to its clamped share
        """
        if info_time is None:
            info_time = self.schedule.floor_update_time(t)
        leaves, gammas, expected = [], [], []
        for leaf in self.network.demand_descendants(v_i):
            t_arr = self.transit.try_node_arrival_time(v_i, leaf, t)
            if t_arr is None:
                continue
            leaves.append(leaf)
            gammas.append(self.transit.gamma(v_i, leaf, t))
            expected.append(np.broadcast_to(self.conditional_mean(leaf, info_time, t_arr), np.shape(f_in)))
        arcs = self.network.outgoing_arcs(v_i)
        if not leaves:
            uniform = {k: np.full(np.shape(f_in), 1.0 / len(arcs)) if np.ndim(f_in) else 1.0 / len(arcs) for k in arcs}
            return {}, uniform

        m_values = lagrange_allocation(np.array(expected), np.array(gammas), f_in)
        m = dict(zip(leaves, m_values))
        delivered = {leaf: g * m_values[idx] for idx, (leaf, g) in enumerate(zip(leaves, gammas))}

        numerators = []
        for k in arcs:
            below = self.network.demand_descendants(self.network.arc(k).head)
            numerators.append(sum((delivered[q] for q in below if q in delivered), np.zeros(np.shape(f_in))))
        numerators = np.array(numerators)
        total = numerators.sum(axis=0)

        balanced = self._balanced_shares(v_i, t, info_time)
        balanced_arr = np.array([np.broadcast_to(balanced[k], np.shape(f_in)) for k in arcs])
        active = np.abs(total) > 1e-14
        safe_total = np.where(active, total, 1.0)
        raw = np.where(active, numerators / safe_total, balanced_arr)
        try:
            clamped = clamp_alphas(raw)
        except AllNegative:
            logger.warning("all MS3 shares non-positive at v%d, t=%.6g; using balanced shares", v_i, t)
            clamped = clamp_alphas(balanced_arr)
        alphas = {k: (clamped[idx] if np.ndim(f_in) else float(clamped[idx])) for idx, k in enumerate(arcs)}
        return m, alphas

    def node_alphas(self, v_i: int, t: float, f_in=None) -> Dict[int, object]:
        """
        Distribution parameters of every outgoing arc of v_i at time t.
        MS3 requires the node inflow f_in.
        """
        if self.setting == ModelSetting.MS3:
            if f_in is None:
                raise ValueError("MS3 routing needs the node inflow")
            return self.ms3_allocation(v_i, f_in, t)[1]
        return self._balanced_shares(v_i, t, self.alpha_info_time(v_i, t))


def _normalise(numerators: Dict[int, object]) -> Dict[int, object]:
    """
    Divide by the total. A non-positive total (OU demand can push every
    numerator to zero or below) falls back to an even split.
    """
    keys = list(numerators)
    raw = [np.asarray(numerators[k], dtype=float) for k in keys]
    batch_shape = np.broadcast_shapes(*[v.shape for v in raw])
    values = np.array([np.broadcast_to(v, batch_shape) for v in raw])
    total = values.sum(axis=0)
    zero = total <= 0.0
    safe = np.where(zero, 1.0, total)
    shares = np.where(zero, 1.0 / len(keys), values / safe)
    if shares.ndim == 1:
        return {k: float(shares[idx]) for idx, k in enumerate(keys)}
    return {k: shares[idx] for idx, k in enumerate(keys)}
