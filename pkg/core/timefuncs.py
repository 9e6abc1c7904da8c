"""
Time Functions
Coefficient evaluation, closed-form antiderivatives, transit times,
damping factors and the gamma compensation factors along tree paths
"""
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from core.errors import NoSuchPath, OutOfHorizon
from models.coefficients import CoefFn, ConstantFn, PiecewiseConstantFn, SinusoidFn

TOL_ROOT = 1e-12


def evaluate(fn: CoefFn, t):
    """
    Pointwise value of a coefficient function

    Args:
        fn: coefficient function
        t: time (float or ndarray)

    Returns:
        f(t), same shape as t
    """
    if isinstance(fn, ConstantFn):
        if isinstance(t, np.ndarray):
            return np.full_like(t, fn.value, dtype=float)
        return fn.value
    if isinstance(fn, SinusoidFn):
        if isinstance(t, np.ndarray):
            return fn.offset + fn.amplitude * np.sin(fn.omega * t + fn.phase)
        return fn.offset + fn.amplitude * math.sin(fn.omega * t + fn.phase)
    if isinstance(fn, PiecewiseConstantFn):
        idx = np.searchsorted(fn.breakpoints, t, side="right")
        values = np.asarray(fn.values, dtype=float)
        if isinstance(t, np.ndarray):
            return values[idx]
        return float(values[idx])
    raise TypeError(f"unknown coefficient function {type(fn).__name__}")


def antiderivative(fn: CoefFn, a: float, b: float) -> float:
    """
    Closed-form integral of fn over [a, b]

    Args:
        fn: coefficient function
        a: lower limit
        b: upper limit

    Returns:
        ∫_a^b fn(r) dr
    """
    if isinstance(fn, ConstantFn):
        return fn.value * (b - a)
    if isinstance(fn, SinusoidFn):
        return fn.offset * (b - a) - (fn.amplitude / fn.omega) * (
            math.cos(fn.omega * b + fn.phase) - math.cos(fn.omega * a + fn.phase)
        )
    if isinstance(fn, PiecewiseConstantFn):
        if b < a:
            return -antiderivative(fn, b, a)
        edges = [-math.inf] + list(fn.breakpoints) + [math.inf]
        total = 0.0
        for value, left, right in zip(fn.values, edges[:-1], edges[1:]):
            lo, hi = max(left, a), min(right, b)
            if hi > lo:
                total += value * (hi - lo)
        return total
    raise TypeError(f"unknown coefficient function {type(fn).__name__}")


def value_range(fn: CoefFn) -> Tuple[float, float]:
    """
    Analytic lower and upper bounds of fn over the whole real line
    """
    if isinstance(fn, ConstantFn):
        return fn.value, fn.value
    if isinstance(fn, SinusoidFn):
        return fn.offset - abs(fn.amplitude), fn.offset + abs(fn.amplitude)
    return min(fn.values), max(fn.values)


def value_range_on(fn: CoefFn, a: float, b: float) -> Tuple[float, float]:
    """Bounds of fn restricted to [a, b] (exact for pwc, analytic envelope otherwise)"""
    if isinstance(fn, PiecewiseConstantFn):
        a, b = min(a, b), max(a, b)
        edges = [-math.inf] + list(fn.breakpoints) + [math.inf]
        live = [v for v, lo, hi in zip(fn.values, edges[:-1], edges[1:]) if hi > a and lo <= b]
        return min(live), max(live)
    return value_range(fn)


def exp_convolution(fn: CoefFn, rate: float, t0: float, t: float) -> float:
    """
    rate * ∫_{t0}^{t} exp(-rate (t - s)) fn(s) ds in closed form.
    This is the forcing part of the linear ODE  y' = rate (fn(t) - y).
    """
    if t <= t0 or rate == 0.0:
        return 0.0
    tau = t - t0
    decay = math.exp(-rate * tau)
    if isinstance(fn, ConstantFn):
        return fn.value * (1.0 - decay)
    if isinstance(fn, SinusoidFn):
        w, ph = fn.omega, fn.phase
        denom = rate * rate + w * w

        def primitive(s):
            return rate * math.sin(w * s + ph) - w * math.cos(w * s + ph)

        periodic = rate * fn.amplitude / denom * (primitive(t) - decay * primitive(t0))
        return fn.offset * (1.0 - decay) + periodic
    if isinstance(fn, PiecewiseConstantFn):
        edges = [-math.inf] + list(fn.breakpoints) + [math.inf]
        total = 0.0
        for value, left, right in zip(fn.values, edges[:-1], edges[1:]):
            lo, hi = max(left, t0), min(right, t)
            if hi > lo:
                total += value * (math.exp(-rate * (t - hi)) - math.exp(-rate * (t - lo)))
        return total
    raise TypeError(f"unknown coefficient function {type(fn).__name__}")


def inverse_antiderivative(fn: CoefFn, y: float, t_ref: float, horizon: float) -> float:
    """
    Solve ∫_{t_ref}^{t} fn = y for t >= t_ref (fn strictly positive)

    Args:
        fn: strictly positive coefficient (a velocity)
        y: target integral value, y >= 0
        t_ref: anchor time where the antiderivative is zero
        horizon: latest admissible solution time

    Returns:
        t with |∫_{t_ref}^{t} fn - y| <= TOL_ROOT

    Raises:
        OutOfHorizon: if the solution lies beyond horizon
    """
    if y <= 0.0:
        return t_ref
    if isinstance(fn, ConstantFn):
        t = t_ref + y / fn.value
        if t > horizon + TOL_ROOT:
            raise OutOfHorizon(f"transit completes at {t:.6g} after horizon {horizon:.6g}")
        return t
    low, high = value_range_on(fn, t_ref, horizon)
    upper = min(t_ref + y / low, horizon) if low > 0.0 else horizon
    lower = max(t_ref, min(t_ref + y / high, upper)) if high > 0.0 else t_ref

    def residual(s):
        return antiderivative(fn, t_ref, s) - y

    if residual(upper) < -TOL_ROOT:
        raise OutOfHorizon(f"transit from {t_ref:.6g} not completed by horizon {horizon:.6g}")
    if residual(lower) >= 0.0:
        return lower
    if residual(upper) <= 0.0:
        return upper
    return brentq(residual, lower, upper, xtol=TOL_ROOT / (2.0 * high), rtol=4.0 * np.finfo(float).eps)


def inverse_antiderivative_backward(fn: CoefFn, y: float, t_ref: float, earliest: float) -> float:
    """
    Solve ∫_{s}^{t_ref} fn = y for s <= t_ref

    Raises:
        OutOfHorizon: if s would precede earliest
    """
    if y <= 0.0:
        return t_ref
    if isinstance(fn, ConstantFn):
        s = t_ref - y / fn.value
        if s < earliest - TOL_ROOT:
            raise OutOfHorizon(f"departure at {s:.6g} precedes {earliest:.6g}")
        return s
    low, high = value_range_on(fn, earliest, t_ref)
    lower = max(t_ref - y / low, earliest) if low > 0.0 else earliest
    upper = min(t_ref, max(t_ref - y / high, lower)) if high > 0.0 else t_ref

    def residual(s):
        return antiderivative(fn, s, t_ref) - y

    if residual(lower) < -TOL_ROOT:
        raise OutOfHorizon(f"departure for arrival {t_ref:.6g} precedes {earliest:.6g}")
    if residual(upper) >= 0.0:
        return upper
    if residual(lower) <= 0.0:
        return lower
    return brentq(residual, lower, upper, xtol=TOL_ROOT / (2.0 * high), rtol=4.0 * np.finfo(float).eps)


def damping_factor(fn: CoefFn, t_a: float, t_b: float) -> float:
    """
    exp(-∫_{t_a}^{t_b} mu): surviving fraction of material on an arc
    """
    return math.exp(-antiderivative(fn, t_a, t_b))


class TransitMap:
    """
    Transit-time queries on a validated network.

    Results are memoised: arc grids are identical across Monte Carlo runs,
    so every run after the first hits the cache.
    """

    def __init__(self, network, t0: float, horizon: float):
        """
        Args:
            network: validated core.network.Network
            t0: start of the time horizon
            horizon: end of the time horizon T
        """
        self.network = network
        self.t0 = t0
        self.horizon = horizon
        self._arrival = lru_cache(maxsize=None)(self._arrival_uncached)
        self._departure = lru_cache(maxsize=None)(self._departure_uncached)
        self._gamma = lru_cache(maxsize=None)(self._gamma_uncached)
        self._path_arrival = lru_cache(maxsize=None)(self._path_arrival_uncached)

    def _arrival_uncached(self, arc_id: int, t_dep: float) -> float:
        arc = self.network.arc(arc_id)
        try:
            return inverse_antiderivative(arc.velocity, arc.length, t_dep, self.horizon)
        except OutOfHorizon:
            return math.inf

    def _departure_uncached(self, arc_id: int, t_arr: float) -> float:
        arc = self.network.arc(arc_id)
        try:
            return inverse_antiderivative_backward(arc.velocity, arc.length, t_arr, self.t0)
        except OutOfHorizon:
            return -math.inf

    def transit_time(self, arc_id: int, t_dep: float) -> float:
        """
        Arrival time at the head of arc for material entering at t_dep

        Raises:
            OutOfHorizon: transit not completed within the horizon
        """
        t_arr = self._arrival(arc_id, t_dep)
        if math.isinf(t_arr):
            raise OutOfHorizon(f"arc {arc_id}: departure {t_dep:.6g} does not arrive by {self.horizon:.6g}")
        return t_arr

    def _path_arrival_uncached(self, v_i: int, v_j: int, t: float) -> float:
        for arc_id in self.network.path_arcs(v_i, v_j):
            if math.isinf(t):
                break
            t = self._arrival(arc_id, t)
        return t

    def node_arrival_time(self, v_i: int, v_j: int, t: float) -> float:
        """
        t̃(v_i, v_j, t): arrival at v_j of material leaving v_i at t

        Raises:
            NoSuchPath: v_j is not below v_i
            OutOfHorizon: arrival after the horizon
        """
        t_arr = self._path_arrival(v_i, v_j, t)
        if math.isinf(t_arr):
            raise OutOfHorizon(f"material leaving v{v_i} at {t:.6g} reaches v{v_j} after {self.horizon:.6g}")
        return t_arr

    def try_node_arrival_time(self, v_i: int, v_j: int, t: float) -> Optional[float]:
        """Like node_arrival_time, but None instead of OutOfHorizon"""
        t_arr = self._path_arrival(v_i, v_j, t)
        return None if math.isinf(t_arr) else t_arr

    def injection_time(self, v_i: int, v_j: int, t_arr: float) -> float:
        """
        t̃⁻¹(v_i, v_j, t_arr): departure time from v_i of material reaching v_j at t_arr.
        Solved arc by arc backwards along η(v_i, v_j).

        Raises:
            OutOfHorizon: departure would precede t0
        """
        t = t_arr
        for arc_id in reversed(self.network.path_arcs(v_i, v_j)):
            t = self._departure(arc_id, t)
            if math.isinf(t):
                raise OutOfHorizon(f"material reaching v{v_j} at {t_arr:.6g} left v{v_i} before {self.t0:.6g}")
        return t

    def _gamma_uncached(self, v_i: int, v_r: int, t: float) -> float:
        factor = 1.0
        t_tail = t
        for arc_id in self.network.path_arcs(v_i, v_r):
            arc = self.network.arc(arc_id)
            t_head = self._arrival(arc_id, t_tail)
            if math.isinf(t_head):
                return math.nan
            ratio = evaluate(arc.velocity, t_tail) / evaluate(arc.velocity, t_head)
            factor *= ratio / damping_factor(arc.damping, t_tail, t_head)
            t_tail = t_head
        return factor

    def gamma(self, v_i: int, v_r: int, t: float) -> float:
        """
        γ_i^r(t): flux at v_i needed per unit of flux delivered at v_r.
        Product over η(v_i, v_r) of velocity ratios and inverse damping factors.

        Raises:
            NoSuchPath: v_r is not a demand descendant of v_i
            OutOfHorizon: material does not reach v_r within the horizon
        """
        if v_r not in self.network.demand_descendants(v_i):
            raise NoSuchPath(f"v{v_r} is not a demand descendant of v{v_i}")
        value = self._gamma(v_i, v_r, t)
        if math.isnan(value):
            raise OutOfHorizon(f"material leaving v{v_i} at {t:.6g} reaches v{v_r} after {self.horizon:.6g}")
        return value
