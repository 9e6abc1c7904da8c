"""
Demand Processes
Truncated Euler-Maruyama simulation of Jacobi and OU demand, and the
conditional moments of the Jacobi process used by the controls
"""
import math
from typing import Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from core.errors import WrongThetaVariant
from core.timefuncs import evaluate, exp_convolution
from models.coefficients import ConstantFn, PiecewiseConstantFn
from models.demand import JacobiParams, OUParams, SamplePath

QUAD_RELTOL = 1e-10


def _as_output(value, like):
    """Return a python float when the caller passed a scalar"""
    if np.ndim(like) == 0:
        return float(value)
    return value


def simulate_jacobi(p: JacobiParams, t0: float, dt: float, normals: np.ndarray) -> SamplePath:
    """
    Truncated Euler-Maruyama path of the Jacobi demand

    Z* = Z + dt kappa (theta(t_j) - Z) + sigma sqrt(dt Z (1 - Z)) X_j,
    Z_{j+1} = min(max(Z*, 0), 1)

    Args:
        p: Jacobi parameters (theta and d0 in demand units)
        t0: start time
        dt: step size
        normals: standard normal draws, shape (n_steps,) or (batch, n_steps)

    Returns:
        SamplePath in demand units
    """
    n_steps = normals.shape[-1]
    grid = t0 + dt * np.arange(n_steps)
    theta = p.to_unit(evaluate(p.theta, grid))
    values = np.empty(normals.shape[:-1] + (n_steps + 1,))
    z = np.full(normals.shape[:-1], p.to_unit(p.d0), dtype=float)
    values[..., 0] = z
    drift_scale = dt * p.kappa
    noise_scale = p.sigma * math.sqrt(dt)
    for j in range(n_steps):
        z_star = z + drift_scale * (theta[j] - z) + noise_scale * np.sqrt(z * (1.0 - z)) * normals[..., j]
        z = np.clip(z_star, 0.0, 1.0)
        values[..., j + 1] = z
    return SamplePath(t0=t0, dt=dt, values=p.from_unit(values))


def simulate_ou(p: OUParams, t0: float, dt: float, normals: np.ndarray) -> SamplePath:
    """
    Euler-Maruyama path of the OU demand, not truncated

    Z_{j+1} = Z_j + dt kappa (theta(t_j) - Z_j) + sigma X_j

    sigma is a per-step intensity: the increment noise does not shrink with dt.
    """
    n_steps = normals.shape[-1]
    grid = t0 + dt * np.arange(n_steps)
    theta = evaluate(p.theta_hat, grid)
    values = np.empty(normals.shape[:-1] + (n_steps + 1,))
    z = np.full(normals.shape[:-1], p.z0_hat, dtype=float)
    values[..., 0] = z
    drift_scale = dt * p.kappa_hat
    for j in range(n_steps):
        z = z + drift_scale * (theta[j] - z) + p.sigma_hat * normals[..., j]
        values[..., j + 1] = z
    return SamplePath(t0=t0, dt=dt, values=values)


# First moment

def mean_coefficients(kappa: float, theta, t0: float, t: float) -> Tuple[float, float]:
    """
    E[Z_t | Z_{t0} = z0] = decay * z0 + forcing

    Returns:
        (decay, forcing)
    """
    if t <= t0:
        return 1.0, 0.0
    return math.exp(-kappa * (t - t0)), exp_convolution(theta, kappa, t0, t)


def jacobi_mean(p: JacobiParams, t0: float, z0, t: float):
    """
    Conditional mean of the Jacobi demand in demand units.
    The affine range map commutes with the linear mean ODE, so the
    demand-unit formula has the same shape as the unit-interval one.

    Args:
        p: Jacobi parameters
        t0: conditioning time
        z0: observed demand at t0 (scalar or array over runs)
        t: query time, t >= t0
    """
    decay, forcing = mean_coefficients(p.kappa, p.theta, t0, t)
    return _as_output(decay * np.asarray(z0, dtype=float) + forcing, z0)


def ou_mean(p: OUParams, t0: float, z0, t: float):
    """
    Conditional mean of the OU demand
    """
    decay, forcing = mean_coefficients(p.kappa_hat, p.theta_hat, t0, t)
    return _as_output(decay * np.asarray(z0, dtype=float) + forcing, z0)


def jacobi_mean_path(p: JacobiParams, t0: float, z0, times: Sequence[float]) -> np.ndarray:
    """
    Conditional mean on a time grid; shape (len(times),) or (batch, len(times))
    """
    coeffs = np.array([mean_coefficients(p.kappa, p.theta, t0, t) for t in times]).reshape(-1, 2)
    z0 = np.asarray(z0, dtype=float)
    return z0[..., None] * coeffs[:, 0] + coeffs[:, 1]


# Second moment (unit interval)

def _constant_m2_coefficients(kappa: float, theta: float, sigma: float, tau: float) -> Tuple[float, float, float]:
    """
    Constant theta: m2 = a2 z0^2 + a1 z0 + a0 in unit-interval coordinates
    """
    denom_fast = 2.0 * kappa + sigma * sigma
    denom_slow = kappa + sigma * sigma
    if denom_slow == 0.0:
        return 1.0, 0.0, 0.0
    g = 2.0 * kappa * theta + sigma * sigma
    level = g * theta / denom_fast
    slope = g / denom_slow
    offset = kappa * theta * g / (denom_fast * denom_slow)
    slow = math.exp(-kappa * tau)
    fast = math.exp(-denom_fast * tau)
    # level + slope (z0 - theta) slow + (z0^2 - slope z0 + offset) fast
    return fast, slope * slow - slope * fast, level - slope * theta * slow + offset * fast


def _unit_theta(p: JacobiParams):
    """theta mapped onto the unit interval, same coefficient family"""
    lower, width = p.bounds[0], p.width
    theta = p.theta
    if isinstance(theta, ConstantFn):
        return ConstantFn(value=(theta.value - lower) / width)
    if isinstance(theta, PiecewiseConstantFn):
        return PiecewiseConstantFn(breakpoints=theta.breakpoints, values=[(v - lower) / width for v in theta.values])
    return theta.model_copy(update={"offset": (theta.offset - lower) / width, "amplitude": theta.amplitude / width})


def _quad(fn, a: float, b: float, points=None) -> float:
    if b <= a:
        return 0.0
    inner = None
    if points:
        inner = [s for s in points if a < s < b] or None
    value, _ = quad(fn, a, b, epsabs=0.0, epsrel=QUAD_RELTOL, limit=200, points=inner)
    return value


def _m2_increments(p: JacobiParams, theta_u, t0: float, a: float, b: float) -> Tuple[float, float]:
    """
    ∫_a^b g(s) e^{-kappa (s - t0)} e^{-c (b - s)} ds and ∫_a^b g(s) h(s) e^{-c (b - s)} ds
    with g = 2 kappa theta + sigma^2 and h the mean forcing term
    """
    kappa, sigma2 = p.kappa, p.sigma * p.sigma
    rate = 2.0 * kappa + sigma2
    points = list(theta_u.breakpoints) if isinstance(theta_u, PiecewiseConstantFn) else None

    def g(s):
        return 2.0 * kappa * evaluate(theta_u, s) + sigma2

    def linear(s):
        return g(s) * math.exp(-kappa * (s - t0) - rate * (b - s))

    def forced(s):
        return g(s) * exp_convolution(theta_u, kappa, t0, s) * math.exp(-rate * (b - s))

    return _quad(linear, a, b, points), _quad(forced, a, b, points)


def _unit_m2_coefficients(p: JacobiParams, t0: float, t: float, method: str) -> Tuple[float, float, float]:
    tau = max(t - t0, 0.0)
    theta_u = _unit_theta(p)
    if method == "auto" and isinstance(theta_u, ConstantFn):
        return _constant_m2_coefficients(p.kappa, theta_u.value, p.sigma, tau)
    rate = 2.0 * p.kappa + p.sigma * p.sigma
    lin, forced = _m2_increments(p, theta_u, t0, t0, t)
    return math.exp(-rate * tau), lin, forced


def _to_demand_m2(p: JacobiParams, m1_unit, m2_unit):
    lower, width = p.bounds[0], p.width
    return lower * lower + 2.0 * lower * width * m1_unit + width * width * m2_unit


def jacobi_second_moment(p: JacobiParams, t0: float, z0, t: float, method: str = "auto"):
    """
    E[D_t^2 | D_{t0} = z0]

    Args:
        p: Jacobi parameters
        t0: conditioning time
        z0: observed demand at t0 (scalar or array)
        t: query time
        method: "auto" (closed form for constant theta, quadrature otherwise)
            or "quadrature"

    Returns:
        second moment in demand units
    """
    zu = p.to_unit(np.asarray(z0, dtype=float))
    theta_u = _unit_theta(p)
    decay, forcing = mean_coefficients(p.kappa, theta_u, t0, t)
    a2, a1, a0 = _unit_m2_coefficients(p, t0, t, method)
    m2_unit = a2 * zu * zu + a1 * zu + a0
    return _as_output(_to_demand_m2(p, decay * zu + forcing, m2_unit), z0)


def jacobi_second_moment_path(p: JacobiParams, t0: float, z0, times: Sequence[float]) -> np.ndarray:
    """
    Second moment on an increasing time grid, accumulated interval by interval
    so each quadrature only spans one grid step

    Returns:
        shape (len(times),) or (batch, len(times))
    """
    times = np.asarray(times, dtype=float)
    zu = p.to_unit(np.asarray(z0, dtype=float))
    theta_u = _unit_theta(p)
    rate = 2.0 * p.kappa + p.sigma * p.sigma
    out = np.empty(zu.shape + times.shape)
    lin = forced = 0.0
    prev = t0
    for k, t in enumerate(times):
        t = max(t, t0)
        shrink = math.exp(-rate * (t - prev))
        d_lin, d_forced = _m2_increments(p, theta_u, t0, prev, t)
        lin = lin * shrink + d_lin
        forced = forced * shrink + d_forced
        prev = t
        decay, forcing = mean_coefficients(p.kappa, theta_u, t0, t)
        m2_unit = math.exp(-rate * (t - t0)) * zu * zu + lin * zu + forced
        out[..., k] = _to_demand_m2(p, decay * zu + forcing, m2_unit)
    return out


def jacobi_m2_step_recursion(p: JacobiParams, t0: float, z0, t: float):
    """
    Second moment for a step-function theta by chaining the constant-theta
    formulas piece by piece (tower property)

    Raises:
        WrongThetaVariant: theta is not piecewise constant
    """
    if not isinstance(p.theta, PiecewiseConstantFn):
        raise WrongThetaVariant(f"step recursion needs a pwc theta, got {p.theta.kind}")
    theta_u = _unit_theta(p)
    kappa, sigma = p.kappa, p.sigma
    m1 = p.to_unit(np.asarray(z0, dtype=float))
    m2 = m1 * m1
    cuts = [t0] + [b for b in theta_u.breakpoints if t0 < b < t] + [t]
    for left, right in zip(cuts[:-1], cuts[1:]):
        if right <= left:
            continue
        level = float(evaluate(theta_u, left))
        a2, a1, a0 = _constant_m2_coefficients(kappa, level, sigma, right - left)
        m2 = a2 * m2 + a1 * m1 + a0
        m1 = level + (m1 - level) * math.exp(-kappa * (right - left))
    return _as_output(_to_demand_m2(p, m1, m2), z0)


def jacobi_stationary_moments(p: JacobiParams) -> Tuple[float, float]:
    """
    Limit mean and second moment for constant theta

    Raises:
        WrongThetaVariant: theta is time-dependent
    """
    if not isinstance(p.theta, ConstantFn):
        raise WrongThetaVariant("stationary moments need a constant theta")
    theta = p.to_unit(p.theta.value)
    sigma2 = p.sigma * p.sigma
    m2_unit = (2.0 * p.kappa * theta + sigma2) * theta / (2.0 * p.kappa + sigma2)
    return float(p.from_unit(theta)), float(_to_demand_m2(p, theta, m2_unit))


def expected_sq_deviation(p: JacobiParams, flux, t0: float, d0, t: float, method: str = "auto"):
    """
    E[(D_t - flux)^2 | D_{t0} = d0] = m2 - 2 flux m1 + flux^2
    """
    m1 = jacobi_mean(p, t0, d0, t)
    m2 = jacobi_second_moment(p, t0, d0, t, method=method)
    flux = np.asarray(flux, dtype=float) if np.ndim(flux) else flux
    return m2 - 2.0 * flux * m1 + flux * flux
