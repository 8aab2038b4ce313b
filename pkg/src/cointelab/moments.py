"""Closed-form one-step conditional moments of the cointelated pair.

The raw moments E[Y], E[XY], E[Y^2] solve linear ODEs driven by the exact
geometric-Brownian moments of the leading asset; the log-return statistics
follow from second-order Taylor expansions around the raw moments. The
Taylor step is an approximation with no error bound, so pathological
outputs (negative variance, |correlation| > 1) are flagged rather than
silently used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cointelab.sim import CointelationParams, TRADING_DAYS, Y_FLOOR_FRACTION


class ParameterDegeneracyError(ValueError):
    """A moment denominator vanished for this parameter combination."""


_DENOMINATOR_TOL = 1e-12


@dataclass(frozen=True)
class RawMoments:
    mean_y: float
    mean_xy: float
    mean_y2: float
    a: float
    b: float
    c: float
    d: float


@dataclass(frozen=True)
class MomentSet:
    """One-step return statistics conditioned on (x_prev, y_prev)."""

    e_rx: float
    e_ry: float
    var_rx: float
    var_ry: float
    cov_rxy: float
    mean_y: float
    mean_xy: float
    mean_y2: float
    a: float
    b: float
    c: float
    d: float
    dt: float
    x_prev: float
    y_prev: float
    flagged: bool = False


def _denominators(p: CointelationParams):
    # kappa enters per year here; the stored value is the per-day weight
    k = p.kappa * TRADING_DAYS
    ser = p.sigma * p.eta * p.rho
    return {
        "mu + kappa": p.mu + k,
        "mu + sigma^2 + kappa - sigma*eta*rho": p.mu + p.sigma**2 + k - ser,
        "2*mu + sigma^2 - eta^2 + 2*kappa": 2 * p.mu + p.sigma**2 - p.eta**2 + 2 * k,
        "mu - eta^2 + kappa + sigma*eta*rho": p.mu - p.eta**2 + k + ser,
    }


def check_denominators(params: CointelationParams) -> None:
    for name, value in _denominators(params).items():
        if abs(value) < _DENOMINATOR_TOL:
            raise ParameterDegeneracyError(f"denominator {name} vanishes ({value})")


def _raw_moment_values(params, x_prev, y_prev, dt):
    """ODE solutions for E[Y], E[XY], E[Y^2]; array-friendly."""
    p = params
    k = p.kappa * TRADING_DAYS  # per-year reversion rate
    ser = p.sigma * p.eta * p.rho
    a = k * x_prev / (p.mu + k)
    mean_y = a * np.exp(p.mu * dt) + (y_prev - a) * np.exp(-k * dt)

    b = k * x_prev**2 / (p.mu + p.sigma**2 + k - ser)
    e_fast = np.exp((2 * p.mu + p.sigma**2) * dt)
    e_cross = np.exp((p.mu - k + ser) * dt)
    mean_xy = b * e_fast + (x_prev * y_prev - b) * e_cross

    # the second-moment ODE is dE[Y^2]/dt = 2k E[XY] + (eta^2 - 2k) E[Y^2]:
    # the quadratic-variation term contributes eta^2 once, which a Monte
    # Carlo cross-check confirms
    c = 2 * k * b / (2 * p.mu + p.sigma**2 - p.eta**2 + 2 * k)
    d = 2 * k * (x_prev * y_prev - b) / (p.mu - p.eta**2 + k + ser)
    mean_y2 = c * e_fast + d * e_cross + (y_prev**2 - c - d) * np.exp(
        (p.eta**2 - 2 * k) * dt
    )
    return mean_y, mean_xy, mean_y2, a, b, c, d


def raw_moments(
    params: CointelationParams, x_prev: float, y_prev: float, dt: float
) -> RawMoments:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if x_prev <= 0 or y_prev <= 0:
        raise ValueError("conditioning prices must be positive")
    check_denominators(params)
    mean_y, mean_xy, mean_y2, a, b, c, d = _raw_moment_values(
        params, float(x_prev), float(y_prev), float(dt)
    )
    return RawMoments(
        mean_y=float(mean_y),
        mean_xy=float(mean_xy),
        mean_y2=float(mean_y2),
        a=float(a),
        b=float(b),
        c=float(c),
        d=float(d),
    )


def _return_stat_values(params, x_prev, y_prev, dt):
    """Lemma-style return statistics; array-friendly. Returns
    (e_rx, e_ry, var_rx, var_ry, cov_rxy, raw tuple, flagged)."""
    p = params
    mean_y, mean_xy, mean_y2, a, b, c, d = _raw_moment_values(params, x_prev, y_prev, dt)
    e_rx = (p.mu - 0.5 * p.sigma**2) * dt
    var_rx = p.sigma**2 * dt

    e_ry = np.log(mean_y / y_prev) - mean_y2 / (2.0 * mean_y**2) + 0.5
    var_ry = mean_y2 / mean_y**2 - 1.0
    mean_x = x_prev * np.exp(p.mu * dt)
    cov_rxy = np.log(mean_xy / (mean_x * mean_y))

    with np.errstate(invalid="ignore"):
        bound = np.sqrt(np.maximum(var_rx * var_ry, 0.0))
        flagged = (var_ry <= 0.0) | (np.abs(cov_rxy) > bound + 1e-9)
    return e_rx, e_ry, var_rx, var_ry, cov_rxy, (mean_y, mean_xy, mean_y2, a, b, c, d), flagged


def return_moments(
    params: CointelationParams, x_prev: float, y_prev: float, dt: float
) -> MomentSet:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if x_prev <= 0 or y_prev <= 0:
        raise ValueError("conditioning prices must be positive")
    check_denominators(params)
    e_rx, e_ry, var_rx, var_ry, cov_rxy, raw, flagged = _return_stat_values(
        params, float(x_prev), float(y_prev), float(dt)
    )
    mean_y, mean_xy, mean_y2, a, b, c, d = raw
    return MomentSet(
        e_rx=float(e_rx),
        e_ry=float(e_ry),
        var_rx=float(var_rx),
        var_ry=float(var_ry),
        cov_rxy=float(cov_rxy),
        mean_y=float(mean_y),
        mean_xy=float(mean_xy),
        mean_y2=float(mean_y2),
        a=float(a),
        b=float(b),
        c=float(c),
        d=float(d),
        dt=float(dt),
        x_prev=float(x_prev),
        y_prev=float(y_prev),
        flagged=bool(flagged),
    )


@dataclass(frozen=True)
class EmpiricalMoments:
    """Monte Carlo moment estimates with standard errors."""

    mean_y: float
    se_mean_y: float
    mean_xy: float
    se_mean_xy: float
    mean_y2: float
    se_mean_y2: float
    e_rx: float
    se_e_rx: float
    e_ry: float
    se_e_ry: float
    var_rx: float
    se_var_rx: float
    var_ry: float
    se_var_ry: float
    cov_rxy: float
    se_cov_rxy: float
    n_paths: int


def mc_moment_oracle(
    params: CointelationParams,
    x_prev: float,
    y_prev: float,
    dt: float,
    n_paths: int,
    seed: int = 0,
    substeps: int = 64,
) -> EmpiricalMoments:
    """Fine-substep Monte Carlo estimate of the one-step moments.

    Same discretization as the path simulator (exact X, Euler Y with floor),
    vectorized across paths; independent of the closed-form route.
    """
    if n_paths < 1000:
        raise ValueError("n_paths must be >= 1000")
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    h = dt / substeps
    sqrt_h = math.sqrt(h)
    rho = params.rho
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    kappa_eff = params.kappa * TRADING_DAYS
    y_floor = Y_FLOOR_FRACTION * params.y0

    x = np.full(n_paths, float(x_prev))
    y = np.full(n_paths, float(y_prev))
    for _ in range(substeps):
        z = rng.standard_normal((2, n_paths))
        dw = z[0]
        dw_t = rho * dw + rho_c * z[1]
        y_new = y + kappa_eff * (x - y) * h + params.eta * y * sqrt_h * dw_t
        np.maximum(y_new, y_floor, out=y_new)
        x = x * np.exp((params.mu - 0.5 * params.sigma**2) * h + params.sigma * sqrt_h * dw)
        y = y_new

    def mean_se(v):
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0

    rx = np.log(x / x_prev)
    ry = np.log(y / y_prev)
    m_y, se_y = mean_se(y)
    m_xy, se_xy = mean_se(x * y)
    m_y2, se_y2 = mean_se(y * y)
    m_rx, se_rx = mean_se(rx)
    m_ry, se_ry = mean_se(ry)

    dx = rx - rx.mean()
    dy = ry - ry.mean()
    var_rx, se_var_rx = mean_se(dx * dx)
    var_ry, se_var_ry = mean_se(dy * dy)
    cov, se_cov = mean_se(dx * dy)

    return EmpiricalMoments(
        mean_y=m_y,
        se_mean_y=se_y,
        mean_xy=m_xy,
        se_mean_xy=se_xy,
        mean_y2=m_y2,
        se_mean_y2=se_y2,
        e_rx=m_rx,
        se_e_rx=se_rx,
        e_ry=m_ry,
        se_e_ry=se_ry,
        var_rx=var_rx,
        se_var_rx=se_var_rx,
        var_ry=var_ry,
        se_var_ry=se_var_ry,
        cov_rxy=cov,
        se_cov_rxy=se_cov,
        n_paths=n_paths,
    )
