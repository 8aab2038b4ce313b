"""Self-financing wealth evolution on simulated paths and the strategies
that drive it: per-step mean-variance weights, the PDE-surrogate pairs
weights, and the dynamic switch between the two.

Wealth compounds multiplicatively, V_{k+1} = V_k (1 + w1 R_X + w2 R_Y),
with one-step simple returns; if a pairs book is wiped out the wealth is
floored at zero and trading halts for the rest of the path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cointelab import dgm as dgmmod
from cointelab import mvc as mvcmod
from cointelab import net as netmod
from cointelab.moments import (
    ParameterDegeneracyError,
    check_denominators,
    mc_moment_oracle,
    _return_stat_values,
)
from cointelab.mvc import DEFAULT_TAU
from cointelab.sim import CointelationParams, DAILY_DT, PathPair

STRATEGY_KINDS = ("MVC", "SC", "DS", "BandML", "fixed-weights")


@dataclass(frozen=True)
class StrategyTrace:
    """One strategy's life on one path: weights held over each step and the
    resulting wealth at each grid time."""

    times: np.ndarray
    w1: np.ndarray  # length n_steps
    w2: np.ndarray
    wealth: np.ndarray  # length n_steps + 1
    label: str

    def __post_init__(self):
        n = len(self.times)
        if len(self.wealth) != n or len(self.w1) != n - 1 or len(self.w2) != n - 1:
            raise ValueError("trace lengths inconsistent")
        if self.wealth[0] <= 0:
            raise ValueError("initial wealth must be positive")

    @property
    def pnl(self) -> np.ndarray:
        return self.wealth - self.wealth[0]

    @property
    def halted(self) -> bool:
        return bool(self.wealth[-1] == 0.0)


def portfolio_return(trace: StrategyTrace) -> float:
    """Fractional gain over the horizon, (V(T) - V(0)) / V(0)."""
    if len(trace.wealth) == 0:
        raise ValueError("empty trace")
    return float((trace.wealth[-1] - trace.wealth[0]) / trace.wealth[0])


def wealth_from_growth(growth: np.ndarray, v0: float) -> np.ndarray:
    """Compound step growth factors, flooring at zero and halting on ruin."""
    wealth = np.empty(len(growth) + 1)
    wealth[0] = v0
    wealth[1:] = v0 * np.cumprod(growth)
    ruined = wealth <= 0.0
    if ruined.any():
        wealth[np.argmax(ruined):] = 0.0
    return wealth


def trace_from_weights(path: PathPair, w1, w2, v0: float, label: str) -> StrategyTrace:
    """Fast path when the whole weight schedule is known up front."""
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    rx = np.diff(path.x) / path.x[:-1]
    ry = np.diff(path.y) / path.y[:-1]
    growth = 1.0 + w1 * rx + w2 * ry
    wealth = wealth_from_growth(growth, v0)
    if wealth.min() == 0.0:
        # zero out the weights past the halt for reporting honesty
        halt = int(np.argmax(wealth == 0.0)) - 1
        w1 = w1.copy()
        w2 = w2.copy()
        w1[halt + 1:] = 0.0
        w2[halt + 1:] = 0.0
    return StrategyTrace(times=path.times, w1=w1, w2=w2, wealth=wealth, label=label)


def run_strategy(path: PathPair, weight_rule, v0: float, label: str = "fixed-weights") -> StrategyTrace:
    """Step the wealth recursion under a causal rule.

    The rule sees only (step index, x prices so far, y prices so far) — the
    interface itself withholds the future.
    """
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    n_steps = len(path.times) - 1
    w1 = np.zeros(n_steps)
    w2 = np.zeros(n_steps)
    wealth = np.empty(n_steps + 1)
    wealth[0] = v0
    halted = False
    for k in range(n_steps):
        if halted:
            wealth[k + 1] = 0.0
            continue
        a, b = weight_rule(k, path.x[: k + 1], path.y[: k + 1])
        w1[k], w2[k] = float(a), float(b)
        rx = path.x[k + 1] / path.x[k] - 1.0
        ry = path.y[k + 1] / path.y[k] - 1.0
        v = wealth[k] * (1.0 + w1[k] * rx + w2[k] * ry)
        if v <= 0.0:
            v = 0.0
            halted = True
            w1[k + 1:] = 0.0
            w2[k + 1:] = 0.0
        wealth[k + 1] = v
    return StrategyTrace(times=path.times, w1=w1, w2=w2, wealth=wealth, label=label)


# -- mean-variance rule ------------------------------------------------------


def _mvc_weight_values(params: CointelationParams, x, y, tau: float, dt: float):
    """Closed-form simplex-projected weights; array-friendly.

    Returns (h1, clipped mask, flagged mask). Flagged entries are computed
    anyway but should be replaced by an MC fallback by the caller."""
    e_rx, e_ry, var_rx, var_ry, cov, _, flagged = _return_stat_values(params, x, y, dt)
    det = var_rx * var_ry - cov * cov
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_e1 = (var_ry - cov) / det
        inv_e2 = (var_rx - cov) / det
        e_sinv_e = inv_e1 + inv_e2
        inv_m1 = (var_ry * e_rx - cov * e_ry) / det
        inv_m2 = (var_rx * e_ry - cov * e_rx) / det
        e_sinv_m = inv_m1 + inv_m2
        h1 = inv_e1 / e_sinv_e + tau * (inv_m1 - e_sinv_m / e_sinv_e * inv_e1)
    clipped = (h1 < 0.0) | (h1 > 1.0)
    h1 = np.clip(h1, 0.0, 1.0)
    bad = ~np.isfinite(h1)
    flagged = flagged | bad
    h1 = np.where(bad, 0.5, h1)
    return h1, clipped, flagged


class MVCRule:
    """Per-step mean-variance weights conditioned on current prices.

    Flagged closed-form moments fall back to a Monte Carlo moment estimate;
    fallbacks are counted on the rule."""

    def __init__(
        self,
        params: CointelationParams,
        tau: float = DEFAULT_TAU,
        dt: float = DAILY_DT,
        fallback_paths: int = 2000,
        fallback_seed: int = 0,
    ):
        check_denominators(params)
        self.params = params
        self.tau = tau
        self.dt = dt
        self.fallback_paths = fallback_paths
        self.fallback_seed = fallback_seed
        self.fallback_events = 0
        self.clip_events = 0

    def _fallback(self, x: float, y: float):
        emp = mc_moment_oracle(
            self.params, x, y, self.dt, self.fallback_paths, seed=self.fallback_seed, substeps=8
        )
        mean = np.array([emp.e_rx, emp.e_ry])
        cov = np.array([[emp.var_rx, emp.cov_rxy], [emp.cov_rxy, emp.var_ry]])
        w = mvcmod.mvc_weights(mean, cov, self.tau)
        return w.h1, w.h2

    def __call__(self, k, x_prefix, y_prefix):
        x, y = float(x_prefix[-1]), float(y_prefix[-1])
        h1, clipped, flagged = _mvc_weight_values(self.params, x, y, self.tau, self.dt)
        if flagged:
            self.fallback_events += 1
            return self._fallback(x, y)
        if clipped:
            self.clip_events += 1
        return float(h1), 1.0 - float(h1)

    def weights_for_path(self, path: PathPair):
        """Whole-path schedule; identical arithmetic to the per-step call
        except that flagged steps keep the closed-form value (the caller can
        re-run those steps through the scalar rule if any are flagged)."""
        x = path.x[:-1]
        y = path.y[:-1]
        h1, clipped, flagged = _mvc_weight_values(self.params, x, y, self.tau, self.dt)
        if flagged.any():
            for k in np.flatnonzero(flagged):
                self.fallback_events += 1
                h1_k, _ = self._fallback(float(x[k]), float(y[k]))
                h1[k] = h1_k
        self.clip_events += int(np.count_nonzero(clipped & ~flagged))
        return h1, 1.0 - h1


def mvc_strategy(params: CointelationParams, tau: float = DEFAULT_TAU, dt: float = DAILY_DT) -> MVCRule:
    return MVCRule(params, tau=tau, dt=dt)


# -- stochastic-control rule -------------------------------------------------


class SCRule:
    """Pairs weights (pi, -pi) from a trained PDE surrogate evaluated at
    (t, z = X/Y). Evaluation faults emit a flat (0, 0) step and are counted."""

    def __init__(
        self,
        model: netmod.DGMNetwork,
        params: CointelationParams,
        gamma: float,
        dt: float = DAILY_DT,
        pi_max: float = dgmmod.DEFAULT_PI_MAX,
    ):
        self.model = model
        self.params = params
        self.gamma = gamma
        self.dt = dt
        self.pi_max = pi_max
        self.error_events = 0

    def __call__(self, k, x_prefix, y_prefix):
        t = k * self.dt
        z = float(x_prefix[-1] / y_prefix[-1])
        try:
            pi = dgmmod.optimal_pi(
                self.model, t, z, self.params, self.gamma, pi_max=self.pi_max
            )
        except dgmmod.SurrogateEvaluationError:
            self.error_events += 1
            return 0.0, 0.0
        return float(pi), -float(pi)

    def weights_for_path(self, path: PathPair):
        t = path.times[:-1]
        z = path.x[:-1] / path.y[:-1]
        try:
            pi = dgmmod.optimal_pi(
                self.model, t, z, self.params, self.gamma, pi_max=self.pi_max
            )
        except dgmmod.SurrogateEvaluationError:
            # rare: retry pointwise so only the offending steps go flat
            pi = np.empty(len(t))
            for k in range(len(t)):
                try:
                    pi[k] = dgmmod.optimal_pi(
                        self.model, t[k], z[k], self.params, self.gamma, pi_max=self.pi_max
                    )
                except dgmmod.SurrogateEvaluationError:
                    self.error_events += 1
                    pi[k] = 0.0
        return np.asarray(pi, dtype=float), -np.asarray(pi, dtype=float)


def sc_strategy(
    model: netmod.DGMNetwork,
    params: CointelationParams,
    gamma: float,
    dt: float = DAILY_DT,
    pi_max: float = dgmmod.DEFAULT_PI_MAX,
) -> SCRule:
    return SCRule(model, params, gamma, dt=dt, pi_max=pi_max)


# -- dynamic switching -------------------------------------------------------


class DynamicSwitchRule:
    """Run two shadow books from the same v0 and, step by step, trade
    whichever is currently richer; ties go to the first (pairs) book."""

    def __init__(self, rule_a, rule_b, v0: float = 1.0):
        self.rule_a = rule_a
        self.rule_b = rule_b
        self.v0 = v0
        self._wealth_a = v0
        self._wealth_b = v0
        self._prev_a = None
        self._prev_b = None
        self.switches = 0
        self._last_choice = None

    def __call__(self, k, x_prefix, y_prefix):
        if k > 0 and self._prev_a is not None:
            rx = x_prefix[-1] / x_prefix[-2] - 1.0
            ry = y_prefix[-1] / y_prefix[-2] - 1.0
            if self._wealth_a > 0:
                self._wealth_a = max(
                    0.0, self._wealth_a * (1.0 + self._prev_a[0] * rx + self._prev_a[1] * ry)
                )
            if self._wealth_b > 0:
                self._wealth_b = max(
                    0.0, self._wealth_b * (1.0 + self._prev_b[0] * rx + self._prev_b[1] * ry)
                )
        wa = self.rule_a(k, x_prefix, y_prefix)
        wb = self.rule_b(k, x_prefix, y_prefix)
        self._prev_a, self._prev_b = wa, wb
        choice = "a" if self._wealth_a >= self._wealth_b else "b"
        if self._last_choice is not None and choice != self._last_choice:
            self.switches += 1
        self._last_choice = choice
        return wa if choice == "a" else wb


def dynamic_switching(rule_sc, rule_mvc, v0: float = 1.0) -> DynamicSwitchRule:
    return DynamicSwitchRule(rule_sc, rule_mvc, v0=v0)


def switch_weights(w_a, w_b, rx, ry, v0: float = 1.0):
    """Array form of the switching rule given both full weight schedules.

    w_a and w_b are (n, 2) arrays; returns the chosen (n, 2) schedule and
    the boolean mask of steps where the first book was in charge."""
    w_a = np.asarray(w_a, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    growth_a = 1.0 + w_a[:, 0] * rx + w_a[:, 1] * ry
    growth_b = 1.0 + w_b[:, 0] * rx + w_b[:, 1] * ry
    shadow_a = wealth_from_growth(growth_a, v0)[:-1]
    shadow_b = wealth_from_growth(growth_b, v0)[:-1]
    use_a = shadow_a >= shadow_b
    chosen = np.where(use_a[:, None], w_a, w_b)
    return chosen, use_a


def trace_to_text(trace: StrategyTrace) -> str:
    """Delimited-text export: step, time, w1, w2, V, pnl, label."""
    lines = ["step\ttime\tw1\tw2\tV\tpnl\tlabel"]
    pnl = trace.pnl
    for k in range(len(trace.times)):
        w1 = repr(float(trace.w1[k])) if k < len(trace.w1) else ""
        w2 = repr(float(trace.w2[k])) if k < len(trace.w2) else ""
        lines.append(
            f"{k}\t{float(trace.times[k])!r}\t{w1}\t{w2}\t"
            f"{float(trace.wealth[k])!r}\t{float(pnl[k])!r}\t{trace.label}"
        )
    return "\n".join(lines) + "\n"
