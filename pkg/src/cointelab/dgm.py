"""Deep Galerkin training loop over pluggable PDE problems.

Each training step draws fresh uniform points in the (t, z) domain, forms
the mean squared PDE residual plus the mean squared terminal (and optional
boundary) mismatch, and takes one plain SGD step with an exponentially
decaying learning rate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from cointelab import net as netmod
from cointelab.autodiff import Tensor
from cointelab.net import DGMNetwork, InputNorm, ParamGradient
from cointelab.sim import CointelationParams, DAILY_DT, TRADING_DAYS, simulate_pair_batch

#: Default cap on the pairs leg |pi|. With a per-day reversion weight the
#: annualized spread drift is enormous a fraction of a percent away from
#: z = 1, so the unclamped optimum is railed almost everywhere and the cap
#: acts as the strategy's leverage budget. 0.6 keeps the pairs book's
#: return scale comparable to the unit-budget long-only strategies it is
#: benchmarked against; at much larger caps its compounding dwarfs them and
#: cross-strategy comparisons degenerate into leverage comparisons.
DEFAULT_PI_MAX = 0.6


class DegenerateProblemError(ValueError):
    """The pairs diffusion coefficient vanished; the PDE is ill-posed."""


class LossEvaluationError(RuntimeError):
    """A residual came out non-finite at a sampled point."""


class SurrogateEvaluationError(RuntimeError):
    """The surrogate value is too close to zero to divide by."""


@dataclass(frozen=True)
class PDEProblem:
    """Residual + terminal data on a rectangle [0, T] x [z_lo, z_hi]."""

    residual: Callable  # (t, z, f, f_t, f_z, f_zz) -> residual, tape-friendly
    terminal_value: Callable  # z -> target f(T, z)
    t_range: tuple
    z_range: tuple
    boundary_z: Optional[float] = None
    boundary_value: Optional[Callable] = None  # t -> target f(t, boundary_z)
    interior_weight: float = 1.0
    terminal_weight: float = 1.0
    boundary_weight: float = 0.0

    def __post_init__(self):
        if self.t_range[1] <= self.t_range[0]:
            raise ValueError("need t_range[1] > t_range[0]")
        if self.z_range[1] <= self.z_range[0]:
            raise ValueError("need z_range[1] > z_range[0]")

    def input_norm(self) -> InputNorm:
        # map the domain to [-1, 1]^2; tanh layers train best centered
        return InputNorm(
            t_shift=0.5 * (self.t_range[0] + self.t_range[1]),
            t_scale=0.5 * (self.t_range[1] - self.t_range[0]),
            z_shift=0.5 * (self.z_range[0] + self.z_range[1]),
            z_scale=0.5 * (self.z_range[1] - self.z_range[0]),
        )


@dataclass(frozen=True)
class TrainConfig:
    alpha0: float = 1e-3
    lambda_decay: float = 0.9999
    batch_interior: int = 256
    batch_terminal: int = 64
    batch_boundary: int = 32
    max_steps: int = 100_000
    tolerance: float = 1e-8
    seed: int = 0
    clip_threshold: float = 1e3

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if not 0.0 < self.lambda_decay < 1.0:
            raise ValueError("lambda_decay must lie in (0, 1)")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.batch_interior < 1 or self.batch_terminal < 1:
            raise ValueError("batch sizes must be >= 1")


@dataclass
class TrainReport:
    steps_run: int
    final_loss: float
    loss_history: list
    wall_time: float
    clip_events: int
    skipped_steps: int
    converged: bool
    diverged: bool = False


@dataclass(frozen=True)
class Batch:
    t_interior: np.ndarray
    z_interior: np.ndarray
    z_terminal: np.ndarray
    t_boundary: np.ndarray


def sample_batch(problem: PDEProblem, config: TrainConfig, step_index: int) -> Batch:
    """Uniform draws over the domain, deterministic per (seed, step_index)."""
    rng = np.random.default_rng([config.seed, step_index])
    t0, t1 = problem.t_range
    z0, z1 = problem.z_range
    t_int = rng.uniform(t0, t1, size=config.batch_interior)
    z_int = rng.uniform(z0, z1, size=config.batch_interior)
    z_term = rng.uniform(z0, z1, size=config.batch_terminal)
    if problem.boundary_z is not None and problem.boundary_weight > 0:
        t_bnd = rng.uniform(t0, t1, size=config.batch_boundary)
    else:
        t_bnd = np.empty(0)
    return Batch(t_interior=t_int, z_interior=z_int, z_terminal=z_term, t_boundary=t_bnd)


def _loss_graph(theta, n_layers, norm, problem, batch, surrogate=None):
    """Builds the loss; theta entries may be Tensors or arrays.

    ``surrogate`` overrides the jet evaluation (used by closed-form oracles
    that expose forward_with_input_derivs)."""
    if surrogate is None:
        jets = netmod.evaluate_jets(theta, n_layers, batch.t_interior, batch.z_interior, norm)
        f, ft, fz, fzz = jets.v, jets.dt, jets.dz, jets.dzz
    else:
        ev = surrogate.forward_with_input_derivs(batch.t_interior, batch.z_interior)
        f, ft, fz, fzz = (
            np.reshape(ev.f, (-1, 1)),
            np.reshape(ev.f_t, (-1, 1)),
            np.reshape(ev.f_z, (-1, 1)),
            np.reshape(ev.f_zz, (-1, 1)),
        )
    t_col = batch.t_interior.reshape(-1, 1)
    z_col = batch.z_interior.reshape(-1, 1)
    r = problem.residual(t_col, z_col, f, ft, fz, fzz)
    r_val = r.value if isinstance(r, Tensor) else np.asarray(r)
    if not np.all(np.isfinite(r_val)):
        bad = int(np.argmax(~np.isfinite(r_val.ravel())))
        raise LossEvaluationError(
            f"non-finite residual at point (t={batch.t_interior[bad]}, z={batch.z_interior[bad]})"
        )
    loss = problem.interior_weight * (r * r).mean()

    t_end = problem.t_range[1]
    if surrogate is None:
        term_jets = netmod.evaluate_jets(
            theta, n_layers, np.full_like(batch.z_terminal, t_end), batch.z_terminal, norm
        )
        f_term = term_jets.v
    else:
        f_term = np.reshape(
            surrogate.forward_with_input_derivs(
                np.full_like(batch.z_terminal, t_end), batch.z_terminal
            ).f,
            (-1, 1),
        )
    g = np.asarray(problem.terminal_value(batch.z_terminal), dtype=float).reshape(-1, 1)
    mismatch = f_term - g
    loss = loss + problem.terminal_weight * (mismatch * mismatch).mean()

    if len(batch.t_boundary) > 0:
        if surrogate is None:
            bnd_jets = netmod.evaluate_jets(
                theta,
                n_layers,
                batch.t_boundary,
                np.full_like(batch.t_boundary, problem.boundary_z),
                norm,
            )
            f_bnd = bnd_jets.v
        else:
            f_bnd = np.reshape(
                surrogate.forward_with_input_derivs(
                    batch.t_boundary, np.full_like(batch.t_boundary, problem.boundary_z)
                ).f,
                (-1, 1),
            )
        gb = np.asarray(problem.boundary_value(batch.t_boundary), dtype=float).reshape(-1, 1)
        bm = f_bnd - gb
        loss = loss + problem.boundary_weight * (bm * bm).mean()
    return loss


def loss(model, problem: PDEProblem, batch: Batch, with_grad: bool = True):
    """Loss value and exact parameter gradient for one batch.

    ``model`` is normally a DGMNetwork; any object exposing
    ``forward_with_input_derivs(t, z)`` works for value-only evaluation.
    """
    if isinstance(model, DGMNetwork):
        if with_grad:
            params = {k: Tensor(v) for k, v in model.theta.items()}
            out = _loss_graph(params, model.n_layers, model.norm, problem, batch)
            out.backward()
            grads = {
                k: (p.grad if p.grad is not None else np.zeros_like(p.value))
                for k, p in params.items()
            }
            return float(out.value), ParamGradient(grads=grads, value=float(out.value))
        out = _loss_graph(model.theta, model.n_layers, model.norm, problem, batch)
        return float(out), None
    out = _loss_graph(None, None, None, problem, batch, surrogate=model)
    return float(out), None


def train(network: DGMNetwork, problem: PDEProblem, config: TrainConfig):
    """Algorithm-style loop: sample, evaluate squared errors, descend."""
    network.norm = problem.input_norm()
    start = time.perf_counter()
    history = []
    stride = max(1, config.max_steps // 1000)
    clip_events = 0
    skipped = 0
    diverged_streak = 0
    diverged = False
    converged = False
    current = math.inf
    steps = 0
    for n in range(config.max_steps):
        batch = sample_batch(problem, config, n)
        current, grad = loss(network, problem, batch, with_grad=True)
        if n % stride == 0:
            history.append((n, current))
        steps = n + 1
        if current <= config.tolerance:
            converged = True
            break
        if current > 1e6:
            diverged_streak += 1
            if diverged_streak >= 100:
                diverged = True
                break
        else:
            diverged_streak = 0
        gnorm = netmod.gradient_norm(grad.grads)
        if gnorm > config.clip_threshold:
            scale = config.clip_threshold / gnorm
            grad = ParamGradient(
                grads={k: g * scale for k, g in grad.grads.items()}, value=grad.value
            )
            clip_events += 1
        alpha = config.alpha0 * config.lambda_decay**n
        if not netmod.sgd_step(network, grad, alpha):
            skipped += 1
    if not history or history[-1][0] != steps - 1:
        history.append((steps - 1 if steps else 0, current))
    report = TrainReport(
        steps_run=steps,
        final_loss=float(current),
        loss_history=history,
        wall_time=time.perf_counter() - start,
        clip_events=clip_events,
        skipped_steps=skipped,
        converged=converged,
        diverged=diverged,
    )
    return network, report


def interior_residual_rms(model, problem: PDEProblem, n_points: int = 4096, seed: int = 12345) -> float:
    """Root-mean-square residual on a held-out uniform sample."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(*problem.t_range, size=n_points)
    z = rng.uniform(*problem.z_range, size=n_points)
    ev = netmod.forward_with_input_derivs(model, t, z)
    r = problem.residual(t, z, ev.f, ev.f_t, ev.f_z, ev.f_zz)
    return float(np.sqrt(np.mean(np.asarray(r) ** 2)))


def _positive_part(x):
    """relu for residual penalties; works on Tensors and arrays."""
    if isinstance(x, Tensor):
        return x * (x.value > 0.0).astype(float)
    return np.maximum(np.asarray(x, dtype=float), 0.0)


# -- Merton benchmark --------------------------------------------------------


def merton_problem(
    mu: float, sigma: float, gamma: float, T: float, x_range: tuple = (0.25, 2.0)
) -> PDEProblem:
    """HJB for power utility with a single risky asset and zero rate.

    After substituting the optimal control the equation reads
    V_t = mu^2 V_x^2 / (2 sigma^2 V_xx); multiplying through by V_xx keeps
    the residual free of divisions (same zero set away from V_xx = 0) but
    admits a spurious convex branch, so a positive-part penalty on f_zz
    enforces the concavity the optimization step assumed (the sup over the
    control is only attained for V_xx < 0). The x = 0 boundary pins
    V(t, 0) = 0.

    The division-free form blows up like x^(2 gamma - 3) as x -> 0 (the
    power-utility surface has unbounded derivatives there), so the residual
    carries an x^2 weight — same zero set for x > 0 — which keeps the
    interior loss balanced across the domain. That makes training domains
    that reach toward the natural x = 0 boundary workable; anchoring the
    left edge that way is what pins the solution there, because on a strip
    away from zero the terminal data alone does not determine the solution
    up to the edge.
    """
    if not (gamma < 1 and gamma != 0):
        raise ValueError("need gamma < 1, gamma != 0")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    coef = mu**2 / (2.0 * sigma**2)

    def residual(t, z, f, f_t, f_z, f_zz):
        zz = np.asarray(z, dtype=float) ** 2
        return (f_t * f_zz - coef * (f_z * f_z)) * zz + 5.0 * _positive_part(f_zz)

    return PDEProblem(
        residual=residual,
        terminal_value=lambda z: np.asarray(z, dtype=float) ** gamma / gamma,
        t_range=(0.0, T),
        z_range=x_range,
        boundary_z=0.0,
        boundary_value=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        boundary_weight=1.0,
    )


def merton_analytic(t, x, mu: float, sigma: float, gamma: float, T: float):
    """Closed-form value surface, independent of the trainer."""
    c = gamma * mu**2 / (2.0 * sigma**2 * (1.0 - gamma))
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    out = (x**gamma / gamma) * np.exp(c * (T - t))
    return float(out) if out.ndim == 0 else out


# -- reduced pairs HJB -------------------------------------------------------


def default_z_range(
    params: CointelationParams, horizon: float, seed: int = 0, n_paths: int = 16
) -> tuple:
    """Quantile band of simulated price ratios Z = X / Y, padded 10%."""
    paths = simulate_pair_batch(params, horizon, n_paths, dt=DAILY_DT, substeps=2, root_seed=seed)
    ratios = np.concatenate([p.x / p.y for p in paths])
    lo, hi = np.quantile(ratios, [0.005, 0.995])
    pad = 0.1 * (hi - lo)
    return float(lo - pad), float(hi + pad)


def cointelation_pde_problem(
    params: CointelationParams,
    gamma: float,
    horizon: float = 1000 * DAILY_DT,
    z_range: Optional[tuple] = None,
    seed: int = 0,
) -> PDEProblem:
    """Reduced two-variable HJB for the pairs-trading value surrogate."""
    if not (gamma < 1 and gamma != 0):
        raise ValueError("need gamma < 1, gamma != 0")
    st = params.sigma_tilde
    if st <= 0:
        raise DegenerateProblemError("sigma^2 - 2 sigma eta rho + eta^2 must be positive")
    if z_range is None:
        z_range = default_z_range(params, horizon, seed=seed)
    mu = params.mu
    kappa = params.kappa * TRADING_DAYS  # per-year reversion rate
    eta, sig, rho = params.eta, params.sigma, params.rho
    gm1 = gamma - 1.0

    def residual(t, z, f, f_t, f_z, f_zz):
        drift = mu - kappa * (z - 1.0)
        ratio_drift = mu + eta**2 - sig * eta * rho - kappa * (z - 1.0)
        return (
            st * gm1 * (f * f_t)
            - 0.5 * st**2 * gamma * (z * z) * (f_z * f_z)
            - 0.5 * gamma * (drift * drift) * (f * f)
            + 0.5 * st * gm1 * (z * z) * (f * f_zz)
            - st * gamma * (drift * z) * (f * f_z)
            + st * gm1 * (ratio_drift * z) * (f * f_z)
        )

    return PDEProblem(
        residual=residual,
        terminal_value=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        t_range=(0.0, horizon),
        z_range=z_range,
    )


def optimal_pi(
    model,
    t,
    z,
    params: CointelationParams,
    gamma: float,
    pi_max: float = DEFAULT_PI_MAX,
    f_floor: float = 1e-6,
):
    """Leading-leg pairs weight from the trained surrogate; the lagging leg
    is its negative."""
    st = params.sigma_tilde
    ev = netmod.forward_with_input_derivs(model, t, z)
    f = np.asarray(ev.f, dtype=float)
    if np.any(np.abs(f) < f_floor):
        raise SurrogateEvaluationError("surrogate value within f_floor of zero")
    z_arr = np.asarray(z, dtype=float)
    drift = params.mu - params.kappa * TRADING_DAYS * (z_arr - 1.0)
    pi = -z_arr * np.asarray(ev.f_z) / ((gamma - 1.0) * f) - drift / (st * (gamma - 1.0))
    pi = np.clip(pi, -pi_max, pi_max)
    return float(pi) if pi.ndim == 0 else pi
