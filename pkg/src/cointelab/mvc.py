"""Mean-variance utility and closed-form optimal weights for the two-asset pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cointelab.moments import MomentSet

DEFAULT_TAU = 0.5
_MAX_CONDITION = 1e12


class SingularCovarianceError(ValueError):
    """Covariance matrix is not invertible enough to produce weights."""


class FlaggedMomentError(ValueError):
    """MomentSet carries a flagged Taylor output; fall back to MC moments."""


@dataclass(frozen=True)
class MVCWeights:
    h1: float
    h2: float
    clipped: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.h1, self.h2])


def covariance_matrix(m: MomentSet) -> np.ndarray:
    if m.flagged:
        raise FlaggedMomentError(
            "moment set is flagged; recompute with the MC oracle before optimizing"
        )
    return np.array([[m.var_rx, m.cov_rxy], [m.cov_rxy, m.var_ry]])


def mvc_weights(mean_vector, cov, tau: float = DEFAULT_TAU) -> MVCWeights:
    """Closed-form mean-variance optimum on the budget line, projected
    onto the long-only simplex when the unconstrained solution leaves it."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    m = np.asarray(mean_vector, dtype=float)
    s = np.asarray(cov, dtype=float)
    if s.shape != (2, 2) or m.shape != (2,):
        raise ValueError("expected a 2-vector of means and a 2x2 covariance")
    if np.linalg.cond(s) >= _MAX_CONDITION:
        raise SingularCovarianceError("covariance matrix is numerically singular")
    e = np.ones(2)
    s_inv_e = np.linalg.solve(s, e)
    s_inv_m = np.linalg.solve(s, m)
    denom = e @ s_inv_e
    h = s_inv_e / denom + tau * (s_inv_m - (e @ s_inv_m) / denom * s_inv_e)
    h1 = float(h[0])
    clipped = h1 < 0.0 or h1 > 1.0
    h1 = min(1.0, max(0.0, h1))
    return MVCWeights(h1=h1, h2=1.0 - h1, clipped=clipped)


def mvc_utility(h, mean_vector, cov, tau: float = DEFAULT_TAU) -> float:
    """2 tau h'M - h' Sigma h."""
    h = np.asarray(h, dtype=float)
    m = np.asarray(mean_vector, dtype=float)
    s = np.asarray(cov, dtype=float)
    return float(2.0 * tau * (h @ m) - h @ s @ h)
