"""Band-wise machine-learned spread strategy.

Training: split the observed spread X - Y into percentile bands, then for
each band grid-search the best of three fixed books — long/long (PP),
long/short (PM), short/long (MP) — by cumulative in-band price-increment
P&L. Live: look up the current spread's band and trade that band's book.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from cointelab.sim import PathPair

KINDS = ("PP", "PM", "MP")
DEFAULT_H = 5
DEFAULT_GRID_STEP = 0.05


class EmptyBandError(ValueError):
    """A band holds no training samples where one was required."""


@dataclass(frozen=True)
class BandSet:
    """Sorted interior edges partitioning the real line into h bands.

    Membership is left-open right-closed: band i is (edge[i-1], edge[i]],
    with the outer bands open to -inf / +inf."""

    boundaries: np.ndarray
    h: int
    requested_h: int

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if len(b) != self.h - 1:
            raise ValueError("need exactly h - 1 boundaries")
        if len(b) > 1 and not np.all(np.diff(b) > 0):
            raise ValueError("boundaries must be strictly increasing")

    def band_index(self, s):
        """Index of the band containing each spread value."""
        idx = np.searchsorted(self.boundaries, np.asarray(s, dtype=float), side="left")
        return idx if np.ndim(s) else int(idx)


@dataclass(frozen=True)
class BandStrategy:
    band: int
    kind: str  # PP, PM, or MP
    w: float
    trained_pnl: float
    trained: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must lie in [0, 1]")

    def legs(self):
        """Per-asset weights (w1, w2) of this book."""
        if not self.trained:
            return 0.0, 0.0
        if self.kind == "PP":
            return self.w, 1.0 - self.w
        if self.kind == "PM":
            return self.w, -(1.0 - self.w)
        return -self.w, 1.0 - self.w


@dataclass(frozen=True)
class BandGaussianFit:
    means: np.ndarray
    stdevs: np.ndarray
    counts: np.ndarray


def find_percentile_bands(samples, h: int) -> BandSet:
    """Edges at the order statistics that split the sorted sample into h
    near-equal-cardinality groups. Duplicate-heavy data can collapse edges;
    collapsed edges are merged and the reduced band count reported."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    if h < 1:
        raise ValueError("h must be >= 1")
    if n < h:
        raise ValueError("need at least h samples")
    edges = np.array([s[n * i // h - 1] for i in range(1, h)])
    unique = np.unique(edges)
    return BandSet(boundaries=unique, h=len(unique) + 1, requested_h=h)


def allocate_to_bands(samples, bands: BandSet):
    """Per-band lists of sample indices; every sample lands in exactly one."""
    idx = bands.band_index(np.asarray(samples, dtype=float))
    return [np.flatnonzero(idx == i) for i in range(bands.h)]


def band_gaussian_fit(samples, bands: BandSet) -> BandGaussianFit:
    s = np.asarray(samples, dtype=float)
    groups = allocate_to_bands(s, bands)
    means = np.empty(bands.h)
    stdevs = np.empty(bands.h)
    counts = np.array([len(g) for g in groups])
    for i, g in enumerate(groups):
        if len(g) == 0:
            raise EmptyBandError(f"band {i} holds no samples")
        means[i] = s[g].mean()
        stdevs[i] = s[g].std()
    return BandGaussianFit(means=means, stdevs=stdevs, counts=counts)


def _kind_pnl(kind: str, w, dx_sum: float, dy_sum: float):
    """Cumulative in-band P&L of each book; affine in w."""
    if kind == "PP":
        return w * dx_sum + (1.0 - w) * dy_sum
    if kind == "PM":
        return w * dx_sum - (1.0 - w) * dy_sum
    return -w * dx_sum + (1.0 - w) * dy_sum


def optimize_band(
    train_path: PathPair, band: int, bands: BandSet, grid_step: float = DEFAULT_GRID_STEP
):
    """Exhaustive grid search over w in [0, 1] for each of the three kinds.

    The in-band P&L is affine in w, so the argmax sits at a grid corner;
    the grid is still searched exhaustively so the result equals the
    brute-force oracle by construction. Ties break to the smallest w."""
    if grid_step <= 0 or grid_step > 0.5:
        raise ValueError("grid_step must lie in (0, 0.5]")
    spread = train_path.x[:-1] - train_path.y[:-1]
    in_band = bands.band_index(spread) == band
    dx = np.diff(train_path.x)[in_band]
    dy = np.diff(train_path.y)[in_band]
    if not in_band.any():
        return [
            BandStrategy(band=band, kind=k, w=0.5, trained_pnl=0.0, trained=False)
            for k in KINDS
        ]
    dx_sum = float(dx.sum())
    dy_sum = float(dy.sum())
    n_points = int(round(1.0 / grid_step)) + 1
    grid = np.linspace(0.0, 1.0, n_points)
    out = []
    for kind in KINDS:
        pnl = _kind_pnl(kind, grid, dx_sum, dy_sum)
        best = int(np.flatnonzero(pnl == pnl.max())[0])  # smallest w among maximizers
        out.append(
            BandStrategy(band=band, kind=kind, w=float(grid[best]), trained_pnl=float(pnl[best]))
        )
    return out


def select_best(candidates: Sequence[BandStrategy]) -> BandStrategy:
    """Highest trained P&L; ties break by kind preference PP > PM > MP."""
    if len(candidates) != 3:
        raise ValueError("expected one candidate per kind")
    ranked = sorted(candidates, key=lambda c: (-c.trained_pnl, KINDS.index(c.kind)))
    return ranked[0]


@dataclass(frozen=True)
class TrainedBands:
    bands: BandSet
    strategies: tuple  # one BandStrategy per band

    def strategy_for(self, spread_value: float) -> BandStrategy:
        return self.strategies[self.bands.band_index(float(spread_value))]


def fit_band_strategies(
    train_path: PathPair,
    h: int = DEFAULT_H,
    grid_step: float = DEFAULT_GRID_STEP,
    kinds: Optional[Sequence[str]] = None,
) -> TrainedBands:
    """End-to-end training: band the spread, optimize each band, keep the
    winner. ``kinds`` restricts the strategy alphabet (e.g. pairs-only)."""
    allowed = tuple(kinds) if kinds is not None else KINDS
    for k in allowed:
        if k not in KINDS:
            raise ValueError(f"unknown kind {k!r}")
    spread = train_path.x - train_path.y
    bands = find_percentile_bands(spread[:-1], h)
    chosen = []
    for band in range(bands.h):
        cands = optimize_band(train_path, band, bands, grid_step=grid_step)
        cands = [c for c in cands if c.kind in allowed]
        if not cands[0].trained:
            chosen.append(cands[0])
            continue
        ranked = sorted(cands, key=lambda c: (-c.trained_pnl, KINDS.index(c.kind)))
        chosen.append(ranked[0])
    return TrainedBands(bands=bands, strategies=tuple(chosen))


class BandRule:
    """Causal weight rule for the backtest engine: look up the live
    spread's band and emit that band's legs; untrained bands go flat."""

    def __init__(self, trained: TrainedBands):
        self.trained = trained

    def __call__(self, k, x_prefix, y_prefix):
        s = float(x_prefix[-1] - y_prefix[-1])
        return self.trained.strategy_for(s).legs()

    def weights_for_path(self, path: PathPair):
        spread = path.x[:-1] - path.y[:-1]
        idx = self.trained.bands.band_index(spread)
        legs = np.array([s.legs() for s in self.trained.strategies])
        w = legs[idx]
        return w[:, 0], w[:, 1]


def live_strategy(trained: TrainedBands) -> BandRule:
    return BandRule(trained)


def forecast_signals(trained: TrainedBands, x: float, y: float):
    """Map the live legs to per-asset (buy / sell / hold) signals."""

    def signal(w):
        if w > 0:
            return "buy"
        if w < 0:
            return "sell"
        return "hold"

    w1, w2 = trained.strategy_for(float(x) - float(y)).legs()
    return signal(w1), signal(w2)


def strategies_to_text(trained: TrainedBands) -> str:
    """Plain-text table: band_lo, band_hi, kind, w, trained_pnl, flag."""
    edges = np.concatenate([[-np.inf], trained.bands.boundaries, [np.inf]])
    lines = ["band_lo\tband_hi\tkind\tw\ttrained_pnl\tflag"]
    for i, s in enumerate(trained.strategies):
        flag = "trained" if s.trained else "untrained"
        lines.append(
            f"{float(edges[i])!r}\t{float(edges[i + 1])!r}\t{s.kind}\t"
            f"{s.w!r}\t{s.trained_pnl!r}\t{flag}"
        )
    return "\n".join(lines) + "\n"
