"""Cointelated pairs toolkit: simulation, moments, HJB control, backtests."""

from cointelab.sim import CointelationParams, PathPair

__all__ = ["CointelationParams", "PathPair"]
__version__ = "0.1.0"
