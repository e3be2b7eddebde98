"""Proportional-fair RB scheduler."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidParameter


class PfScheduler:
    """Per-RB argmax of instantaneous over average rate.

    Averages are smoothed over ``window`` slots; ties go to the lower UE index.
    """

    def __init__(self, n_ues: int, window: float = 100.0, initial_average: float = 1.0):
        if window < 1:
            raise InvalidParameter("window must be >= 1")
        self.window = window
        self.average = np.full(n_ues, float(initial_average))

    def schedule(self, rates: np.ndarray, active=None) -> np.ndarray:
        """``rates[u, rb]`` instantaneous rate; returns the UE index per RB (-1 if none active)."""
        rates = np.asarray(rates, dtype=float)
        n_ues, n_rb = rates.shape
        mask = np.ones(n_ues, dtype=bool) if active is None else np.asarray(active, dtype=bool)
        if not mask.any():
            self.average *= 1 - 1 / self.window
            return np.full(n_rb, -1, dtype=int)
        metric = np.where(mask[:, None], rates / np.maximum(self.average, 1e-12)[:, None], -np.inf)
        choice = np.argmax(metric, axis=0)
        served = np.zeros(n_ues)
        np.add.at(served, choice, rates[choice, np.arange(n_rb)])
        self.average = (1 - 1 / self.window) * self.average + served / self.window
        return choice
