"""Monte Carlo summary record."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["MCSummary"]


@dataclass(frozen=True)
class MCSummary:
    estimate: float
    std_error: float
    replicas: int
    aborted: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("standard error must be nonnegative")
        if not 0 <= self.aborted <= self.replicas:
            raise ValueError("aborted count must lie in [0, replicas]")

    @classmethod
    def from_samples(cls, values, seed: int = 0, aborted: int = 0) -> MCSummary:
        """Sample mean and standard error; ``replicas`` counts aborted replicas too."""
        v = np.asarray(values, dtype=float)
        m = v.size
        if m == 0:
            return cls(math.nan, 0.0, aborted, aborted, seed)
        est = float(np.mean(v))
        # identical samples get an exact zero rather than roundoff from the mean
        spread = m > 1 and v.max() > v.min()
        se = float(np.std(v, ddof=1) / math.sqrt(m)) if spread else 0.0
        return cls(est, se, m + aborted, aborted, seed)

    @property
    def abort_fraction(self) -> float:
        return self.aborted / self.replicas if self.replicas else 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> MCSummary:
        return cls(float(d["estimate"]), float(d["std_error"]), int(d["replicas"]), int(d["aborted"]), int(d["seed"]))
