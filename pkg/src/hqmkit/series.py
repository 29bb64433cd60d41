"""Tick-aligned demand and observation series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hqmkit.errors import ParameterError, StructureError


@dataclass(frozen=True)
class Inflow:
    """Arrivals during one tick.

    Attributes:
        a: Non-CAV arrivals (vehicles, may be fractional).
        b: CAV arrivals (vehicles), a non-negative multiple of the platoon size.
    """

    a: float
    b: int = 0

    def check(self, platoon_size: int) -> None:
        if not self.a >= 0:
            raise ParameterError(f"non-CAV arrivals must be >= 0, got {self.a}")
        if self.b < 0 or self.b % platoon_size:
            raise ParameterError(
                f"CAV arrivals must be a non-negative multiple of l={platoon_size}, got {self.b}"
            )


@dataclass
class DemandSeries:
    """Per-tick arrivals ``a(t)`` (continuous) and ``b(t)`` (whole platoons)."""

    a: np.ndarray
    b: np.ndarray
    tick_seconds: float = 1.0
    platoon_size: int = 10

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=np.int64)
        if self.a.ndim != 1 or self.a.shape != self.b.shape:
            raise StructureError("a and b must be 1-d arrays of equal length")
        if self.tick_seconds <= 0:
            raise ParameterError("tick_seconds must be positive")
        if self.platoon_size < 1:
            raise ParameterError("platoon_size must be >= 1")
        if np.any(self.a < 0) or not np.all(np.isfinite(self.a)):
            raise ParameterError("non-CAV arrivals must be finite and >= 0")
        if np.any(self.b < 0) or np.any(self.b % self.platoon_size):
            raise ParameterError("CAV arrivals must be non-negative multiples of the platoon size")

    @classmethod
    def zeros(cls, horizon: int, tick_seconds: float = 1.0, platoon_size: int = 10) -> DemandSeries:
        return cls(np.zeros(horizon), np.zeros(horizon, dtype=np.int64), tick_seconds, platoon_size)

    @property
    def horizon(self) -> int:
        return len(self.a)

    def __len__(self) -> int:
        return len(self.a)

    def __getitem__(self, t: int) -> Inflow:
        return Inflow(float(self.a[t]), int(self.b[t]))

    @property
    def platoons(self) -> np.ndarray:
        """Number of platoons arriving in each tick."""
        return self.b // self.platoon_size

    def head(self, n: int) -> DemandSeries:
        return DemandSeries(self.a[:n], self.b[:n], self.tick_seconds, self.platoon_size)


@dataclass
class DelayRecord:
    """One vehicle (or one platoon) crossing the section in the event simulator."""

    kind: str  # "noncav" or "platoon"
    size: int  # vehicles represented (1 or l)
    demand_time: float  # when the vehicle wanted to enter (s)
    entry_time: float  # when it actually entered, after any gating (s)
    free_flow_time: float
    arrival_time: float  # reached the bottleneck (s)
    passage_time: float  # passed the bottleneck (s)

    @property
    def delay(self) -> float:
        return self.passage_time - self.demand_time - self.free_flow_time


@dataclass
class ObservationSeries:
    """Ground-truth counts ``m(t)``, ``n(t)`` sampled at the end of each tick.

    ``n`` is expressed in the same condensed units as the model's CAV state
    (a platoon of ``l`` vehicles counts ``l/gamma``). ``n_vehicles`` optionally
    carries the raw CAV head count.
    """

    m: np.ndarray
    n: np.ndarray
    tick_seconds: float = 1.0
    n_vehicles: np.ndarray | None = None
    records: list[DelayRecord] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.n = np.asarray(self.n, dtype=float)
        if self.m.ndim != 1 or self.m.shape != self.n.shape:
            raise StructureError("m and n must be 1-d arrays of equal length")
        if np.any(self.m < 0) or np.any(self.n < 0):
            raise ParameterError("observed counts must be >= 0")

    def __len__(self) -> int:
        return len(self.m)

    @property
    def total(self) -> np.ndarray:
        return self.m + self.n

    def head(self, n: int) -> ObservationSeries:
        nv = None if self.n_vehicles is None else self.n_vehicles[:n]
        return ObservationSeries(self.m[:n], self.n[:n], self.tick_seconds, nv)
