"""Platoon headway regulation.

A headway policy forbids two consecutive platoons from passing the
bottleneck within ``delta`` seconds of each other. The model-optimal value
spaces platoons just far enough apart for the capacity left over by the
background flow ``b`` to discharge one condensed platoon::

    delta* = (l / gamma) / (F - b)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hqmkit.errors import DomainError, InfeasibleError, ParameterError
from hqmkit.oracle import ScenarioSpec, edbm_simulate
from hqmkit.series import DelayRecord, DemandSeries


@dataclass(frozen=True)
class HeadwayPolicy:
    delta: float = 0.0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ParameterError(f"headway must be >= 0, got {self.delta}")

    def gap_ticks(self, tick_seconds: float) -> int:
        # a hair of slack so that e.g. 5.0/1.0 stays 5
        return max(0, math.ceil(self.delta / tick_seconds - 1e-9))


def optimal_headway(platoon_size: float, gamma: float, capacity: float, background_flow: float) -> float:
    """Model-optimal platoon headway [s].

    Args:
        platoon_size: Vehicles per platoon ``l``.
        gamma: Condensation factor.
        capacity: Bottleneck capacity ``F`` [veh/hr].
        background_flow: Non-CAV flow ``b`` through the bottleneck [veh/hr].
    """
    if platoon_size < 1:
        raise ParameterError("platoon_size must be >= 1")
    if not gamma > 0:
        raise ParameterError("gamma must be > 0")
    if background_flow < 0:
        raise ParameterError("background flow must be >= 0")
    if capacity <= background_flow:
        raise InfeasibleError(
            f"capacity {capacity} veh/hr leaves no room for platoons above background flow {background_flow} veh/hr"
        )
    return (platoon_size / gamma) * 3600.0 / (capacity - background_flow)


def apply_headway(demand: DemandSeries, policy: HeadwayPolicy) -> DemandSeries:
    """Defer platoon batches so consecutive platoon entries are at least ``ceil(delta/dt)`` ticks apart.

    Platoons keep their order and none is dropped: batches pushed past the
    horizon are appended on extra ticks with no non-CAV arrivals.
    """
    gap = policy.gap_ticks(demand.tick_seconds)
    if gap == 0:
        return DemandSeries(demand.a.copy(), demand.b.copy(), demand.tick_seconds, demand.platoon_size)
    wanted = np.repeat(np.arange(len(demand)), demand.platoons)
    released = np.empty_like(wanted)
    last = -gap
    for i, t in enumerate(wanted):
        last = max(int(t), last + gap)
        released[i] = last
    horizon = max(len(demand), int(released[-1]) + 1 if len(released) else 0)
    a = np.zeros(horizon)
    a[: len(demand)] = demand.a
    platoons = np.bincount(released, minlength=horizon)
    return DemandSeries(a, platoons * demand.platoon_size, demand.tick_seconds, demand.platoon_size)


def average_delay(records: list[DelayRecord]) -> float:
    """Vehicle-weighted mean delay [s]; a platoon counts as ``l`` vehicles."""
    if not records:
        raise DomainError("no vehicle records to average")
    total = sum(r.delay * r.size for r in records)
    return total / sum(r.size for r in records)


@dataclass
class SweepResult:
    deltas: np.ndarray
    delays: np.ndarray
    vehicles: np.ndarray

    @property
    def argmin(self) -> float:
        return float(self.deltas[int(np.argmin(self.delays))])

    def rows(self):
        return list(zip(self.deltas.tolist(), self.delays.tolist(), self.vehicles.tolist()))


def default_grid(stop: float = 12.0, step: float = 0.5) -> np.ndarray:
    return np.round(np.arange(0.0, stop + step / 2, step), 10)


def sweep_headway(scenario: ScenarioSpec, demand: DemandSeries, grid=None) -> SweepResult:
    """Average delay in the event simulator for each headway in ``grid``.

    All rows share the scenario seed, so they differ only through the policy.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise DomainError("headway grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("headway grid must be strictly increasing")
    if grid[0] < 0:
        raise ParameterError("headways must be >= 0")
    delays = np.empty(len(grid))
    vehicles = np.empty(len(grid), dtype=np.int64)
    for i, delta in enumerate(grid):
        res = edbm_simulate(scenario, demand, headway=float(delta))
        delays[i] = average_delay(res.records)
        vehicles[i] = sum(r.size for r in res.records)
    return SweepResult(grid, delays, vehicles)
