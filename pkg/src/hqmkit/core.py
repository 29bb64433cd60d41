"""Hybrid queuing model (HQM) of a highway bottleneck shared by CAV platoons and non-CAVs.

The section is a chain of ``T`` cells. Cells ``T..2`` are pure delays; cell 1
is the bottleneck where a two-class queue can form. Non-CAVs are a fluid
``x``; platoons are condensed masses ``y`` that move in whole-platoon units of
``l/gamma``.

One tick of the dynamics::

    x_T(t+1) = a(t)                 y_T(t+1) = b(t)/gamma
    x_k(t+1) = x_{k+1}(t)           y_k(t+1) = y_{k+1}(t)         k = 2..T-1
    f(t) = min(x_1, rho*F)
    g(t) = floor(min(y_1, F - f) / (l/gamma)) * (l/gamma)
    x_1(t+1) = x_1 + x_2 - f        y_1(t+1) = y_1 + y_2 - g

with ``F`` the per-tick capacity. For ``T = 1`` the entrance is the bottleneck
and arrivals land in cell 1 directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hqmkit.errors import ParameterError, StructureError
from hqmkit.series import DemandSeries, Inflow

GRANULARITY_TOL = 1e-9


@dataclass(frozen=True)
class HqmParams:
    """Model parameters.

    Attributes:
        traverse_ticks: Number of cells ``T`` (traverse time in ticks).
        priority: Non-CAV priority ratio ``rho`` in [0, 1].
        capacity: Bottleneck capacity ``F`` [veh/hr].
        condensation: Platoon spacing factor ``gamma = H/h`` (> 1).
        platoon_size: Vehicles per platoon ``l``.
        tick_seconds: Length of one tick [s].
    """

    traverse_ticks: int = 37
    priority: float = 0.5
    capacity: float = 3600.0
    condensation: float = 2.0
    platoon_size: int = 10
    tick_seconds: float = 1.0

    def __post_init__(self):
        if int(self.traverse_ticks) != self.traverse_ticks or self.traverse_ticks < 1:
            raise ParameterError(f"traverse_ticks must be an integer >= 1, got {self.traverse_ticks}")
        if not 0.0 <= self.priority <= 1.0:
            raise ParameterError(f"priority must lie in [0, 1], got {self.priority}")
        if not (self.capacity >= 0 and math.isfinite(self.capacity)):
            raise ParameterError(f"capacity must be finite and >= 0, got {self.capacity}")
        if not self.condensation > 1.0:
            raise ParameterError(f"condensation must be > 1, got {self.condensation}")
        if int(self.platoon_size) != self.platoon_size or self.platoon_size < 1:
            raise ParameterError(f"platoon_size must be an integer >= 1, got {self.platoon_size}")
        if not self.tick_seconds > 0:
            raise ParameterError(f"tick_seconds must be > 0, got {self.tick_seconds}")
        object.__setattr__(self, "traverse_ticks", int(self.traverse_ticks))
        object.__setattr__(self, "platoon_size", int(self.platoon_size))

    @property
    def capacity_per_tick(self) -> float:
        return self.capacity * self.tick_seconds / 3600.0

    @property
    def platoon_unit(self) -> float:
        """Condensed mass of one platoon, ``l/gamma``."""
        return self.platoon_size / self.condensation

    def with_(self, **changes) -> HqmParams:
        return replace(self, **changes)

    @staticmethod
    def ticks_from_seconds(seconds: float, tick_seconds: float) -> int:
        """Round a continuous traverse time to a whole number of ticks (at least one)."""
        return max(1, int(round(seconds / tick_seconds)))


@dataclass
class HqmState:
    """Per-cell non-CAV mass ``x`` and condensed CAV mass ``y``; index 0 is cell 1."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise StructureError("x and y must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return len(self.x)

    def check(self, params: HqmParams) -> None:
        """Raise if the state violates any invariant for ``params``."""
        if len(self) != params.traverse_ticks:
            raise StructureError(
                f"state has {len(self)} cells but params.traverse_ticks={params.traverse_ticks}"
            )
        if np.any(self.x < 0) or np.any(self.y < 0):
            raise ParameterError("state entries must be >= 0")
        u = params.platoon_unit
        if np.any(np.abs(self.y - np.round(self.y / u) * u) > GRANULARITY_TOL):
            raise ParameterError(f"y entries must be multiples of l/gamma={u}")


@dataclass(frozen=True)
class DischargeRecord:
    f: float
    g: float


def new_state(params: HqmParams) -> HqmState:
    """Empty highway."""
    T = params.traverse_ticks
    return HqmState(np.zeros(T), np.zeros(T))


def _discharged_platoons(platoons_in_cell: int, residual: float, unit: float) -> int:
    # tolerance keeps an exact fit (residual == k*unit) from flooring to k-1
    fits = math.floor(residual / unit + GRANULARITY_TOL) if residual > 0 else 0
    return min(platoons_in_cell, fits)


def discharge(x1: float, y1: float, params: HqmParams) -> DischargeRecord:
    """Bottleneck outflows ``(f, g)`` for cell-1 contents ``x1``, ``y1``.

    Non-CAVs take up to ``rho*F`` first; platoons then use whatever capacity is
    left, in whole platoons of condensed size ``l/gamma``.
    """
    if x1 < 0 or y1 < 0:
        raise ParameterError("cell contents must be >= 0")
    cap = params.capacity_per_tick
    unit = params.platoon_unit
    f = min(x1, params.priority * cap)
    k = _discharged_platoons(int(round(y1 / unit)), cap - f, unit)
    return DischargeRecord(f, k * unit)


def step(state: HqmState, inflow: Inflow, params: HqmParams) -> tuple[HqmState, DischargeRecord]:
    """Advance the model by one tick."""
    T = params.traverse_ticks
    if len(state) != T:
        raise StructureError(f"state has {len(state)} cells but params.traverse_ticks={T}")
    inflow.check(params.platoon_size)
    x, y = state.x, state.y
    rec = discharge(float(x[0]), float(y[0]), params)
    b_cond = inflow.b / params.condensation

    nx = np.empty(T)
    ny = np.empty(T)
    if T == 1:
        nx[0] = x[0] + inflow.a - rec.f
        ny[0] = y[0] + b_cond - rec.g
    else:
        nx[0] = x[0] + x[1] - rec.f
        ny[0] = y[0] + y[1] - rec.g
        nx[1:-1] = x[2:]
        ny[1:-1] = y[2:]
        nx[-1] = inflow.a
        ny[-1] = b_cond
    u = params.platoon_unit
    ny = np.round(ny / u) * u
    return HqmState(nx, ny), rec


def counts(state: HqmState) -> tuple[float, float]:
    """Model vehicle counts ``(m_hat, n_hat)``: L1 norms of ``x`` and ``y``."""
    return float(np.sum(state.x)), float(np.sum(state.y))


@dataclass
class Trajectory:
    """Per-tick model outputs; entry ``t`` is recorded after the ``t``-th step."""

    m_hat: np.ndarray
    n_hat: np.ndarray
    f: np.ndarray
    g: np.ndarray
    final: HqmState

    @property
    def total(self) -> np.ndarray:
        return self.m_hat + self.n_hat

    def __len__(self) -> int:
        return len(self.m_hat)


def simulate(params: HqmParams, demand: DemandSeries, initial: HqmState | None = None) -> Trajectory:
    """Run the model over a whole demand series.

    Equivalent to iterating :func:`step`, but only cell 1 is integrated: every
    other cell is a pure delay, so the inflow to cell 1 at tick ``t`` is just
    the arrival sequence shifted by ``T - 1`` ticks.
    """
    if len(demand) < 1:
        raise StructureError("demand must contain at least one tick")
    if demand.platoon_size != params.platoon_size:
        raise ParameterError(
            f"demand platoon size {demand.platoon_size} != params.platoon_size {params.platoon_size}"
        )
    T = params.traverse_ticks
    if initial is None:
        initial = new_state(params)
    initial.check(params)
    unit = params.platoon_unit

    # seq[t] is what sits in cell 2 at tick t (or arrives directly when T == 1)
    seq_x = np.concatenate([initial.x[1:], demand.a])
    seq_p = np.concatenate([np.round(initial.y[1:] / unit).astype(np.int64), demand.platoons])
    x1, p1, f_arr, k_arr = _run_bottleneck(
        float(initial.x[0]),
        int(round(initial.y[0] / unit)),
        seq_x,
        seq_p,
        len(demand),
        params.priority * params.capacity_per_tick,
        params.capacity_per_tick,
        unit,
    )
    n = len(demand)
    # pipeline contents (cells 2..T) after step t are seq[t+1 : t+T]
    cs_x = np.concatenate([[0.0], np.cumsum(seq_x)])
    cs_p = np.concatenate([[0], np.cumsum(seq_p)])
    ticks = np.arange(n)
    m_hat = x1 + (cs_x[ticks + T] - cs_x[ticks + 1])
    n_hat = (p1 + (cs_p[ticks + T] - cs_p[ticks + 1])) * unit
    final = HqmState(
        np.concatenate([[x1[-1]], seq_x[n:]]),
        np.concatenate([[p1[-1]], seq_p[n:]]) * unit,
    )
    return Trajectory(m_hat, n_hat, f_arr, k_arr * unit, final)


def _run_bottleneck(x1, p1, seq_x, seq_p, n, f_cap, cap, unit):
    """Integrate cell 1 for ``n`` ticks; platoons are tracked as integer counts."""
    inflow_x = seq_x[:n].tolist()
    inflow_p = seq_p[:n].tolist()
    x1s = [0.0] * n
    p1s = [0] * n
    fs = [0.0] * n
    ks = [0] * n
    floor = math.floor
    for t in range(n):
        f = x1 if x1 < f_cap else f_cap
        r = cap - f
        k = floor(r / unit + GRANULARITY_TOL) if r > 0 else 0
        if k > p1:
            k = p1
        x1 = x1 + inflow_x[t] - f
        p1 = p1 + inflow_p[t] - k
        x1s[t] = x1
        p1s[t] = p1
        fs[t] = f
        ks[t] = k
    return np.array(x1s), np.array(p1s, dtype=np.int64), np.array(fs), np.array(ks, dtype=np.int64)
