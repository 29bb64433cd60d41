"""Ground-truth generators.

Three sources of "observed" counts stand in for a microscopic traffic
simulator:

* :func:`gen_demand` draws random arrivals for a scenario;
* :func:`synthetic_hqm_oracle` runs the HQM itself under known parameters,
  optionally with Gaussian count noise (exact-recovery tests);
* :func:`edbm_simulate` is an event-driven two-class bottleneck simulator with
  per-vehicle discreteness, stochastic priority and delay bookkeeping.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from hqmkit.core import HqmParams, simulate
from hqmkit.errors import ParameterError
from hqmkit.series import DelayRecord, DemandSeries, ObservationSeries

# independent RNG streams derived from one scenario seed
_STREAM_DEMAND = 0
_STREAM_EDBM = 1
_STREAM_NOISE = 2


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))


def nominal_traverse_time(length_m: float, speed_kmh: float) -> float:
    """Free-flow traverse time [s] of a section of ``length_m`` metres at ``speed_kmh``."""
    if not length_m > 0 or not speed_kmh > 0:
        raise ParameterError("length and speed must be positive")
    return length_m / (speed_kmh / 3.6)


@dataclass(frozen=True)
class ScenarioSpec:
    """A highway-section experiment.

    The free-flow speed is piecewise linear through ``speed_schedule``, a tuple of
    ``(time_s, km/h)`` breakpoints (held constant outside them). The ``true_*``
    fields parameterise the bottleneck of the event simulator and of the
    synthetic oracle.
    """

    name: str = "custom"
    section_length_m: float = 861.0
    speed_schedule: tuple[tuple[float, float], ...] = ((0.0, 100.0),)
    horizon: int = 1440
    tick_seconds: float = 5.0
    true_capacity: float = 4000.0
    true_priority: float = 0.9
    true_condensation: float = 3.0
    platoon_size: int = 10
    noncav_vph: float = 2000.0
    cav_vph: float = 1000.0
    platoon_hindrance: float = 0.0
    merge_loss_s: float = 0.0
    seed: int = 0
    noise: float = 0.0

    def __post_init__(self):
        if not self.section_length_m > 0:
            raise ParameterError("section_length_m must be > 0")
        if self.horizon < 1:
            raise ParameterError("horizon must be >= 1")
        if not self.tick_seconds > 0:
            raise ParameterError("tick_seconds must be > 0")
        if not self.speed_schedule or any(v <= 0 for _, v in self.speed_schedule):
            raise ParameterError("free-flow speeds must be positive")
        times = [s for s, _ in self.speed_schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError("speed_schedule times must be strictly increasing")
        if self.noncav_vph < 0 or self.cav_vph < 0:
            raise ParameterError("demand rates must be >= 0")
        if self.noise < 0:
            raise ParameterError("noise must be >= 0")
        if self.platoon_hindrance < 0:
            raise ParameterError("platoon_hindrance must be >= 0")
        if self.merge_loss_s < 0:
            raise ParameterError("merge_loss_s must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        # validates the truth parameters as a whole
        self.true_params(1)

    @property
    def duration_s(self) -> float:
        return self.horizon * self.tick_seconds

    @property
    def penetration(self) -> float:
        total = self.noncav_vph + self.cav_vph
        return self.cav_vph / total if total else 0.0

    def speed_at(self, t_s):
        """Free-flow speed [km/h] at time(s) ``t_s``."""
        times, speeds = zip(*self.speed_schedule)
        return np.interp(t_s, times, speeds)

    def traverse_time_at(self, t_s):
        """Nominal traverse time ``L / v(t)`` [s]."""
        return self.section_length_m / (np.asarray(self.speed_at(t_s)) / 3.6)

    def true_params(self, traverse_ticks: int | None = None) -> HqmParams:
        if traverse_ticks is None:
            traverse_ticks = HqmParams.ticks_from_seconds(float(self.traverse_time_at(0.0)), self.tick_seconds)
        return HqmParams(
            traverse_ticks=traverse_ticks,
            priority=self.true_priority,
            capacity=self.true_capacity,
            condensation=self.true_condensation,
            platoon_size=self.platoon_size,
            tick_seconds=self.tick_seconds,
        )

    def with_(self, **changes) -> ScenarioSpec:
        return replace(self, **changes)

    @staticmethod
    def ramp(start_kmh: float, end_kmh: float, duration_s: float) -> tuple[tuple[float, float], ...]:
        return ((0.0, float(start_kmh)), (float(duration_s), float(end_kmh)))


def gen_demand(scenario: ScenarioSpec) -> DemandSeries:
    """Random arrivals: Poisson non-CAV counts and Bernoulli platoon batches per tick."""
    dt = scenario.tick_seconds
    l = scenario.platoon_size
    p_platoon = scenario.cav_vph * dt / (3600.0 * l)
    if p_platoon > 1:
        raise ParameterError(
            f"CAV rate {scenario.cav_vph} veh/hr needs more than one platoon per tick; shorten the tick"
        )
    rng = rng_stream(scenario.seed, _STREAM_DEMAND)
    n = scenario.horizon
    a = rng.poisson(scenario.noncav_vph * dt / 3600.0, size=n).astype(float)
    b = (rng.random(n) < p_platoon).astype(np.int64) * l
    return DemandSeries(a, b, dt, l)


def synthetic_hqm_oracle(
    theta_true: HqmParams, demand: DemandSeries, noise: float = 0.0, seed: int = 0
) -> ObservationSeries:
    """Counts produced by the model itself under ``theta_true``.

    With ``noise > 0`` independent zero-mean Gaussian errors (std ``noise``
    vehicles) are added to ``m`` and ``n`` and the result is clamped at zero.
    """
    if noise < 0:
        raise ParameterError("noise must be >= 0")
    traj = simulate(theta_true, demand)
    m, n = traj.m_hat, traj.n_hat
    if noise > 0:
        rng = rng_stream(seed, _STREAM_NOISE)
        m = np.maximum(m + rng.normal(0.0, noise, len(m)), 0.0)
        n = np.maximum(n + rng.normal(0.0, noise, len(n)), 0.0)
    return ObservationSeries(m, n, demand.tick_seconds, n_vehicles=n * theta_true.condensation)


@dataclass
class EdbmResult:
    observations: ObservationSeries
    records: list[DelayRecord] = field(repr=False)
    platoon_passages: np.ndarray = field(repr=False)
    noncav_throughput_vph: float = 0.0


def _entry_times(counts: np.ndarray, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Spread each tick's arrivals uniformly and in order over the tick."""
    counts = np.asarray(counts, dtype=np.int64)
    ticks = np.repeat(np.arange(len(counts)), counts)
    offsets = rng.random(len(ticks))
    # sort offsets within each tick
    order = np.lexsort((offsets, ticks))
    return (ticks[order] + offsets[order]) * dt


def _integer_arrivals(a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Whole-vehicle arrivals; fractional demand is rounded stochastically."""
    base = np.floor(a)
    frac = a - base
    if np.any(frac > 0):
        base = base + (rng.random(len(a)) < frac)
    return base.astype(np.int64)


def edbm_simulate(
    scenario: ScenarioSpec,
    demand: DemandSeries,
    headway: float | None = None,
) -> EdbmResult:
    """Event-driven two-class bottleneck simulation.

    Every non-CAV and every platoon enters at a random instant inside its
    demand tick, traverses the section in free-flow time ``L / v(entry)``
    (no overtaking within a class) and joins its class FIFO queue at the
    bottleneck. The bottleneck passes one unit at a time: a non-CAV blocks it
    for ``3600/F`` s, a platoon for ``l*3600/(gamma*F)`` s. With both queues
    occupied the non-CAV head goes first with probability ``rho``.

    ``platoon_hindrance`` (scenario) slows non-CAV passages by that fraction
    while a platoon is stalled at the bottleneck, and ``merge_loss_s`` adds
    lost time whenever a platoon forces its way in ahead of waiting non-CAVs.

    With a ``headway`` of ``delta`` seconds, platoon entries are released at
    least ``delta`` apart and no platoon passes the bottleneck less than
    ``delta`` after the previous one.

    Counts are sampled at the end of each tick; ``n`` is in condensed units
    (``l/gamma`` per platoon) to match the model's CAV state.
    """
    if not scenario.true_capacity > 0:
        raise ParameterError("event simulator needs a positive capacity")
    if demand.platoon_size != scenario.platoon_size:
        raise ParameterError("demand and scenario disagree on the platoon size")
    if headway is not None and headway < 0:
        raise ParameterError("headway must be >= 0")
    dt = demand.tick_seconds
    l = scenario.platoon_size
    gamma = scenario.true_condensation
    rho = scenario.true_priority
    rng = rng_stream(scenario.seed, _STREAM_EDBM)

    car_entry = _entry_times(_integer_arrivals(demand.a, rng), dt, rng)
    plat_demand = _entry_times(demand.platoons, dt, rng)
    plat_entry = plat_demand.copy()
    gap = headway or 0.0
    if gap > 0:
        for i in range(1, len(plat_entry)):
            plat_entry[i] = max(plat_entry[i], plat_entry[i - 1] + gap)

    car_ff = scenario.traverse_time_at(car_entry)
    plat_ff = scenario.traverse_time_at(plat_entry)
    car_arr = np.maximum.accumulate(car_entry + car_ff) if len(car_entry) else car_entry
    plat_arr = np.maximum.accumulate(plat_entry + plat_ff) if len(plat_entry) else plat_entry

    car_service = 3600.0 / scenario.true_capacity
    plat_service = l * 3600.0 / (gamma * scenario.true_capacity)
    hindered_service = car_service * (1.0 + scenario.platoon_hindrance)

    n_car, n_plat = len(car_arr), len(plat_arr)
    car_pass = np.empty(n_car)
    plat_pass = np.empty(n_plat)
    car_q: deque[int] = deque()
    plat_q: deque[int] = deque()
    ic = ip = 0  # next not-yet-queued vehicle of each class
    now = 0.0
    last_plat_pass = -math.inf
    served = 0
    while served < n_car + n_plat:
        while ic < n_car and car_arr[ic] <= now:
            car_q.append(ic)
            ic += 1
        while ip < n_plat and plat_arr[ip] <= now:
            plat_q.append(ip)
            ip += 1
        plat_ready = bool(plat_q) and now >= last_plat_pass + gap
        if not car_q and not plat_ready:
            # idle until something can be served
            wake = []
            if ic < n_car:
                wake.append(car_arr[ic])
            if ip < n_plat and not plat_q:
                wake.append(plat_arr[ip])
            if plat_q:
                wake.append(last_plat_pass + gap)
            now = max(now, min(wake))
            continue
        if car_q and plat_ready:
            take_car = rng.random() < rho
        else:
            take_car = bool(car_q)
        if take_car:
            i = car_q.popleft()
            car_pass[i] = now
            now += hindered_service if plat_q else car_service
        else:
            i = plat_q.popleft()
            plat_pass[i] = now
            last_plat_pass = now
            now += plat_service + (scenario.merge_loss_s if car_q else 0.0)
        served += 1

    records = [
        DelayRecord("noncav", 1, float(e), float(e), float(f), float(a), float(p))
        for e, f, a, p in zip(car_entry, car_ff, car_arr, car_pass)
    ]
    records += [
        DelayRecord("platoon", l, float(d), float(e), float(f), float(a), float(p))
        for d, e, f, a, p in zip(plat_demand, plat_entry, plat_ff, plat_arr, plat_pass)
    ]

    sample = (np.arange(demand.horizon) + 1) * dt
    m = _inside(car_entry, np.sort(car_pass), sample)
    plats = _inside(plat_entry, np.sort(plat_pass), sample)
    obs = ObservationSeries(m.astype(float), plats * (l / gamma), dt, n_vehicles=(plats * l).astype(float))
    obs.records = records
    passed = np.count_nonzero(car_pass < demand.horizon * dt)
    return EdbmResult(obs, records, plat_pass, passed * 3600.0 / (demand.horizon * dt))


def _inside(entry: np.ndarray, passage_sorted: np.ndarray, sample: np.ndarray) -> np.ndarray:
    """Vehicles that entered before each sample instant and have not yet passed."""
    entered = np.searchsorted(entry, sample, side="left")
    exited = np.searchsorted(passage_sorted, sample, side="left")
    return entered - exited
