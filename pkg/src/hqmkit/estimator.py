"""Online training of the HQM parameters by simulation-based random search.

The trainer matches predicted total counts ``m_hat + n_hat`` to observed
totals ``m + n``. Ticks are numbered from 1: ``C(tau)`` compares the model
output after the ``tau``-th step with the ``tau``-th observation, and every
cost evaluation replays the model from an empty highway under the candidate
parameters.

Two cumulative costs are provided:

* ``J1(t) = (1/t) * sum_{tau<=t} C(tau)`` for the stationary setting;
* ``J2(t) = sum_{tau<=t} alpha**(t-tau) * C(tau)`` for the drifting setting.

Each training step starts from the previous estimate and repeatedly moves to
the best of a random set of perturbations while that lowers the cost by at
least ``epsilon``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from hqmkit.core import HqmParams, simulate
from hqmkit.errors import DomainError, ParameterError, StructureError
from hqmkit.series import DemandSeries, ObservationSeries

log = logging.getLogger(__name__)

GAMMA_MIN = 1.0 + 1e-6


class Mode(str, enum.Enum):
    STATIONARY = "stationary"
    NONSTATIONARY = "nonstationary"


@dataclass(frozen=True)
class Theta:
    """Learnable parameters: traverse ticks, non-CAV priority, capacity [veh/hr], condensation."""

    T: int = 37
    rho: float = 0.5
    F: float = 3600.0
    gamma: float = 2.0

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ParameterError(f"T must be an integer >= 1, got {self.T}")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [0, 1], got {self.rho}")
        if not self.F >= 0:
            raise ParameterError(f"F must be >= 0, got {self.F}")
        if not self.gamma > 1.0:
            raise ParameterError(f"gamma must be > 1, got {self.gamma}")
        object.__setattr__(self, "T", int(self.T))

    @classmethod
    def project(cls, T: float, rho: float, F: float, gamma: float) -> Theta:
        """Clamp raw coordinates into the admissible box."""
        # rounding keeps repeated +-step moves on rho from drifting off the grid
        rho = round(float(min(max(rho, 0.0), 1.0)), 12)
        return cls(max(1, int(round(T))), rho, float(max(F, 0.0)), float(max(gamma, GAMMA_MIN)))

    @classmethod
    def from_params(cls, params: HqmParams) -> Theta:
        return cls(params.traverse_ticks, params.priority, params.capacity, params.condensation)

    def params(self, platoon_size: int, tick_seconds: float) -> HqmParams:
        return HqmParams(self.T, self.rho, self.F, self.gamma, platoon_size, tick_seconds)

    def for_demand(self, demand: DemandSeries) -> HqmParams:
        return self.params(demand.platoon_size, demand.tick_seconds)


NOMINAL_THETA = Theta(37, 0.5, 3600.0, 2.0)


@dataclass(frozen=True)
class TrainConfig:
    """Search hyper-parameters.

    ``epsilon=None`` means ``1e-3 * max(J(theta_prev), 1e-6)``, re-evaluated at
    every training step. ``step_gamma`` only matters when ``train_gamma`` is set.
    """

    epsilon: float | None = None
    alpha: float = 0.98
    candidates_per_iter: int = 8
    step_T: int = 1
    step_rho: float = 0.05
    step_F: float = 100.0
    step_gamma: float = 0.25
    train_gamma: bool = False
    max_iters: int = 50
    retrain_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError("epsilon must be > 0")
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must lie in (0, 1]")
        if self.candidates_per_iter < 1:
            raise ParameterError("candidates_per_iter must be >= 1")
        if min(self.step_T, self.step_rho, self.step_F, self.step_gamma) < 0:
            raise ParameterError("step sizes must be >= 0")
        if int(self.step_T) != self.step_T:
            raise ParameterError("step_T must be a whole number of ticks")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.retrain_every < 1:
            raise ParameterError("retrain_every must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")

    def with_(self, **changes) -> TrainConfig:
        return replace(self, **changes)


@dataclass
class HistoryEntry:
    tick: int
    theta: Theta
    cost: float
    iterations: int
    evaluations: int
    accepted_costs: list[float] = field(default_factory=list)


@dataclass
class TrainingHistory:
    theta0: Theta
    mode: Mode
    entries: list[HistoryEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def final(self) -> Theta:
        return self.entries[-1].theta if self.entries else self.theta0

    @property
    def ticks(self) -> np.ndarray:
        return np.array([e.tick for e in self.entries], dtype=np.int64)

    def series(self, name: str) -> np.ndarray:
        """One coordinate (``T``, ``rho``, ``F``, ``gamma``) of theta*(t) across entries."""
        return np.array([getattr(e.theta, name) for e in self.entries])

    def theta_at(self, tick: int) -> Theta:
        """Estimate in force when predicting tick ``tick`` (trained on strictly earlier data)."""
        theta = self.theta0
        for e in self.entries:
            if e.tick >= tick:
                break
            theta = e.theta
        return theta


# ---------------------------------------------------------------- costs


def _check_aligned(demand: DemandSeries, observed: ObservationSeries, t: int) -> None:
    if len(demand) != len(observed):
        raise StructureError(f"demand has {len(demand)} ticks but observations have {len(observed)}")
    if not 1 <= t <= len(demand):
        raise DomainError(f"tick t={t} outside 1..{len(demand)}")


def cost_series(theta: Theta, demand: DemandSeries, observed: ObservationSeries, t: int) -> np.ndarray:
    """``C(1..t)`` from a single replay of the model under ``theta``."""
    _check_aligned(demand, observed, t)
    traj = simulate(theta.for_demand(demand), demand.head(t))
    err = traj.total - observed.total[:t]
    return err * err


def one_step_cost(theta: Theta, demand: DemandSeries, observed: ObservationSeries, t: int) -> float:
    """Squared error of total count at tick ``t``."""
    return float(cost_series(theta, demand, observed, t)[-1])


def average_cost(costs: np.ndarray) -> float:
    if len(costs) == 0:
        raise DomainError("average cost needs t >= 1")
    return float(np.mean(costs))


def discounted_cost(costs: np.ndarray, alpha: float) -> float:
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    if len(costs) == 0:
        raise DomainError("discounted cost needs t >= 1")
    weights = alpha ** np.arange(len(costs) - 1, -1, -1, dtype=float)
    return float(np.dot(weights, costs))


def cost_avg(theta: Theta, demand: DemandSeries, observed: ObservationSeries, t: int) -> float:
    """Stationary cost ``J1(t; theta)``."""
    if t < 1:
        raise DomainError("J1 is defined for t >= 1")
    return average_cost(cost_series(theta, demand, observed, t))


def cost_discounted(
    theta: Theta, demand: DemandSeries, observed: ObservationSeries, t: int, alpha: float
) -> float:
    """Non-stationary cost ``J2(t; theta)``."""
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    if t < 1:
        raise DomainError("J2 is defined for t >= 1")
    return discounted_cost(cost_series(theta, demand, observed, t), alpha)


# ---------------------------------------------------------------- search


def perturb(theta: Theta, cfg: TrainConfig, rng: np.random.Generator) -> list[Theta]:
    """Candidate set: ``theta`` itself followed by ``cfg.candidates_per_iter`` random moves.

    Each move shifts every coordinate independently by ``-step``, ``0`` or ``+step``
    (uniformly) and is projected back into bounds.
    """
    n = cfg.candidates_per_iter
    signs = rng.integers(-1, 2, size=(n, 4))
    if not cfg.train_gamma:
        signs[:, 3] = 0
    out = [theta]
    for s in signs:
        out.append(
            Theta.project(
                theta.T + s[0] * cfg.step_T,
                theta.rho + s[1] * cfg.step_rho,
                theta.F + s[2] * cfg.step_F,
                theta.gamma + s[3] * cfg.step_gamma,
            )
        )
    return out


class _CostFn:
    """Memoised ``J(t; .)`` for one training step."""

    def __init__(self, demand, observed, t, mode: Mode, alpha: float):
        _check_aligned(demand, observed, t)
        self.demand = demand.head(t)
        self.obs_total = observed.total[:t]
        self.mode = mode
        self.alpha = alpha
        self.cache: dict[Theta, float] = {}
        self.evaluations = 0

    def __call__(self, theta: Theta) -> float:
        hit = self.cache.get(theta)
        if hit is not None:
            return hit
        traj = simulate(theta.for_demand(self.demand), self.demand)
        err = traj.total - self.obs_total
        costs = err * err
        if self.mode is Mode.STATIONARY:
            value = average_cost(costs)
        else:
            value = discounted_cost(costs, self.alpha)
        self.cache[theta] = value
        self.evaluations += 1
        return value


def train_step(
    theta_prev: Theta,
    demand: DemandSeries,
    observed: ObservationSeries,
    t: int,
    cfg: TrainConfig,
    mode: Mode | str = Mode.STATIONARY,
    rng: np.random.Generator | None = None,
) -> tuple[Theta, HistoryEntry]:
    """Improve ``theta_prev`` against the first ``t`` ticks of data.

    Stops at the first iteration whose best candidate lowers the cost by less
    than ``epsilon`` (that candidate is discarded), or after ``cfg.max_iters``
    iterations.
    """
    mode = Mode(mode)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    J = _CostFn(demand, observed, t, mode, cfg.alpha)
    theta = theta_prev
    cost = J(theta)
    eps = cfg.epsilon if cfg.epsilon is not None else 1e-3 * max(cost, 1e-6)
    accepted = [cost]
    iterations = 0
    while iterations < cfg.max_iters:
        iterations += 1
        cands = perturb(theta, cfg, rng)
        costs = [J(c) for c in cands]
        best = int(np.argmin(costs))  # first minimum wins ties
        if cost - costs[best] < eps:
            break
        theta, cost = cands[best], costs[best]
        accepted.append(cost)
    return theta, HistoryEntry(t, theta, cost, iterations, J.evaluations, accepted)


def run_online_training(
    demand: DemandSeries,
    observed: ObservationSeries,
    cfg: TrainConfig,
    theta0: Theta = NOMINAL_THETA,
    mode: Mode | str = Mode.STATIONARY,
    retrain_every: int | None = None,
) -> TrainingHistory:
    """Re-train every ``retrain_every`` ticks as data accumulates."""
    mode = Mode(mode)
    if len(demand) != len(observed):
        raise StructureError("demand and observations must have the same length")
    every = retrain_every or cfg.retrain_every
    if every < 1:
        raise ParameterError("retrain_every must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    history = TrainingHistory(theta0, mode)
    theta = theta0
    for t in range(every, len(demand) + 1, every):
        theta, entry = train_step(theta, demand, observed, t, cfg, mode, rng)
        history.entries.append(entry)
        log.debug("t=%d theta=%s J=%.6g iters=%d", t, theta, entry.cost, entry.iterations)
    return history


def online_prediction(history: TrainingHistory, demand: DemandSeries) -> np.ndarray:
    """Predicted total counts where tick ``tau`` uses the estimate trained before ``tau``.

    Each estimate is replayed from an empty highway, matching how costs are evaluated.
    """
    n = len(demand)
    pred = np.empty(n)
    bounds = [0] + [int(e.tick) for e in history.entries if e.tick < n] + [n]
    thetas = [history.theta0] + [e.theta for e in history.entries if e.tick < n]
    replays: dict[Theta, np.ndarray] = {}
    for theta, lo, hi in zip(thetas, bounds[:-1], bounds[1:]):
        if lo >= hi:
            continue
        if theta not in replays:
            replays[theta] = simulate(theta.for_demand(demand), demand.head(hi)).total
        total = replays[theta]
        if len(total) < hi:
            total = replays[theta] = simulate(theta.for_demand(demand), demand.head(hi)).total
        pred[lo:hi] = total[lo:hi]
    return pred


def theta_dict(theta: Theta) -> dict:
    return asdict(theta)
