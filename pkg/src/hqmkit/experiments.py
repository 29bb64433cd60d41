"""Experiment runner: presets, config files, CSV artifacts and metrics.

An experiment draws demand for a scenario, produces ground-truth counts
(event simulator, synthetic model or an external counts CSV), runs one study
and writes its artifacts into an output directory:

* ``counts.csv``            observed counts and the demand that produced them
* ``predicted_counts.csv``  model counts in the same schema
* ``theta.csv``             parameter trajectory (training studies)
* ``sweep.csv``             delay per headway (sweep study)
* ``metrics.json``          summary; contains no timing so reruns are byte-identical
"""

from __future__ import annotations

import csv
import json
import logging
import math
import shutil
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from hqmkit.core import HqmParams, simulate
from hqmkit.errors import ConfigError, CsvFormatError, DomainError, HqmError
from hqmkit.estimator import (
    Mode,
    Theta,
    TrainConfig,
    TrainingHistory,
    online_prediction,
    run_online_training,
)
from hqmkit.oracle import ScenarioSpec, edbm_simulate, gen_demand, synthetic_hqm_oracle
from hqmkit.regulator import SweepResult, default_grid, optimal_headway, sweep_headway
from hqmkit.series import DemandSeries, ObservationSeries

log = logging.getLogger(__name__)

KINDS = ("simulate", "train-stationary", "train-nonstationary", "sweep", "validate")
SOURCES = ("edbm", "synthetic", "csv")

COUNTS_HEADER = ["tick", "t_seconds", "m", "n", "a", "b"]
THETA_HEADER = ["tick", "T_ticks", "rho", "F_vph", "gamma", "J"]
SWEEP_HEADER = ["delta_s", "avg_delay_s", "n_vehicles"]


# ---------------------------------------------------------------- metrics


def per_tick_error(pred, obs) -> np.ndarray:
    """Absolute relative error of total counts per tick, ``nan`` where the observed total is 0."""
    pred = _totals(pred)
    obs = _totals(obs)
    if pred.shape != obs.shape:
        raise DomainError(f"prediction has {len(pred)} ticks but observations have {len(obs)}")
    out = np.full(len(obs), np.nan)
    pos = obs > 0
    out[pos] = np.abs(pred[pos] - obs[pos]) / obs[pos]
    return out


def percentage_error(pred, obs, warmup: int = 0) -> float:
    """Time-average percentage error of total counts.

    Averages ``|pred - obs| / obs`` over ticks after the first ``warmup`` ticks
    whose observed total is positive.

    Args:
        pred: Predicted totals, or any series with a ``total`` attribute.
        obs: Observed totals, same length.
        warmup: Number of leading ticks to skip.
    """
    err = per_tick_error(pred, obs)
    if not 0 <= warmup < len(err):
        raise DomainError(f"warm-up {warmup} must be below the series length {len(err)}")
    tail = err[warmup:]
    tail = tail[~np.isnan(tail)]
    if len(tail) == 0:
        raise DomainError("no tick with a positive observed total after warm-up")
    return float(100.0 * np.mean(tail))


def _totals(series) -> np.ndarray:
    return np.asarray(getattr(series, "total", series), dtype=float)


def _error_or_zero(pred, obs, warmup: int) -> float:
    # an empty road predicted as empty is a perfect fit, not an undefined one
    if not np.any(_totals(obs)[warmup:] > 0) and not np.any(_totals(pred)[warmup:] != 0):
        return 0.0
    return percentage_error(pred, obs, warmup)


# ---------------------------------------------------------------- CSV


def _fmt(x: float) -> str:
    return repr(float(x))


def write_counts_csv(series: ObservationSeries, path, demand: DemandSeries | None = None) -> None:
    """Write counts with the demand of each tick (zeros when ``demand`` is None)."""
    n = len(series)
    if demand is not None and len(demand) != n:
        raise DomainError("demand and counts must have the same length")
    a = demand.a if demand is not None else np.zeros(n)
    b = demand.b if demand is not None else np.zeros(n, dtype=np.int64)
    dt = series.tick_seconds
    with open(path, "w", newline="") as fh:
        fh.write(",".join(COUNTS_HEADER) + "\n")
        for t in range(n):
            fh.write(f"{t + 1},{_fmt((t + 1) * dt)},{_fmt(series.m[t])},{_fmt(series.n[t])},{_fmt(a[t])},{int(b[t])}\n")


def _read_rows(path, header: list[str]):
    path = Path(path)
    if not path.is_file():
        raise CsvFormatError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise CsvFormatError(f"expected header {','.join(header)}, got {first}", 1)
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                rows.append((lineno, [float(v) for v in row]))
            except ValueError as exc:
                raise CsvFormatError(f"not a number: {exc}", lineno) from None
    return rows


def _read_counts(path, platoon_size: int):
    rows = _read_rows(path, COUNTS_HEADER)
    if not rows:
        log.warning("%s has a header but no rows; returning an empty series", path)
        return ObservationSeries(np.zeros(0), np.zeros(0)), DemandSeries.zeros(0, platoon_size=platoon_size)
    for i, (ln, vals) in enumerate(rows):
        if i and vals[0] <= rows[i - 1][1][0]:
            raise CsvFormatError("ticks must be strictly increasing", ln)
        if vals[0] != i + 1:
            raise CsvFormatError(f"expected tick {i + 1}; ticks must run 1, 2, 3, ... without gaps", ln)
        if min(vals[2], vals[3], vals[4]) < 0 or not all(map(math.isfinite, vals)):
            raise CsvFormatError("counts and arrivals must be finite and >= 0", ln)
        if vals[5] < 0 or vals[5] != int(vals[5]) or int(vals[5]) % platoon_size:
            raise CsvFormatError(f"b must be a non-negative multiple of {platoon_size}", ln)
    lines = [ln for ln, _ in rows]
    ticks, ts, m, n, a, b = (np.array(c) for c in zip(*(r for _, r in rows)))
    dt = float(ts[0] / ticks[0])
    if not dt > 0:
        raise CsvFormatError("t_seconds must be positive", lines[0])
    bad = np.flatnonzero(np.abs(ts - ticks * dt) > 1e-9 * np.maximum(1.0, ts))
    if len(bad):
        raise CsvFormatError("t_seconds must equal tick * tick length", lines[bad[0]])
    obs = ObservationSeries(m, n, dt)
    demand = DemandSeries(a, b.astype(np.int64), dt, platoon_size)
    return obs, demand


def load_counts_csv(path, platoon_size: int = 10) -> ObservationSeries:
    """Read a counts file; malformed rows raise :class:`CsvFormatError` with the line number."""
    return _read_counts(path, platoon_size)[0]


def load_demand_csv(path, platoon_size: int = 10) -> DemandSeries:
    """The ``a``/``b`` columns of a counts file."""
    return _read_counts(path, platoon_size)[1]


def write_theta_csv(history: TrainingHistory, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(THETA_HEADER) + "\n")
        for e in history.entries:
            th = e.theta
            fh.write(f"{e.tick},{th.T},{_fmt(th.rho)},{_fmt(th.F)},{_fmt(th.gamma)},{_fmt(e.cost)}\n")


def load_theta_csv(path) -> list[tuple[int, Theta, float]]:
    out = []
    for ln, (tick, T, rho, F, gamma, J) in _read_rows(path, THETA_HEADER):
        try:
            out.append((int(tick), Theta(int(T), rho, F, gamma), J))
        except HqmError as exc:
            raise CsvFormatError(str(exc), ln) from None
    return out


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for d, delay, nveh in result.rows():
            fh.write(f"{_fmt(d)},{_fmt(delay)},{int(nveh)}\n")


def load_sweep_csv(path) -> SweepResult:
    rows = _read_rows(path, SWEEP_HEADER)
    if not rows:
        raise CsvFormatError("sweep file has no rows")
    d, delay, nveh = (np.array(c) for c in zip(*(r for _, r in rows)))
    return SweepResult(d, delay, nveh.astype(np.int64))


# ---------------------------------------------------------------- presets


@dataclass(frozen=True)
class Preset:
    scenario: ScenarioSpec
    train: TrainConfig
    theta0: Theta
    source: str = "edbm"


def _presets() -> dict[str, Preset]:
    # 5 s ticks: at 1 s a condensed platoon is larger than one tick of capacity
    dt = 5.0
    theta0 = Theta(HqmParams.ticks_from_seconds(37.0, dt), 0.5, 3600.0, 2.0)
    learn = TrainConfig(step_gamma=0.5, train_gamma=True, retrain_every=20)
    return {
        "stationary-default": Preset(
            ScenarioSpec("stationary-default", noncav_vph=2400, cav_vph=1200, horizon=1440, tick_seconds=dt),
            learn,
            theta0,
        ),
        "nonstationary-default": Preset(
            ScenarioSpec(
                "nonstationary-default",
                section_length_m=1000.0,
                speed_schedule=ScenarioSpec.ramp(100, 60, 1440 * dt),
                noncav_vph=2400,
                cav_vph=1200,
                horizon=1440,
                tick_seconds=dt,
            ),
            learn.with_(alpha=0.98),
            theta0,
        ),
        # background flow near 1270 veh/hr, heavy platoon demand; a day of data
        # so the delay curve is smooth at 0.5 s resolution
        "sweep-default": Preset(
            ScenarioSpec(
                "sweep-default",
                noncav_vph=1270,
                cav_vph=5000,
                merge_loss_s=5.0,
                horizon=17280,
                tick_seconds=dt,
            ),
            TrainConfig(candidates_per_iter=26, step_gamma=0.25, train_gamma=True, max_iters=200, retrain_every=100),
            theta0,
        ),
    }


PRESETS = _presets()
DEFAULT_PRESET = {
    "simulate": "stationary-default",
    "train-stationary": "stationary-default",
    "train-nonstationary": "nonstationary-default",
    "sweep": "sweep-default",
    "validate": "stationary-default",
}


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    """Everything needed to reproduce one experiment.

    Attributes:
        kind: One of ``KINDS``.
        scenario: Scenario, including the seed used for demand and simulation.
        train: Search settings (its seed is kept equal to ``seed``).
        theta0: Initial (or, for ``simulate``/``validate``, fixed) parameters.
        out_dir: Directory receiving the artifacts.
        seed: Master seed.
        source: Ground truth: ``edbm``, ``synthetic`` or ``csv``.
        counts_csv: Counts file, required when ``source == "csv"``.
        warmup: Ticks skipped by the headline error; ``None`` means the
            nominal traverse time in ticks.
        grid: Headway grid for sweeps [s].
    """

    kind: str
    scenario: ScenarioSpec
    train: TrainConfig
    theta0: Theta
    out_dir: Path
    seed: int = 0
    source: str = "edbm"
    counts_csv: Path | None = None
    warmup: int | None = None
    grid: tuple[float, ...] = tuple(default_grid().tolist())

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.counts_csv is not None:
            self.counts_csv = Path(self.counts_csv)
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {', '.join(KINDS)}; got {self.kind!r}")
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {', '.join(SOURCES)}; got {self.source!r}")
        if self.source == "csv":
            if self.counts_csv is None:
                raise ConfigError("source 'csv' needs counts_csv")
            if not self.counts_csv.is_file():
                raise ConfigError(f"counts_csv {self.counts_csv} does not exist")
        if self.kind == "sweep" and self.source == "csv":
            raise ConfigError("a sweep needs a simulated source (edbm or synthetic)")
        if self.warmup is not None and self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if not self.grid:
            raise ConfigError("grid must not be empty")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.scenario = self.scenario.with_(seed=self.seed)
        self.train = self.train.with_(seed=self.seed)

    @classmethod
    def from_preset(cls, kind: str, preset: str | None = None, out_dir=".", seed: int = 0, **kw) -> RunConfig:
        name = preset or DEFAULT_PRESET.get(kind)
        if name not in PRESETS:
            raise ConfigError(f"unknown scenario preset {name!r}; choose from {', '.join(PRESETS)}")
        p = PRESETS[name]
        kw.setdefault("source", p.source)
        return cls(kind, p.scenario, p.train, p.theta0, Path(out_dir), seed, **kw)


_SCENARIO_KEYS = {
    "section_length_m", "horizon", "tick_seconds", "true_capacity", "true_priority",
    "true_condensation", "platoon_size", "noncav_vph", "cav_vph", "platoon_hindrance",
    "merge_loss_s", "noise",
}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)} - {"seed"}
_THETA_KEYS = {"theta0_T": "T", "theta0_rho": "rho", "theta0_F": "F", "theta0_gamma": "gamma"}
_SPEED_KEYS = {"speed_kmh", "speed_start_kmh", "speed_end_kmh", "ramp_seconds"}
_RUN_KEYS = {"kind", "scenario", "source", "counts_csv", "warmup", "grid_start", "grid_stop", "grid_step", "seed", "out"}
CONFIG_KEYS = frozenset(_SCENARIO_KEYS | _TRAIN_KEYS | set(_THETA_KEYS) | _SPEED_KEYS | _RUN_KEYS)


def config_from_mapping(values: dict, kind: str | None = None, seed: int | None = None, out_dir=None,
                        base_dir: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from flat key/value pairs.

    Unknown keys are rejected. Explicit ``kind``/``seed``/``out_dir`` arguments
    win over the corresponding keys. ``kind="train"`` leaves the cost to the
    file's ``kind`` or, failing that, the scenario preset.
    """
    unknown = sorted(set(values) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for k, v in values.items():
        if isinstance(v, (dict, list)):
            raise ConfigError(f"config key {k!r} must be a scalar")
    file_kind = values.get("kind")
    if kind is None:
        kind = file_kind
    elif kind == "train" and file_kind is not None and str(file_kind).startswith("train-"):
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigError(f"config kind {file_kind!r} does not match the requested {kind!r}")
    if kind == "train":
        # mode left open: follow the scenario preset
        drifting = values.get("scenario") == "nonstationary-default"
        kind = "train-nonstationary" if drifting else "train-stationary"
    if kind is None:
        raise ConfigError("config must set 'kind'")
    name = values.get("scenario") or DEFAULT_PRESET.get(kind)
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario preset {name!r}; choose from {', '.join(PRESETS)}")
    preset = PRESETS[name]

    try:
        scen = preset.scenario.with_(**{k: values[k] for k in _SCENARIO_KEYS if k in values})
        scen = _apply_speed(scen, values)
        train = preset.train.with_(**{k: values[k] for k in _TRAIN_KEYS if k in values})
        th = asdict(preset.theta0)
        th.update({v: values[k] for k, v in _THETA_KEYS.items() if k in values})
        theta0 = Theta(**th)
        grid = tuple(default_grid(values.get("grid_stop", 12.0), values.get("grid_step", 0.5)).tolist())
        start = values.get("grid_start", 0.0)
        grid = tuple(g for g in grid if g >= start - 1e-12)
    except (HqmError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    counts = values.get("counts_csv")
    if counts is not None and base_dir is not None and not Path(counts).is_absolute():
        counts = base_dir / counts
    if seed is None:
        seed = int(values.get("seed", 0))
    if out_dir is None:
        out_dir = values.get("out", "out")
    return RunConfig(
        kind,
        scen,
        train,
        theta0,
        Path(out_dir),
        seed,
        values.get("source", preset.source),
        counts,
        values.get("warmup"),
        grid,
    )


def _apply_speed(scen: ScenarioSpec, values: dict) -> ScenarioSpec:
    if "speed_kmh" in values:
        if _SPEED_KEYS - {"speed_kmh"} & set(values):
            raise ConfigError("use either speed_kmh or the speed_start_kmh/speed_end_kmh/ramp_seconds ramp")
        return scen.with_(speed_schedule=((0.0, float(values["speed_kmh"])),))
    ramp = {"speed_start_kmh", "speed_end_kmh"} & set(values)
    if ramp:
        if ramp != {"speed_start_kmh", "speed_end_kmh"}:
            raise ConfigError("a speed ramp needs both speed_start_kmh and speed_end_kmh")
        duration = values.get("ramp_seconds", scen.duration_s)
        return scen.with_(speed_schedule=ScenarioSpec.ramp(values["speed_start_kmh"], values["speed_end_kmh"], duration))
    if "ramp_seconds" in values:
        raise ConfigError("ramp_seconds needs speed_start_kmh and speed_end_kmh")
    return scen


def load_config(path, kind: str | None = None, seed: int | None = None, out_dir=None) -> RunConfig:
    """Read a flat JSON object of documented keys (see ``CONFIG_KEYS``)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        values = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: expected a JSON object of key/value pairs")
    return config_from_mapping(values, kind, seed, out_dir, base_dir=path.parent)


# ---------------------------------------------------------------- running


@dataclass
class MetricsReport:
    """Outcome of one experiment.

    ``error_pct`` skips ``warmup`` ticks; ``error_pct_all`` does not.
    """

    kind: str
    error_pct: float
    error_pct_all: float
    per_tick_error: np.ndarray = field(repr=False)
    theta0: Theta
    theta_final: Theta
    warmup: int
    wall_seconds: float = 0.0
    extra: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        """JSON-ready summary without timing, so reruns write identical bytes."""
        return {
            "kind": self.kind,
            "error_pct": self.error_pct,
            "error_pct_all": self.error_pct_all,
            "warmup_ticks": self.warmup,
            "theta0": asdict(self.theta0),
            "theta_final": asdict(self.theta_final),
            **self.extra,
        }


@dataclass
class _Data:
    demand: DemandSeries
    observed: ObservationSeries
    background_vph: float | None = None


def _ground_truth(cfg: RunConfig) -> _Data:
    scen = cfg.scenario
    if cfg.source == "csv":
        obs, demand = _read_counts(cfg.counts_csv, scen.platoon_size)
        if len(obs) == 0:
            raise DomainError(f"{cfg.counts_csv} contains no ticks")
        return _Data(demand, obs)
    demand = gen_demand(scen)
    if cfg.source == "synthetic":
        truth = scen.true_params()
        return _Data(demand, synthetic_hqm_oracle(truth, demand, scen.noise, scen.seed))
    res = edbm_simulate(scen, demand)
    return _Data(demand, res.observations, res.noncav_throughput_vph)


def _warmup(cfg: RunConfig, n: int) -> int:
    if cfg.warmup is not None:
        w = cfg.warmup
    else:
        w = HqmParams.ticks_from_seconds(float(cfg.scenario.traverse_time_at(0.0)), cfg.scenario.tick_seconds)
    return min(w, max(n - 1, 0))


def _counts_of(theta: Theta, demand: DemandSeries) -> ObservationSeries:
    traj = simulate(theta.for_demand(demand), demand)
    return ObservationSeries(traj.m_hat, traj.n_hat, demand.tick_seconds)


def run_experiment(cfg: RunConfig) -> MetricsReport:
    """Run one study end to end and write its artifacts to ``cfg.out_dir``.

    Files are staged in a scratch directory and only moved into place once
    the whole study succeeds.
    """
    t0 = time.perf_counter()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".partial-", dir=cfg.out_dir))
    try:
        report = _STUDIES[cfg.kind](cfg, stage)
        (stage / "metrics.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
        report.files = sorted(p.name for p in stage.iterdir())
        for name in report.files:
            (stage / name).replace(cfg.out_dir / name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    report.wall_seconds = time.perf_counter() - t0
    return report


def _study_simulate(cfg: RunConfig, out: Path) -> MetricsReport:
    data = _ground_truth(cfg)
    pred = _counts_of(cfg.theta0, data.demand)
    write_counts_csv(data.observed, out / "counts.csv", data.demand)
    write_counts_csv(pred, out / "predicted_counts.csv", data.demand)
    return _report(cfg, pred, data, cfg.theta0, {"source": cfg.source})


def _study_validate(cfg: RunConfig, out: Path) -> MetricsReport:
    data = _ground_truth(cfg)
    pred = _counts_of(cfg.theta0, data.demand)
    write_counts_csv(pred, out / "predicted_counts.csv", data.demand)
    return _report(cfg, pred, data, cfg.theta0, {"source": cfg.source})


def _study_train(cfg: RunConfig, out: Path) -> MetricsReport:
    data = _ground_truth(cfg)
    mode = Mode.NONSTATIONARY if cfg.kind == "train-nonstationary" else Mode.STATIONARY
    history = run_online_training(data.demand, data.observed, cfg.train, cfg.theta0, mode)
    online = ObservationSeries(online_prediction(history, data.demand), np.zeros(len(data.demand)), data.demand.tick_seconds)
    final = _counts_of(history.final, data.demand)
    nominal = _counts_of(cfg.theta0, data.demand)
    write_counts_csv(data.observed, out / "counts.csv", data.demand)
    write_counts_csv(final, out / "predicted_counts.csv", data.demand)
    write_theta_csv(history, out / "theta.csv")
    w = _warmup(cfg, len(data.demand))
    extra = {
        "source": cfg.source,
        "mode": mode.value,
        "final_theta_error_pct": _error_or_zero(final, data.observed, w),
        "nominal_error_pct": _error_or_zero(nominal, data.observed, w),
        "retrain_ticks": len(history),
    }
    if mode is Mode.NONSTATIONARY and len(history) > 1:
        scen = cfg.scenario
        nominal_T = scen.traverse_time_at(history.ticks * scen.tick_seconds) / scen.tick_seconds
        learned_T = history.series("T").astype(float)
        extra["T_correlation"] = _pearson(learned_T, nominal_T)
        extra["final_T_nominal"] = float(nominal_T[-1])
    return _report(cfg, online, data, history.final, extra)


def _study_sweep(cfg: RunConfig, out: Path) -> MetricsReport:
    scen = cfg.scenario
    demand = gen_demand(scen)
    res = edbm_simulate(scen, demand)
    if cfg.source == "synthetic":
        observed = synthetic_hqm_oracle(scen.true_params(), demand, scen.noise, scen.seed)
    else:
        observed = res.observations
    data = _Data(demand, observed, res.noncav_throughput_vph)
    history = run_online_training(demand, observed, cfg.train, cfg.theta0, Mode.STATIONARY)
    th = history.final
    b = res.noncav_throughput_vph
    delta_star = optimal_headway(scen.platoon_size, th.gamma, th.F, b)
    sweep = sweep_headway(scen, demand, np.array(cfg.grid))
    write_counts_csv(observed, out / "counts.csv", demand)
    write_theta_csv(history, out / "theta.csv")
    write_sweep_csv(sweep, out / "sweep.csv")
    final = _counts_of(th, demand)
    extra = {
        "source": cfg.source,
        "background_flow_vph": b,
        "delta_star_s": delta_star,
        "sweep_argmin_s": sweep.argmin,
        "sweep_step_s": float(np.min(np.diff(sweep.deltas))) if len(sweep.deltas) > 1 else 0.0,
    }
    return _report(cfg, final, data, th, extra)


def _report(cfg: RunConfig, pred, data: _Data, theta_final: Theta, extra: dict) -> MetricsReport:
    w = _warmup(cfg, len(data.demand))
    return MetricsReport(
        kind=cfg.kind,
        error_pct=_error_or_zero(pred, data.observed, w),
        error_pct_all=_error_or_zero(pred, data.observed, 0),
        per_tick_error=per_tick_error(pred, data.observed),
        theta0=cfg.theta0,
        theta_final=theta_final,
        warmup=w,
        extra=extra,
    )


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.std(x) == 0 or np.std(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


_STUDIES = {
    "simulate": _study_simulate,
    "validate": _study_validate,
    "train-stationary": _study_train,
    "train-nonstationary": _study_train,
    "sweep": _study_sweep,
}
