import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hqmkit import ConfigError, CsvFormatError, DemandSeries, DomainError, ObservationSeries
from hqmkit.cli import main
from hqmkit.experiments import (
    PRESETS,
    config_from_mapping,
    load_config,
    load_counts_csv,
    load_demand_csv,
    load_sweep_csv,
    load_theta_csv,
    percentage_error,
    run_experiment,
    write_counts_csv,
)

SMALL = {"horizon": 240, "noncav_vph": 2600, "cav_vph": 1200}


class TestPercentageError:
    def test_identical(self):
        assert percentage_error([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_ten_percent(self):
        assert percentage_error(np.full(5, 11.0), np.full(5, 10.0)) == pytest.approx(10.0)

    def test_warmup_and_zero_ticks(self):
        assert percentage_error([5.0, 0.0, 3.0, 2.0], [1.0, 0.0, 2.0, 2.0], warmup=1) == pytest.approx(25.0)

    def test_no_positive_ticks(self):
        with pytest.raises(DomainError):
            percentage_error([1.0, 1.0], [0.0, 0.0])

    def test_bad_warmup(self):
        with pytest.raises(DomainError):
            percentage_error([1.0], [1.0], warmup=1)

    @given(st.lists(st.tuples(st.floats(0, 100), st.one_of(st.just(0.0), st.floats(1e-6, 100))), min_size=2, max_size=50), st.integers(0, 1))
    def test_against_plain_loop(self, pairs, warmup):
        pred = [p for p, _ in pairs]
        obs = [o for _, o in pairs]
        terms = [abs(p - o) / o for p, o in pairs[warmup:] if o > 0]
        if not terms:
            with pytest.raises(DomainError):
                percentage_error(pred, obs, warmup)
        else:
            assert percentage_error(pred, obs, warmup) == pytest.approx(100 * sum(terms) / len(terms), rel=1e-9)


class TestCountsCsv:
    def test_round_trip(self, tmp_path, rng):
        n = 50
        obs = ObservationSeries(rng.random(n) * 40, rng.integers(0, 5, n) * 10 / 3, 5.0)
        d = DemandSeries(rng.random(n) * 3, rng.integers(0, 2, n) * 10, 5.0)
        p = tmp_path / "c.csv"
        write_counts_csv(obs, p, d)
        back = load_counts_csv(p)
        np.testing.assert_allclose(back.m, obs.m, atol=1e-9)
        np.testing.assert_allclose(back.n, obs.n, atol=1e-9)
        assert back.tick_seconds == 5.0
        dd = load_demand_csv(p)
        np.testing.assert_allclose(dd.a, d.a, atol=1e-9)
        np.testing.assert_array_equal(dd.b, d.b)

    def test_header_only(self, tmp_path, caplog):
        p = tmp_path / "c.csv"
        p.write_text("tick,t_seconds,m,n,a,b\n")
        assert len(load_counts_csv(p)) == 0
        assert "no rows" in caplog.text

    @pytest.mark.parametrize(
        "rows,line",
        [
            (["1,5.0,1.0,0.0,0.0,0", "2,10.0,-1.0,0.0,0.0,0"], 3),
            (["1,5.0,1.0,0.0,0.0,0", "1,5.0,1.0,0.0,0.0,0"], 3),
            (["1,5.0,1.0,0.0,0.0,7"], 2),
            (["1,5.0,1.0,0.0"], 2),
            (["1,5.0,x,0.0,0.0,0"], 2),
        ],
    )
    def test_rejects_with_line(self, tmp_path, rows, line):
        p = tmp_path / "c.csv"
        p.write_text("tick,t_seconds,m,n,a,b\n" + "\n".join(rows) + "\n")
        with pytest.raises(CsvFormatError) as exc:
            load_counts_csv(p)
        assert exc.value.line == line

    def test_bad_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("tick,m,n\n")
        with pytest.raises(CsvFormatError):
            load_counts_csv(p)


def _cfg(kind, tmp_path, **extra):
    values = dict(SMALL)
    values.update(extra)
    return config_from_mapping(values, kind, 11, tmp_path)


class TestRunExperiment:
    def test_zero_demand_simulation(self, tmp_path):
        rep = run_experiment(_cfg("simulate", tmp_path, noncav_vph=0, cav_vph=0))
        obs = load_counts_csv(tmp_path / "counts.csv")
        assert not obs.m.any() and not obs.n.any()
        assert rep.error_pct == 0.0
        assert sorted(rep.files) == ["counts.csv", "metrics.json", "predicted_counts.csv"]

    def test_train_synthetic_recovers(self, tmp_path):
        cfg = _cfg(
            "train-stationary", tmp_path, source="synthetic", horizon=600, train_gamma=False,
            theta0_gamma=3.0, step_rho=0.1, step_F=200.0, retrain_every=50,
        )
        rep = run_experiment(cfg)
        truth = cfg.scenario.true_params()
        th = rep.theta_final
        assert abs(th.F - truth.capacity) <= 0.05 * truth.capacity
        assert abs(th.rho - truth.priority) <= 0.1
        assert abs(th.T - truth.traverse_ticks) <= 1
        rows = load_theta_csv(tmp_path / "theta.csv")
        assert rows[-1][1] == th

    def test_error_matches_emitted_files(self, tmp_path):
        rep = run_experiment(_cfg("validate", tmp_path))
        # recompute with the csv module only
        def totals(name):
            with open(tmp_path / name) as fh:
                return [float(r["m"]) + float(r["n"]) for r in csv.DictReader(fh)]

        run_experiment(_cfg("simulate", tmp_path / "sim"))
        obs = totals("sim/counts.csv")
        pred = totals("predicted_counts.csv")
        terms = [abs(p - o) / o for p, o in list(zip(pred, obs))[rep.warmup :] if o > 0]
        assert rep.error_pct == pytest.approx(100 * sum(terms) / len(terms), abs=1e-9)
        summary = json.loads((tmp_path / "metrics.json").read_text())
        assert summary["error_pct"] == rep.error_pct

    def test_sweep_small(self, tmp_path):
        rep = run_experiment(
            _cfg("sweep", tmp_path, horizon=720, noncav_vph=1270, cav_vph=3000, max_iters=20, grid_stop=6.0, grid_step=1.0)
        )
        sweep = load_sweep_csv(tmp_path / "sweep.csv")
        np.testing.assert_array_equal(sweep.deltas, [0, 1, 2, 3, 4, 5, 6])
        assert rep.extra["sweep_argmin_s"] == sweep.argmin
        assert rep.extra["delta_star_s"] > 0

    def test_validate_from_csv(self, tmp_path):
        run_experiment(_cfg("simulate", tmp_path / "a"))
        rep = run_experiment(_cfg("validate", tmp_path / "b", source="csv", counts_csv=str(tmp_path / "a" / "counts.csv")))
        sim = json.loads((tmp_path / "a" / "metrics.json").read_text())
        assert rep.error_pct == pytest.approx(sim["error_pct"])

    def test_failure_leaves_nothing(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("tick,t_seconds,m,n,a,b\n1,5.0,1.0,0.0,0.0,0\n2,10.0,-3,0.0,0.0,0\n")
        out = tmp_path / "out"
        with pytest.raises(CsvFormatError):
            run_experiment(_cfg("validate", out, source="csv", counts_csv=str(bad)))
        assert list(out.iterdir()) == []


class TestConfig:
    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="colour"):
            config_from_mapping({"colour": "red"}, "simulate")

    def test_kind_mismatch(self, tmp_path):
        with pytest.raises(ConfigError):
            config_from_mapping({"kind": "sweep"}, "simulate")

    def test_csv_source_needs_file(self, tmp_path):
        with pytest.raises(ConfigError):
            config_from_mapping({"source": "csv"}, "validate")
        with pytest.raises(ConfigError):
            config_from_mapping({"source": "csv", "counts_csv": str(tmp_path / "missing.csv")}, "validate")

    def test_bad_value_is_config_error(self):
        with pytest.raises(ConfigError):
            config_from_mapping({"true_priority": 3.0}, "simulate")

    def test_file_and_overrides(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"kind": "train-nonstationary", "horizon": 100, "seed": 3, "speed_start_kmh": 90, "speed_end_kmh": 70}))
        cfg = load_config(p, "train", seed=8, out_dir=tmp_path)
        assert cfg.kind == "train-nonstationary" and cfg.seed == 8 and cfg.scenario.seed == 8
        assert cfg.train.seed == 8 and cfg.scenario.horizon == 100
        assert cfg.scenario.speed_at(0) == 90 and cfg.scenario.speed_at(1e9) == 70

    def test_train_follows_preset(self):
        assert config_from_mapping({"scenario": "nonstationary-default"}, "train").kind == "train-nonstationary"
        assert config_from_mapping({}, "train").kind == "train-stationary"

    def test_presets_exist(self):
        assert set(PRESETS) == {"stationary-default", "nonstationary-default", "sweep-default"}


class TestCli:
    def _write(self, tmp_path, **values):
        p = tmp_path / "cfg.json"
        v = dict(SMALL)
        v.update(values)
        p.write_text(json.dumps(v))
        return p

    def test_simulate(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["simulate", "--config", str(self._write(tmp_path)), "--seed", "1", "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["kind"] == "simulate"
        assert (out / "counts.csv").is_file()

    def test_train_mode_flag(self, tmp_path, capsys):
        out = tmp_path / "o"
        cfg = self._write(tmp_path, speed_start_kmh=100, speed_end_kmh=60)
        assert main(["train", "--mode", "nonstationary", "--config", str(cfg), "--out", str(out)]) == 0
        assert json.loads(capsys.readouterr().out)["mode"] == "nonstationary"

    @pytest.mark.parametrize(
        "argv,code,kind",
        [
            (["simulate", "--config", "/nonexistent.json"], 2, "ConfigError"),
            (["simulate", "--seed", "-4"], 2, "UsageError"),
            (["launch"], 2, "UsageError"),
        ],
    )
    def test_errors(self, argv, code, kind, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == code
        line = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert line["error"] == kind and line["message"]

    def test_runtime_error_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("tick,t_seconds,m,n,a,b\n1,5.0,oops,0,0,0\n")
        cfg = self._write(tmp_path, source="csv", counts_csv="bad.csv")
        with pytest.raises(SystemExit) as exc:
            main(["validate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert exc.value.code == 1
        line = json.loads(capsys.readouterr().err.strip())
        assert line["error"] == "CsvFormatError" and "line 2" in line["message"]
