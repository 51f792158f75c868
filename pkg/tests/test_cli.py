import json

import numpy as np
import pandas as pd
import pytest

from lmsc_hmm.src.cli.config import (ExperimentConfig, from_settings,
                                     load_experiment_config)
from lmsc_hmm.src.cli.experiments import (ExperimentResult, json_safe,
                                          run_experiment)
from lmsc_hmm.src.cli.main import (EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL,
                                   EXIT_OK, build_parser, main)
from lmsc_hmm.src.cli.outputs import (MODE_COLUMNS, STAMP_COLUMNS,
                                      emit_outputs, format_table, load_report)
from lmsc_hmm.src.common.configs import load_json_config
from lmsc_hmm.src.common.exceptions import ConfigError

from conftest import BENCHMARK_MATRIX

SWEEP_COLUMNS = ["method", "mu1", "bhattacharyya", "p12_hat", "p1_hat", "error_share", "p21_hat", "status",
                 "seed", "config_hash"]

GAUSSIAN_MODEL = {
    "transition_matrix": BENCHMARK_MATRIX,
    "emissions": [{"type": "gaussian", "mu": 0.4, "sigma": 0.2}, {"type": "gaussian", "mu": 1.0, "sigma": 0.2}],
}


def _small_sweep(**overrides):
    settings = {
        "schema": 1,
        "mode": "sweep",
        "seed": 7,
        "workers": 1,
        "n": 1_500,
        "mu1_grid": [0.4, 0.7],
        "mu2": 1.0,
        "sigma": 0.2,
        "chain": {"transition_matrix": BENCHMARK_MATRIX},
        "methods": ["BW", "T1", "T10"],
        "bw": {"max_iters": 20, "tol": 1e-6, "stay": 0.5},
    }
    settings.update(overrides)
    return settings


def _small_pipeline(**overrides):
    settings = {
        "schema": 1,
        "mode": "pipeline",
        "seed": 3,
        "trace": {"path": None, "spacing_m": 1.0, "synthetic": {"n": 8_000, "sample_spacing_m": 0.25, "correlation": 0.7}},
        "families": ["rice", "lognormal", "rayleigh"],
        "bins": 40,
        "restarts": 1,
        "annealing": {"steps_per_temperature": 10, "min_temperature_ratio": 1e-2},
        "bw": {"max_iters": 15},
        "baseline_spans": [1, 10],
    }
    settings.update(overrides)
    return settings


def _write_config(tmp_path, settings, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(settings), encoding="utf-8")
    return path


@pytest.mark.parametrize("mode", ["simulate", "fit-bw", "baseline", "sweep", "curve-fit", "pipeline"])
def test_bundled_configs_are_valid(mode):
    config = load_experiment_config(None, mode)
    assert config.mode == mode
    assert config.seed == 2009
    assert len(config.config_hash) == 16


def test_config_validation_errors():
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(schema=2))
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(seed=-1))
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(mu1_grid=[1.2]))
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(methods=["BW", "median"]))
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(chain={"transition_matrix": [[0.9, 0.2], [0.5, 0.5]]}))
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(bw={"stay": 1.0}))
    with pytest.raises(ConfigError):
        from_settings(_small_sweep(bw={"start": "truth"}))
    with pytest.raises(ConfigError):
        from_settings(_small_pipeline(families=["nakagami"]))
    with pytest.raises(ConfigError):
        from_settings(_small_pipeline(annealing={"seed": 1}))
    with pytest.raises(ConfigError):
        from_settings({"schema": 1, "mode": "fit-bw", "seed": 1, "n": 10, "model": {"emissions": []}})


def test_mode_mismatch_is_rejected(tmp_path):
    path = _write_config(tmp_path, _small_sweep())
    with pytest.raises(ConfigError):
        load_experiment_config(path, "pipeline")


def test_unreadable_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_json_config(path)


def test_config_hash_ignores_workers_but_not_seed():
    base = from_settings(_small_sweep())
    assert from_settings(_small_sweep(workers=4)).config_hash == base.config_hash
    assert from_settings(_small_sweep(seed=8)).config_hash != base.config_hash
    reordered = from_settings(dict(reversed(list(_small_sweep().items()))))
    assert reordered.config_hash == base.config_hash


def test_overrides_replace_top_level_keys(tmp_path):
    path = _write_config(tmp_path, _small_sweep())
    config = load_experiment_config(path, "sweep", {"seed": 99, "workers": None})
    assert config.seed == 99
    assert config.get("workers") == 1


def test_sweep_rows_and_columns():
    result = run_experiment(from_settings(_small_sweep()))
    assert len(result.rows) == 2 * 3
    assert [row["method"] for row in result.rows] == ["BW", "T1", "T10", "BW", "T1", "T10"]
    assert all(row["status"] == "ok" for row in result.rows)
    assert result.rows[0]["bhattacharyya"] == pytest.approx(1.125, abs=1e-3)
    assert result.summary["failed_rows"] == 0
    assert len({row["seed"] for row in result.rows}) == 2


def test_sweep_does_not_depend_on_workers():
    serial = run_experiment(from_settings(_small_sweep()))
    parallel = run_experiment(from_settings(_small_sweep(workers=2)))
    assert serial == parallel


def test_sweep_weights_start_with_restarts():
    settings = _small_sweep(methods=["BW"], bw={"max_iters": 20, "stay": 0.92, "start": "weights", "restarts": 2})
    serial = run_experiment(from_settings(settings))
    assert all(row["status"] == "ok" for row in serial.rows)
    assert serial == run_experiment(from_settings({**settings, "workers": 2}))


def test_main_writes_the_sweep_files(tmp_path):
    path = _write_config(tmp_path, _small_sweep())
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(path), "--out-dir", str(out)]) == EXIT_OK

    frame = pd.read_csv(out / "results.csv")
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 6

    table = (out / "table.txt").read_text(encoding="utf-8")
    assert "Estimated state probability p1" in table
    assert "config hash:" in table

    restored = load_report(out / "report.json")
    assert len(restored) == 1
    assert restored[0].rows == run_experiment(from_settings(_small_sweep())).rows


def test_rerun_gives_identical_files(tmp_path):
    path = _write_config(tmp_path, _small_sweep(methods=["T1", "T10"]))
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(path), "--out-dir", str(first)]) == EXIT_OK
    assert main(["sweep", "--config", str(path), "--out-dir", str(second), "--workers", "2"]) == EXIT_OK
    for name in ("results.csv", "report.json", "table.txt"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_json_results_format(tmp_path):
    path = _write_config(tmp_path, _small_sweep(methods=["T1"], mu1_grid=[0.5]))
    out = tmp_path / "json"
    assert main(["sweep", "--config", str(path), "--out-dir", str(out), "--format", "json"]) == EXIT_OK
    payload = json.loads((out / "results.json").read_text(encoding="utf-8"))
    assert payload["columns"] == SWEEP_COLUMNS
    assert len(payload["rows"]) == 1


def test_empty_results_write_headers_only(tmp_path):
    written = emit_outputs([], tmp_path, mode="sweep")
    assert written["results"].read_text(encoding="utf-8").strip() == ",".join(MODE_COLUMNS["sweep"] + STAMP_COLUMNS)
    assert json.loads(written["report"].read_text(encoding="utf-8"))["results"] == []
    assert format_table([], mode="sweep").startswith("method")


def test_report_round_trip():
    result = ExperimentResult(
        mode="fit-bw", config_hash="0123456789abcdef", seed=1,
        rows=[{"method": "BW", "state": 1, "p_hat": 0.25}], summary={"n": 4}, warnings=["w"],
    )
    assert ExperimentResult.from_dict(json.loads(json.dumps(result.to_dict()))) == result


def test_json_safe_values():
    assert json_safe({"a": np.float64(np.inf), "b": (np.int64(2), np.bool_(True)), "c": np.array([0.5])}) == {
        "a": None, "b": [2, True], "c": [0.5]
    }


def test_simulate_mode(tmp_path):
    settings = {"schema": 1, "mode": "simulate", "seed": 5, "n": 5_000, "model": GAUSSIAN_MODEL}
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(_write_config(tmp_path, settings)), "--out-dir", str(out)]) == EXIT_OK
    frame = pd.read_csv(out / "results.csv")
    assert list(frame["state"]) == [1, 2]
    np.testing.assert_allclose(frame["duration_true"], [20.0, 40.0])
    samples = pd.read_csv(out / "observations.csv")
    assert list(samples.columns) == ["state", "amplitude"]
    assert len(samples) == 5_000


def test_fit_bw_and_baseline_on_an_observation_file(tmp_path):
    simulated = tmp_path / "sim"
    settings = {"schema": 1, "mode": "simulate", "seed": 5, "n": 3_000, "model": GAUSSIAN_MODEL}
    assert main(["simulate", "--config", str(_write_config(tmp_path, settings)), "--out-dir", str(simulated)]) == EXIT_OK

    model = {"emissions": GAUSSIAN_MODEL["emissions"]}
    observations = str(simulated / "observations.csv")
    fit_settings = {"schema": 1, "mode": "fit-bw", "seed": 5, "observations": observations, "model": model,
                    "bw": {"max_iters": 30}}
    result = run_experiment(from_settings(fit_settings))
    assert [row["state"] for row in result.rows] == [1, 2]
    assert result.rows[0]["error_share"] is None
    assert sum(row["p_hat"] for row in result.rows) == pytest.approx(1.0, abs=1e-9)

    baseline_settings = {"schema": 1, "mode": "baseline", "seed": 5, "observations": observations, "model": model,
                         "spans": [1, 10]}
    baseline = run_experiment(from_settings(baseline_settings))
    assert [row["method"] for row in baseline.rows] == ["T1", "T1", "T10", "T10"]
    assert baseline.summary["classifiers"]["T1"]["thresholds"] == [pytest.approx(0.7)]


def test_exit_codes(tmp_path):
    bad_schema = _write_config(tmp_path, _small_sweep(schema=3), "schema.json")
    assert main(["sweep", "--config", str(bad_schema), "--out-dir", str(tmp_path / "x")]) == EXIT_CONFIG

    missing = {"schema": 1, "mode": "fit-bw", "seed": 1, "observations": str(tmp_path / "none.csv"),
               "model": {"emissions": GAUSSIAN_MODEL["emissions"]}}
    assert main(["fit-bw", "--config", str(_write_config(tmp_path, missing, "missing.json"))]) == EXIT_IO

    (tmp_path / "impossible.csv").write_text("amplitude\n0.5\n-0.2\n0.7\n", encoding="utf-8")
    impossible = {"schema": 1, "mode": "fit-bw", "seed": 1, "observations": str(tmp_path / "impossible.csv"),
                  "model": {"emissions": [{"type": "rayleigh", "sigma": 0.3}, {"type": "rayleigh", "sigma": 1.0}]}}
    assert main(["fit-bw", "--config", str(_write_config(tmp_path, impossible, "impossible.json")),
                 "--out-dir", str(tmp_path / "y")]) == EXIT_NUMERICAL

    (tmp_path / "garbled.csv").write_text("position_m,amplitude\n0.0,abc\n", encoding="utf-8")
    garbled = _small_pipeline(trace={"path": str(tmp_path / "garbled.csv"), "spacing_m": 1.0})
    assert main(["pipeline", "--config", str(_write_config(tmp_path, garbled, "garbled.json")),
                 "--out-dir", str(tmp_path / "z")]) == EXIT_IO


def test_parser_requires_a_mode():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    args = build_parser().parse_args(["sweep", "--seed", "3", "--workers", "2"])
    assert (args.mode, args.seed, args.workers, args.fmt) == ("sweep", 3, 2, "csv")


def test_small_pipeline_layout(tmp_path):
    result = run_experiment(from_settings(_small_pipeline()))
    assert [row["method"] for row in result.rows] == ["BW"] * 3 + ["T1"] * 3 + ["T10"] * 3
    assert [row["family"] for row in result.rows[:3]] == ["rice", "lognormal", "rayleigh"]
    assert result.summary["n"] == 2_000
    assert set(result.artifacts["density"].columns) == {"amplitude", "empirical_pdf", "fitted_pdf"}

    written = emit_outputs(result, tmp_path)
    assert "Mean state duration [m]" in written["table"].read_text(encoding="utf-8")
    assert written["density"].exists()


def test_curve_fit_on_a_db_trace(tmp_path):
    rng = np.random.default_rng(4)
    amplitudes = 20 * np.log10(rng.rayleigh(0.5, size=2_000))
    pd.DataFrame({"position_m": np.arange(2_000) * 0.5, "amplitude_db": amplitudes}).to_csv(
        tmp_path / "trace.csv", index=False
    )
    settings = {
        "schema": 1, "mode": "curve-fit", "seed": 1,
        "trace": {"path": str(tmp_path / "trace.csv"), "spacing_m": 1.0},
        "families": ["rayleigh"], "bins": 30, "restarts": 1,
        "annealing": {"steps_per_temperature": 20, "min_temperature_ratio": 1e-2},
    }
    result = run_experiment(from_settings(settings))
    assert len(result.rows) == 1
    assert json.loads(result.rows[0]["params"])["sigma"] == pytest.approx(0.5, abs=0.1)
    assert result.summary["n"] == 1_000


# mu1 -> (Bhattacharyya distance, p1 from T1, T10, T20) for the default sweep
BENCHMARK_TABLE = {
    0.4: (1.13, 0.33, 0.31, 0.29),
    0.5: (0.78, 0.32, 0.30, 0.28),
    0.6: (0.50, 0.31, 0.28, 0.26),
    0.7: (0.28, 0.28, 0.22, 0.20),
    0.8: (0.13, 0.22, 0.07, 0.04),
    0.9: (0.03, 0.08, 0.00, 0.00),
}


@pytest.fixture(scope="module")
def benchmark_sweep():
    result = run_experiment(load_experiment_config(None, "sweep"))
    return pd.DataFrame(result.rows).set_index(["mu1", "method"])


@pytest.mark.slow
@pytest.mark.parametrize("mu1", sorted(BENCHMARK_TABLE))
def test_sweep_baum_welch_column(benchmark_sweep, mu1):
    bw = benchmark_sweep.loc[(mu1, "BW")]
    assert bw["status"] == "ok"
    assert bw["bhattacharyya"] == pytest.approx(BENCHMARK_TABLE[mu1][0], abs=0.01)
    assert bw["p1_hat"] == pytest.approx(1 / 3, abs=0.01)
    assert bw["p12_hat"] == pytest.approx(0.05, abs=0.01)
    assert bw["p21_hat"] == pytest.approx(0.025, abs=0.007)


@pytest.mark.slow
@pytest.mark.parametrize("mu1", sorted(BENCHMARK_TABLE))
def test_sweep_threshold_columns(benchmark_sweep, mu1):
    _, t1, t10, t20 = BENCHMARK_TABLE[mu1]
    assert benchmark_sweep.loc[(mu1, "T1"), "p1_hat"] == pytest.approx(t1, abs=0.02)
    assert benchmark_sweep.loc[(mu1, "T10"), "p1_hat"] == pytest.approx(t10, abs=0.03)
    # centered filtering shifts the T20 column slightly against trailing windows
    assert benchmark_sweep.loc[(mu1, "T20"), "p1_hat"] == pytest.approx(t20, abs=0.04)


@pytest.mark.slow
def test_sweep_t20_at_small_separation(benchmark_sweep):
    assert benchmark_sweep.loc[(0.8, "T20"), "p1_hat"] == pytest.approx(0.04, abs=0.03)


@pytest.mark.slow
@pytest.mark.parametrize("method", ["BW", "T1", "T10", "T20"])
def test_sweep_error_share_grows_as_separation_shrinks(benchmark_sweep, method):
    shares = [benchmark_sweep.loc[(mu1, method), "error_share"] for mu1 in sorted(BENCHMARK_TABLE)]
    assert all(b >= a - 0.01 for a, b in zip(shares, shares[1:]))
    if method != "BW":
        assert shares[-1] == pytest.approx(0.33, abs=0.03)


@pytest.mark.slow
def test_sweep_baum_welch_labels_best(benchmark_sweep):
    assert benchmark_sweep.loc[(0.4, "BW"), "error_share"] < 0.05
    for mu1 in BENCHMARK_TABLE:
        bw = benchmark_sweep.loc[(mu1, "BW"), "error_share"]
        assert all(bw <= benchmark_sweep.loc[(mu1, t), "error_share"] + 0.01 for t in ("T1", "T10", "T20"))


@pytest.mark.slow
def test_pipeline_recovers_the_synthetic_model():
    result = run_experiment(load_experiment_config(None, "pipeline"))
    frame = pd.DataFrame(result.rows)
    bw = frame[frame["method"] == "BW"].sort_values("state")
    np.testing.assert_allclose(bw["p_hat"], bw["p_true"], atol=0.03)

    for state in (1, 2, 3):
        durations = frame[frame["state"] == state].set_index("method")["duration_m"]
        assert durations["T1"] < durations["BW"] < durations["T10"]
