import csv
import dataclasses
import json
import os

import numpy as np
import pytest

from lrcd.config import (
    ConfigError, ExperimentConfig, config_hash, dumps, dyadic_grid, load, loads, model_from_dict,
    model_to_dict,
)
from lrcd.duration_models import AcdSpec, IidRenewalSpec, InnovationSpec, LmsdSpec
from lrcd.estimators import VarianceTimeCurve
from lrcd.gaussian_lm import LongMemoryGaussianSpec
from lrcd.harness import DETERMINISTIC_FILES, IngestError, ingest_timestamps, run_experiment
from lrcd.point_process import PALM, STATIONARY, CountSeries
from lrcd.seeding import ordered_map, replication_seed, splitmix64


def _config(**kw):
    base = dict(
        model=LmsdSpec(LongMemoryGaussianSpec.with_variance(0.3, 0.5)), regime=STATIONARY,
        horizon=512.0, delta_t=1.0, t_grid=dyadic_grid(2, 8), levels=(2, 4), reps=6, seed=77,
        experiment_id="unit")
    base.update(kw)
    return ExperimentConfig(**base)


def _read(path):
    return {name: open(os.path.join(path, name), "rb").read() for name in DETERMINISTIC_FILES}


def test_splitmix_reference_value():
    # first output of SplitMix64 seeded with 0 is 0xE220A8397B1DCDAF
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    seeds = {replication_seed(5, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]


@pytest.mark.parametrize("model", [
    LmsdSpec(LongMemoryGaussianSpec(0.25, 0.7, 0.2, 1.5), InnovationSpec("gamma", 2.0)),
    AcdSpec(0.1, 0.1, 0.8),
    IidRenewalSpec(InnovationSpec("degenerate"), 3.0),
])
def test_config_round_trip(model):
    cfg = _config(model=model, regime=PALM, bandwidth=16)
    back = loads(dumps(cfg))
    assert back == cfg
    assert dumps(back) == dumps(cfg)
    assert config_hash(back) == config_hash(cfg)
    assert model_from_dict(model_to_dict(model)) == model


def test_config_hash_changes_with_content():
    assert config_hash(_config()) != config_hash(_config(seed=78))


def test_canonical_dump_sorted():
    text = dumps(_config())
    exp_keys = [line.split(" =")[0] for line in text.split("[model]")[0].splitlines()
                if " = " in line]
    assert exp_keys == sorted(exp_keys)


def test_config_reports_every_violation():
    text = dumps(_config()).replace("reps = 6", "reps = 0").replace("delta_t = 1.0",
                                                                     "delta_t = -1.0")
    text = text.replace("horizon = 512.0", "horizon = 100.0")
    with pytest.raises(ConfigError) as info:
        loads(text)
    joined = "\n".join(info.value.errors)
    assert "reps" in joined and "delta_t" in joined and "horizon" in joined
    assert len(info.value.errors) >= 3


def test_config_structural_errors():
    with pytest.raises(ConfigError) as info:
        loads('[experiment]\nfoo = 1\n[model]\nkind = "garch"\n')
    text = str(info.value)
    assert "model" in text and "foo" in text and "horizon is required" in text
    with pytest.raises(ConfigError):
        loads("not toml = = 3")


def test_lmsd_var_h_key():
    m = model_from_dict({"kind": "lmsd", "d": 0.3, "var_h": 0.5})
    assert m.gaussian.variance == pytest.approx(0.5)
    with pytest.raises(ValueError):
        model_from_dict({"kind": "lmsd", "d": 0.3, "var_h": 0.5, "sigma_e": 1.0})


def test_example_config_loads():
    root = os.path.dirname(os.path.dirname(__file__))
    cfg = load(os.path.join(root, "configs", "lmsd_d030.toml"))
    assert cfg.model.memory_d == 0.3


def test_run_experiment_smoke(tmp_path):
    cfg = _config(reps=1, horizon=64.0, t_grid=(4.0, 16.0, 64.0), levels=(2,))
    report = run_experiment(cfg, out_dir=str(tmp_path))
    for name in DETERMINISTIC_FILES + ("timing.json",):
        assert (tmp_path / name).exists(), name
    headers = {
        "variance_time.csv": ["t", "var_hat", "se", "reps"],
        "aggregated_acf.csv": ["level", "rho_mean", "rho_se", "reps_used"],
        "replications.csv": ["rep", "seed", "n_events", "d_gph"],
        "counts_rep0.csv": ["bin_index", "count"],
    }
    for name, header in headers.items():
        with open(tmp_path / name, newline="") as fh:
            assert next(csv.reader(fh)) == header
    assert report["config_hash"] == config_hash(cfg)
    assert json.loads((tmp_path / "report.json").read_text())["experiment_id"] == "unit"
    assert loads((tmp_path / "config.toml").read_text()) == cfg
    counts = CountSeries.from_csv(tmp_path / "counts_rep0.csv", cfg.delta_t)
    assert len(counts) == 64


def test_run_experiment_outputs_parse_back(tmp_path):
    cfg = _config(reps=3)
    run_experiment(cfg, out_dir=str(tmp_path))
    curve = VarianceTimeCurve.from_csv(tmp_path / "variance_time.csv")
    np.testing.assert_array_equal(curve.t_grid, cfg.t_grid)
    assert curve.reps == 3


def test_run_experiment_deterministic(tmp_path):
    cfg = _config()
    run_experiment(cfg, workers=1, out_dir=str(tmp_path / "a"))
    run_experiment(cfg, workers=1, out_dir=str(tmp_path / "b"))
    run_experiment(cfg, workers=8, out_dir=str(tmp_path / "c"))
    a, b, c = (_read(tmp_path / k) for k in "abc")
    assert a == b == c


def test_run_experiment_rejects_invalid(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(dataclasses.replace(_config(), reps=0), out_dir=str(tmp_path))


def _write(tmp_path, text, name="ticks.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_ingest_basic(tmp_path):
    events, series, summary = ingest_timestamps(_write(tmp_path, "1.0\n3.0\n6.0\n"))
    np.testing.assert_array_equal(series.durations, [2.0, 3.0])
    np.testing.assert_array_equal(events.times, [2.0, 5.0])
    assert summary.n_events == 3 and summary.span == 5.0


def test_ingest_two_column_csv(tmp_path):
    _, series, _ = ingest_timestamps(_write(tmp_path, "id,timestamp\na,1.5\nb,2.0\nc,4.0\n"))
    np.testing.assert_array_equal(series.durations, [0.5, 2.0])


def test_ingest_duplicates(tmp_path):
    path = _write(tmp_path, "1.0\n2.0\n2.0\n4.0\n")
    _, series, summary = ingest_timestamps(path, "drop")
    np.testing.assert_array_equal(series.durations, [1.0, 2.0])
    assert summary.zero_durations == 1
    _, jittered, _ = ingest_timestamps(path, "jitter", jitter=1e-3, seed=1)
    assert len(jittered) == 3 and np.all(jittered.durations > 0)
    with pytest.raises(IngestError):
        ingest_timestamps(path, "error")


def test_ingest_unsorted_warns(tmp_path):
    with pytest.warns(UserWarning, match="2 out-of-order"):
        _, series, summary = ingest_timestamps(_write(tmp_path, "5.0\n1.0\n3.0\n2.0\n"))
    np.testing.assert_array_equal(series.durations, [1.0, 1.0, 2.0])
    assert summary.unsorted == 2


def test_ingest_errors(tmp_path):
    with pytest.raises(IngestError, match=":2:"):
        ingest_timestamps(_write(tmp_path, "1.0\nabc\n"))
    with pytest.raises(IngestError, match="no timestamps"):
        ingest_timestamps(_write(tmp_path, "\n", "empty.txt"))
    with pytest.raises(ValueError):
        ingest_timestamps(_write(tmp_path, "1\n2\n"), "keep")
