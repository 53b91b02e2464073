import json

import numpy as np
import pytest

from kscn.config import (ConfigError, build_experiment, config_to_dict,
                         load_config, parse_config)


class TestParsing:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.dataset.source == "builtin:numerical"
        assert cfg.dataset.n == 600
        assert cfg.split.n_train == 200 and cfg.split.n_val == 100
        assert cfg.supervisory.candidates_per_step == 50
        assert cfg.supervisory.l_max == 100
        assert cfg.supervisory.patience == 5
        assert cfg.trials == 50
        assert len(cfg.kernel.c_grid) == 41
        assert cfg.kernel.tau_grid == [0.1, 0.01, 0.001, 0.0001]
        assert cfg.multipliers == [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key 'nope'"):
            parse_config({"nope": 1})

    def test_unknown_nested_key_path(self):
        with pytest.raises(ConfigError, match="dataset.foo"):
            parse_config({"dataset": {"foo": 1}})

    def test_type_errors_carry_path(self):
        with pytest.raises(ConfigError, match="'trials'"):
            parse_config({"trials": "many"})
        with pytest.raises(ConfigError, match="'kernel.tau'"):
            parse_config({"kernel": {"tau": -1}})
        with pytest.raises(ConfigError, match="supervisory.r_sequence"):
            parse_config({"supervisory": {"r_sequence": [1.5]}})

    def test_model_kind_validation(self):
        with pytest.raises(ConfigError, match="'model'"):
            parse_config({"model": "svm"})
        with pytest.raises(ConfigError, match="models"):
            parse_config({"models": []})

    def test_csv_requires_path(self):
        with pytest.raises(ConfigError, match="dataset.path"):
            parse_config({"dataset": {"source": "csv"}})

    def test_section_seed_fallback(self):
        cfg = parse_config({"supervisory": {"seed": 7}})
        assert cfg.seed == 7
        cfg = parse_config({"supervisory": {"seed": 7}, "seed": 3})
        assert cfg.seed == 3  # top-level wins

    def test_snapshot_roundtrip(self):
        cfg = parse_config({"trials": 9, "kernel": {"c": 2.0, "tau": 0.01}})
        doc = config_to_dict(cfg)
        again = parse_config(json.loads(json.dumps(doc)))
        assert config_to_dict(again) == doc

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(str(tmp_path / "none.json"))

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(str(p))


class TestBuildExperiment:
    def test_builtin_numerical_shapes(self):
        cfg = parse_config({"dataset": {"n": 100},
                            "split": {"n_train": 50, "n_val": 20}})
        exp = build_experiment(cfg)
        assert exp.raw.n == 100
        assert len(exp.split.train_idx) == 50
        assert len(exp.split.val_idx) == 20
        assert len(exp.split.test_idx) == 30
        Xtr = exp.data.X[exp.split.train_idx]
        assert Xtr.min() >= 0.0 and Xtr.max() <= 1.0

    def test_csv_with_augmentation_sequential_split(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = ["u1,u2,u3,u4,y"]
        for i in range(40):
            vals = rng.normal(size=4).tolist() + [float(i)]
            rows.append(",".join(repr(v) for v in vals))
        p = tmp_path / "series.csv"
        p.write_text("\n".join(rows) + "\n")
        cfg = parse_config({
            "dataset": {"source": "csv", "path": str(p), "target_cols": [-1],
                        "augmentation": "powerload"},
            "split": {"n_train": 20, "n_val": 10},
        })
        exp = build_experiment(cfg)
        assert exp.raw.n == 39  # one row lost to the lag
        assert exp.raw.m == 5
        # sequential by default for csv: time order preserved
        assert list(exp.split.train_idx) == list(range(20))
        # lagged target column equals the shifted ramp
        np.testing.assert_allclose(exp.raw.X[:, 4], np.arange(39, dtype=float))

    def test_noisy_validation_rows_appended(self, tmp_path):
        rng = np.random.default_rng(1)
        rows = ["u1,u2,u3,u4,y"]
        for i in range(30):
            vals = rng.normal(size=4).tolist() + [rng.normal()]
            rows.append(",".join(repr(v) for v in vals))
        p = tmp_path / "series.csv"
        p.write_text("\n".join(rows) + "\n")
        cfg = parse_config({
            "dataset": {"source": "csv", "path": str(p), "target_cols": [-1],
                        "augmentation": "powerload"},
            "split": {"n_train": 15, "n_val": 0, "noisy_validation": True},
        })
        exp = build_experiment(cfg)
        n_aug = 29
        n_test = n_aug - 15
        assert len(exp.split.train_idx) == 15
        assert len(exp.split.test_idx) == n_test
        assert len(exp.split.val_idx) == n_test  # noisy copy of the test rows
        assert exp.raw.n == n_aug + n_test
        # validation rows sit near their test counterparts
        delta = exp.raw.X[exp.split.val_idx] - exp.raw.X[exp.split.test_idx]
        assert np.abs(delta).max() < 1.0
        assert np.abs(delta).max() > 0.0

    def test_full_debutanizer_shaped_pipeline(self, tmp_path):
        rng = np.random.default_rng(2)
        rows = ["u1,u2,u3,u4,u5,u6,u7,y"]
        for _ in range(60):
            vals = rng.normal(size=8).tolist()
            rows.append(",".join(repr(v) for v in vals))
        p = tmp_path / "deb.csv"
        p.write_text("\n".join(rows) + "\n")
        cfg = parse_config({
            "dataset": {"source": "csv", "path": str(p), "target_cols": [7],
                        "augmentation": "debutanizer"},
            "split": {"n_train": 30, "n_val": 10},
        })
        exp = build_experiment(cfg)
        assert exp.raw.n == 54 and exp.raw.m == 12
