import json
import os
from importlib import resources

import jsonschema
import numpy as np
import pytest

from divbs.cli import main
from divbs.featfile import write_features_binary, write_features_csv
from divbs.linalg import FeatureMatrix


@pytest.fixture(scope="module")
def schema():
    text = resources.files("divbs").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def validate(path, schema):
    with open(path) as f:
        report = json.load(f)
    jsonschema.validate(report, schema)
    return report


@pytest.fixture()
def hand_features(tmp_path):
    fm = FeatureMatrix(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    path = str(tmp_path / "hand.csv")
    write_features_csv(fm, path)
    return path


class TestSelect:
    def test_hand_example_divbs(self, hand_features, tmp_path, schema):
        out = str(tmp_path / "sel.json")
        code = main(
            [
                "select",
                "--features",
                hand_features,
                "--strategy",
                "divbs",
                "--budget",
                "2",
                "--out",
                out,
            ]
        )
        assert code == 0
        report = validate(out, schema)
        assert report["indices"] == [0, 2]

    def test_budget_ratio(self, tmp_path, schema):
        rng = np.random.default_rng(60)
        fm = FeatureMatrix(rng.standard_normal((1470, 4)))
        feat = str(tmp_path / "f.bin")
        write_features_binary(fm, feat)
        out = str(tmp_path / "sel.json")
        code = main(
            [
                "select",
                "--features",
                feat,
                "--strategy",
                "uniform",
                "--budget-ratio",
                "0.1",
                "--out",
                out,
            ]
        )
        assert code == 0
        report = validate(out, schema)
        assert len(report["indices"]) == 147
        assert report["config_echo"]["budget"] == 147

    def test_invalid_strategy_usage_error(self, hand_features):
        code = main(
            ["select", "--features", hand_features, "--strategy", "nope", "--budget", "1"]
        )
        assert code == 2

    def test_top_score_requires_scores(self, hand_features):
        code = main(
            [
                "select",
                "--features",
                hand_features,
                "--strategy",
                "top_score",
                "--budget",
                "1",
            ]
        )
        assert code == 2

    def test_top_score_with_scores(self, hand_features, tmp_path, schema):
        scores = tmp_path / "scores.txt"
        scores.write_text("3.0\n1.0\n2.0\n")
        out = str(tmp_path / "sel.json")
        code = main(
            [
                "select",
                "--features",
                hand_features,
                "--strategy",
                "top_score",
                "--scores",
                str(scores),
                "--budget",
                "2",
                "--out",
                out,
            ]
        )
        assert code == 0
        assert validate(out, schema)["indices"] == [0, 2]

    def test_missing_file_data_error(self, tmp_path):
        code = main(
            [
                "select",
                "--features",
                str(tmp_path / "missing.bin"),
                "--strategy",
                "divbs",
                "--budget",
                "1",
            ]
        )
        assert code == 3

    def test_budget_too_large_data_error(self, hand_features):
        code = main(
            ["select", "--features", hand_features, "--strategy", "divbs", "--budget", "9"]
        )
        assert code == 3

    def test_eps_env_override(self, hand_features, tmp_path, schema, monkeypatch):
        monkeypatch.setenv("DIVBS_EPS", "1e-6")
        out = str(tmp_path / "sel.json")
        code = main(
            [
                "select",
                "--features",
                hand_features,
                "--strategy",
                "divbs",
                "--budget",
                "2",
                "--out",
                out,
            ]
        )
        assert code == 0
        assert validate(out, schema)["config_echo"]["eps"] == 1e-6
        # the flag wins over the environment
        code = main(
            [
                "select",
                "--features",
                hand_features,
                "--strategy",
                "divbs",
                "--budget",
                "2",
                "--eps",
                "1e-12",
                "--out",
                out,
            ]
        )
        assert code == 0
        assert validate(out, schema)["config_echo"]["eps"] == 1e-12


class TestOracleCheck:
    def test_small_run(self, tmp_path, schema):
        out = str(tmp_path / "oracle.json")
        code = main(
            [
                "oracle-check",
                "--n",
                "6",
                "--d",
                "3",
                "--budget",
                "2",
                "--trials",
                "20",
                "--seed",
                "1",
                "--out",
                out,
            ]
        )
        assert code == 0
        report = validate(out, schema)
        assert report["greedy_ratio_min"] >= report["bound"] - 1e-9

    def test_deterministic(self, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = str(tmp_path / name)
            assert (
                main(
                    [
                        "oracle-check",
                        "--n",
                        "5",
                        "--d",
                        "3",
                        "--budget",
                        "2",
                        "--trials",
                        "10",
                        "--seed",
                        "7",
                        "--out",
                        out,
                    ]
                )
                == 0
            )
            with open(out) as f:
                outs.append(f.read())
        assert outs[0] == outs[1]


class TestMetrics:
    def test_report(self, tmp_path, schema):
        rng = np.random.default_rng(61)
        fm = FeatureMatrix(rng.standard_normal((12, 3)), rng.integers(0, 2, 12))
        feat = str(tmp_path / "f.bin")
        write_features_binary(fm, feat)
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"indices": [0, 2, 4, 6]}))
        out = str(tmp_path / "metrics.json")
        code = main(
            ["metrics", "--features", feat, "--selection", str(sel), "--ks", "1,2", "--out", out]
        )
        assert code == 0
        report = validate(out, schema)
        assert report["n_selected"] == 4

    def test_k_too_large(self, tmp_path):
        rng = np.random.default_rng(62)
        fm = FeatureMatrix(rng.standard_normal((5, 3)))
        feat = str(tmp_path / "f.bin")
        write_features_binary(fm, feat)
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"indices": [0, 1]}))
        code = main(["metrics", "--features", feat, "--selection", str(sel), "--ks", "5"])
        assert code == 3


class TestToy:
    def test_outputs(self, tmp_path, schema):
        out_dir = str(tmp_path / "toy")
        code = main(
            [
                "toy",
                "--strategy",
                "uniform",
                "--budget-ratio",
                "0.1",
                "--epochs",
                "2",
                "--seed",
                "5",
                "--out-dir",
                out_dir,
            ]
        )
        assert code == 0
        report = validate(os.path.join(out_dir, "toy_report.json"), schema)
        assert len(report["accuracy"]) == 2
        assert len(report["final_indices"]) == 147
        csv_text = open(os.path.join(out_dir, "toy_scatter.csv")).read()
        assert csv_text.startswith("x,y,label,selected\n")
        assert len(csv_text.strip().splitlines()) == 1471
        svg_text = open(os.path.join(out_dir, "toy_scatter.svg")).read()
        assert svg_text.startswith("<svg") and svg_text.rstrip().endswith("</svg>")

    def test_reproducible_accuracy(self, tmp_path):
        reports = []
        for name in ("t1", "t2"):
            out_dir = str(tmp_path / name)
            assert (
                main(
                    [
                        "toy",
                        "--strategy",
                        "uniform",
                        "--epochs",
                        "2",
                        "--seed",
                        "9",
                        "--out-dir",
                        out_dir,
                    ]
                )
                == 0
            )
            with open(os.path.join(out_dir, "toy_report.json")) as f:
                reports.append(json.load(f))
        assert reports[0]["accuracy"] == reports[1]["accuracy"]


class TestBench:
    def test_small_bench(self, tmp_path, schema):
        out = str(tmp_path / "bench.json")
        code = main(
            [
                "bench",
                "--n",
                "64",
                "--d",
                "32",
                "--budget",
                "8",
                "--trials",
                "3",
                "--out",
                out,
            ]
        )
        assert code == 0
        report = validate(out, schema)
        assert report["speedup"] > 0
