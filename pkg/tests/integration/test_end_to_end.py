import json
import os

import numpy as np
import pandas as pd
import pytest

from segreg import cli
from segreg.data.loaders import load_data_from_csv
from segreg.simulation.models import CovarianceSpec, two_segment_model
from segreg.simulation.sampler import sample_dataset


@pytest.fixture
def dataset(tmp_path):
    path = str(tmp_path / "data.csv")
    code = cli.main(
        ["simulate", "--model", "two", "--n", "40", "--p", "6", "--sigma", "0.3", "--seed", "1", "--output", path]
    )
    assert code == 0
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def without_manifest(payload):
    return {k: v for k, v in payload.items() if k != "manifest"}


def test_simulate_writes_dataset_and_truth(dataset):
    frame = pd.read_csv(dataset)
    assert list(frame.columns) == ["y"] + [f"x{j}" for j in range(1, 7)]
    assert len(frame) == 40
    truth = read_json(dataset + ".truth.json")
    assert truth["alpha0"] == [0.0, 0.5, 1.0]
    assert truth["breaks"] == [0, 20, 40]
    assert truth["betas0"][0] == {"1": 1.0, "2": 1.0}
    assert truth["seed"] == 1


def test_simulate_is_byte_identical_per_seed(tmp_path, dataset):
    again = str(tmp_path / "again.csv")
    cli.main(["simulate", "--model", "two", "--n", "40", "--p", "6", "--sigma", "0.3", "--seed", "1", "--output", again])
    with open(dataset, "rb") as a, open(again, "rb") as b:
        assert a.read() == b.read()


def test_simulated_csv_reads_back_bit_for_bit(dataset):
    truth = two_segment_model(6, CovarianceSpec(), sigma=0.3)
    expected = sample_dataset(truth, 40, seed=1)
    loaded = load_data_from_csv(dataset)
    np.testing.assert_array_equal(loaded.y, expected.y)
    np.testing.assert_array_equal(loaded.x, expected.x)


def test_simulate_defaults_p_to_twice_n(tmp_path):
    path = str(tmp_path / "wide.csv")
    assert cli.main(["simulate", "--n", "10", "--output", path]) == 0
    assert pd.read_csv(path).shape == (10, 21)


@pytest.mark.parametrize("method", ["dp", "bs"])
def test_detect_finds_the_change(tmp_path, dataset, method):
    out = str(tmp_path / f"{method}.json")
    code = cli.main(["detect", "--input", dataset, "--method", method, "--output", out])
    assert code == 0
    payload = read_json(out)
    assert payload["k_hat"] == len(payload["betas"]) == len(payload["per_segment_loss"])
    assert payload["k_hat"] >= 2
    fractions = payload["alpha_hat"]["fractions"]
    assert fractions[0] == 0.0 and fractions[-1] == 1.0
    assert payload["alpha_hat"]["rows"][-1] == 40
    assert max(payload["kkt_gaps"]) <= 1e-6
    assert payload["cache_stats"]["misses"] > 0
    assert payload["supports"] == [sorted(int(j) for j in beta) for beta in payload["betas"]]
    manifest = payload["manifest"]
    assert manifest["command"] == "detect"
    assert manifest["input_digest"].startswith("sha256:")
    assert manifest["config"]["lam"] > 0
    assert "detect" in manifest["timings"]
    assert not [name for name in os.listdir(tmp_path) if name.endswith(".tmp")]


def test_detect_is_deterministic_across_threads(tmp_path, dataset):
    one, two = str(tmp_path / "one.json"), str(tmp_path / "two.json")
    cli.main(["--threads", "1", "detect", "--input", dataset, "--output", one])
    cli.main(["--threads", "2", "detect", "--input", dataset, "--output", two])
    a, b = without_manifest(read_json(one)), without_manifest(read_json(two))
    a.pop("cache_stats")
    b.pop("cache_stats")
    assert a == b


def test_detect_with_explicit_penalties(tmp_path, dataset):
    out = str(tmp_path / "out.json")
    code = cli.main(["detect", "--input", dataset, "--lambda", "0.2", "--gamma", "1000", "--output", out])
    assert code == 0
    assert read_json(out)["k_hat"] == 1


def test_replay_reproduces_output(tmp_path, dataset):
    first, second = str(tmp_path / "first.json"), str(tmp_path / "second.json")
    assert cli.main(["detect", "--input", dataset, "--method", "bs", "--output", first]) == 0
    assert cli.main(["replay", first, "--output", second]) == 0
    assert without_manifest(read_json(first)) == without_manifest(read_json(second))


def test_exit_code_for_bad_input(tmp_path):
    out = str(tmp_path / "out.json")
    assert cli.main(["detect", "--input", str(tmp_path / "missing.csv"), "--output", out]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("y,a\n1,x\n2,3\n")
    assert cli.main(["detect", "--input", str(bad), "--output", out]) == 2
    assert not os.path.exists(out)


def test_exit_code_for_bad_config(tmp_path, dataset):
    out = str(tmp_path / "out.json")
    assert cli.main(["detect", "--input", dataset, "--delta", "0.6", "--output", out]) == 3
    assert cli.main(["detect", "--input", dataset, "--delta", "0.01", "--output", out]) == 3
    assert cli.main(["simulate", "--n", "10", "--cov", "toeplitz:2", "--output", out]) == 3
    assert cli.main(["cv", "--input", dataset, "--lambdas", "geom:0:1:3", "--output", out]) == 3
    assert not os.path.exists(out)


def test_exit_code_for_solver_failure(tmp_path, dataset):
    out = str(tmp_path / "out.json")
    code = cli.main(["detect", "--input", dataset, "--lambda", "0.01", "--max-sweeps", "1", "--output", out])
    assert code == 4
    assert not os.path.exists(out)


def test_cv_command(tmp_path, dataset):
    out = str(tmp_path / "cv.csv")
    code = cli.main(
        ["cv", "--input", dataset, "--lambdas", "0.05,0.2", "--k-max", "3", "--delta", "0.25", "--output", out]
    )
    assert code == 0
    table = pd.read_csv(out)
    assert list(table.columns) == ["lam", "k", "test_rss"]
    assert len(table) == 6
    summary = read_json(out + ".summary.json")
    assert summary["argmin"]["k"] in (1, 2, 3)
    assert summary["infeasible_cells"] == 0


def test_bench_and_study_commands(tmp_path):
    bench = str(tmp_path / "bench.csv")
    code = cli.main(["bench", "--n-list", "24,32", "--reps", "1", "--p", "4", "--output", bench])
    assert code == 0
    assert len(pd.read_csv(bench)) == 4
    assert read_json(bench + ".manifest.json")["command"] == "bench"

    study = str(tmp_path / "study.csv")
    code = cli.main(["study", "--n-list", "24", "--reps", "2", "--p", "4", "--seed", "3", "--output", study])
    assert code == 0
    reps = pd.read_csv(study)
    assert sorted(set(reps["seed"])) == [3, 4]
    assert "bs_dominated" in pd.read_csv(study + ".summary.csv").columns


def test_study_files_do_not_depend_on_threads(tmp_path):
    paths = []
    for threads in ("1", "2"):
        path = str(tmp_path / f"study{threads}.csv")
        cli.main(["--threads", threads, "study", "--n-list", "24", "--reps", "2", "--p", "4", "--output", path])
        paths.append(path)
    for suffix in ("", ".summary.csv"):
        with open(paths[0] + suffix, "rb") as a, open(paths[1] + suffix, "rb") as b:
            assert a.read() == b.read()


def test_cv_marks_infeasible_cells(tmp_path, dataset):
    out = str(tmp_path / "cv.csv")
    code = cli.main(["cv", "--input", dataset, "--lambdas", "0.1", "--k-max", "6", "--delta", "0.25", "--output", out])
    assert code == 0
    table = pd.read_csv(out)
    assert len(table) == 6
    assert table["test_rss"].isna().tolist() == [False] * 4 + [True] * 2
    assert read_json(out + ".summary.json")["infeasible_cells"] == 2


def test_cv_single_cell(tmp_path, dataset):
    out = str(tmp_path / "cv.csv")
    assert cli.main(["cv", "--input", dataset, "--lambdas", "0.1", "--k-max", "1", "--output", out]) == 0
    assert len(pd.read_csv(out)) == 1
