import json
import os

import numpy as np
import pytest

from segreg.core.model import Dataset
from segreg.data.loaders import file_digest, load_data, load_data_from_csv
from segreg.data.writers import atomic_write_text, to_json, write_dataset_csv
from segreg.exceptions import DataFormatError
from segreg.simulation.models import two_segment_model


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_load_csv(tmp_path):
    path = write(tmp_path, "data.csv", "y,a,b\n1.5,1,2\n2.5,3,4\n-1,5,6\n")
    data = load_data_from_csv(path)
    assert (data.n, data.p) == (3, 2)
    assert data.columns == ("a", "b")
    assert data.y.tolist() == [1.5, 2.5, -1.0]


def test_written_dataset_reads_back_exactly(tmp_path):
    rng = np.random.default_rng(0)
    data = Dataset(y=rng.standard_normal(7), x=rng.standard_normal((7, 3)))
    path = str(tmp_path / "out.csv")
    write_dataset_csv(path, data)
    loaded = load_data_from_csv(path)
    np.testing.assert_array_equal(loaded.y, data.y)
    np.testing.assert_array_equal(loaded.x, data.x)


def test_response_must_come_first(tmp_path):
    path = write(tmp_path, "data.csv", "a,y\n1,2\n3,4\n")
    with pytest.raises(DataFormatError, match="first column"):
        load_data_from_csv(path)


def test_non_numeric_cell_is_located(tmp_path):
    path = write(tmp_path, "data.csv", "y,a\n1,2\n3,oops\n")
    with pytest.raises(DataFormatError, match="data row 2, column `a`"):
        load_data_from_csv(path)


def test_missing_cell_is_located(tmp_path):
    path = write(tmp_path, "data.csv", "y,a\n1,2\n,4\n")
    with pytest.raises(DataFormatError, match="missing value at data row 2"):
        load_data_from_csv(path)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError, match="not found"):
        load_data_from_csv(str(tmp_path / "nope.csv"))


def test_order_by_is_stable_and_dropped(tmp_path):
    path = write(tmp_path, "data.csv", "y,t,a\n1,2,10\n2,1,20\n3,2,30\n4,1,40\n")
    data = load_data_from_csv(path, order_by="t")
    assert data.y.tolist() == [2.0, 4.0, 1.0, 3.0]
    assert data.columns == ("a",)
    with pytest.raises(DataFormatError, match="not in the input"):
        load_data_from_csv(path, order_by="missing")


def test_center(tmp_path):
    path = write(tmp_path, "data.csv", "y,a\n1,2\n3,6\n")
    data = load_data_from_csv(path, center=True)
    assert data.y.tolist() == [-1.0, 1.0]
    assert data.x[:, 0].tolist() == [-2.0, 2.0]


def test_load_data_sources(tmp_path):
    path = write(tmp_path, "data.csv", "y,a\n1,2\n3,6\n")
    assert load_data("csv", file_path=path).n == 2
    simulated = load_data("simulation", truth=two_segment_model(4), n=10, seed=1)
    assert (simulated.n, simulated.p) == (10, 4)
    with pytest.raises(ValueError):
        load_data("parquet")


def test_file_digest_tracks_content(tmp_path):
    path = write(tmp_path, "data.csv", "y,a\n1,2\n")
    first = file_digest(path)
    assert first.startswith("sha256:")
    write(tmp_path, "data.csv", "y,a\n1,3\n")
    assert file_digest(path) != first


def test_atomic_write_replaces_without_leftovers(tmp_path):
    path = str(tmp_path / "sub" / "result.json")
    atomic_write_text(path, "old\n")
    atomic_write_text(path, "new\n")
    with open(path, encoding="utf-8") as fh:
        assert fh.read() == "new\n"
    assert os.listdir(tmp_path / "sub") == ["result.json"]


def test_to_json_is_lossless_and_strict():
    value = 0.1 + 0.2
    payload = json.loads(to_json({"x": np.float64(value), "k": np.int64(3), "v": np.arange(2)}))
    assert payload == {"x": value, "k": 3, "v": [0, 1]}
    with pytest.raises(ValueError):
        to_json({"x": float("nan")})
