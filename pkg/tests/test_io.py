import json

import numpy as np
import pytest

from phasesync.exceptions import InputError
from phasesync.io import (
    load_subjects,
    read_roi_csv,
    read_tensor_binary,
    read_tensor_csv,
    write_phase_csv,
    write_roi_csv,
    write_tensor_binary,
    write_tensor_csv,
)
from phasesync.psmetrics import Metric, PsTensor
from phasesync.signals import RoiDataset, extract_phases


@pytest.fixture
def dataset():
    values = np.random.default_rng(0).standard_normal((3, 40))
    return RoiDataset(values, 2.0, ["a", "b", "c"])


def test_roi_csv_round_trip(tmp_path, dataset):
    path = write_roi_csv(tmp_path / "s.csv", dataset)
    back = read_roi_csv(path, 2.0)
    assert np.array_equal(back.values, dataset.values)
    assert list(back.region_labels) == ["a", "b", "c"]


def test_roi_csv_errors(tmp_path):
    with pytest.raises(InputError):
        read_roi_csv(tmp_path / "missing.csv", 2.0)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,x\n")
    with pytest.raises(InputError, match="non-numeric"):
        read_roi_csv(bad, 2.0)


def test_manifest_shape_mismatch(tmp_path, dataset):
    write_roi_csv(tmp_path / "s1.csv", dataset)
    write_roi_csv(tmp_path / "s2.csv", RoiDataset(dataset.values[:2], 2.0))
    (tmp_path / "m.json").write_text(json.dumps({"tr_seconds": 2.0, "subjects": ["s1.csv", "s2.csv"]}))
    with pytest.raises(InputError, match="s2.csv"):
        load_subjects(tmp_path / "m.json")


def test_manifest_resolves_relative_paths(tmp_path, dataset):
    write_roi_csv(tmp_path / "s1.csv", dataset)
    (tmp_path / "m.json").write_text(json.dumps(
        {"tr_seconds": 2.0, "subjects": [{"id": "x", "path": "s1.csv"}]}))
    [(sid, data)] = load_subjects(tmp_path / "m.json")
    assert sid == "x" and data.values.shape == (3, 40)


def test_phase_csv_orientation(tmp_path, dataset):
    ph = extract_phases(dataset)
    path = write_phase_csv(tmp_path / "p.csv", ph)
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b,c" and len(lines) == 41


def _tensor():
    values = np.random.default_rng(1).uniform(-1, 1, (6, 9))
    values[2, 4] = np.nan
    return PsTensor(values, 4, Metric.CRP, None, 3, 2.0)


def test_tensor_csv_round_trip(tmp_path):
    t = _tensor()
    back = read_tensor_csv(write_tensor_csv(tmp_path / "t.csv", t), Metric.CRP, tr_seconds=2.0)
    assert np.array_equal(back.values, t.values, equal_nan=True)
    assert back.offset == 3 and back.n_regions == 4


def test_tensor_binary_round_trip(tmp_path):
    t = _tensor()
    path = write_tensor_binary(tmp_path / "t.pstb", t)
    assert path.read_bytes()[:4] == b"PSTB"
    back, valid = read_tensor_binary(path)
    assert np.array_equal(back.values, t.values, equal_nan=True)
    assert back.metric is Metric.CRP
    assert np.array_equal(valid, t.valid)


def test_tensor_binary_bad_magic(tmp_path):
    p = tmp_path / "x.pstb"
    p.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(InputError):
        read_tensor_binary(p)
