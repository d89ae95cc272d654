from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ggbm.io import (
    CSV_SCHEMAS,
    PATHS_MAGIC,
    dumps_json,
    fmt_float,
    loads_json,
    paths_from_bytes,
    paths_from_csv,
    paths_to_bytes,
    paths_to_csv,
    read_csv,
    write_csv,
)
from ggbm.sampler import ModelParams, SeedSpec, TimeGrid, sample_paths
from ggbm.silt import SweepReport, eps_sweep


def test_fmt_float_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, math.pi):
        assert float(fmt_float(x)) == x
    assert fmt_float(3) == "3"
    assert fmt_float(True) == "true"
    assert fmt_float(np.float64(0.5)) == "0.5"


def test_csv_schema_enforced(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(p, "checks", [("a", True, 1.0, 2.0)])
    rows = read_csv(p, "checks")
    assert rows == [{"name": "a", "passed": "true", "measured": "1.0", "tolerance": "2.0"}]
    with pytest.raises(ValueError):
        read_csv(p, "sweep")
    with pytest.raises(ValueError):
        write_csv(p, "checks", [(1, 2)])


def test_every_schema_is_versioned():
    for name, (version, cols) in CSV_SCHEMAS.items():
        assert version >= 1 and len(cols) == len(set(cols)), name


def test_paths_csv_round_trip(tmp_path):
    batch = sample_paths(ModelParams(0.5, 0.8, 2), TimeGrid(1.0, 7), 3, 9)
    p = tmp_path / "paths.csv"
    paths_to_csv(p, batch.values, batch.grid.times)
    values, times = paths_from_csv(p)
    np.testing.assert_array_equal(values, batch.values)
    np.testing.assert_array_equal(times, batch.grid.times)


def test_paths_binary_layout():
    values = np.arange(12.0).reshape(2, 2, 3)
    times = np.array([0.0, 0.5, 1.0])
    data = paths_to_bytes(values, times)
    assert data[:8] == PATHS_MAGIC
    assert int.from_bytes(data[8:12], "little") == 2
    assert int.from_bytes(data[16:20], "little") == 3
    assert len(data) == 20 + 8 * (3 + 12)
    assert np.frombuffer(data[20:44], "<f8").tolist() == times.tolist()
    v, t = paths_from_bytes(data)
    np.testing.assert_array_equal(v, values)
    np.testing.assert_array_equal(t, times)


def test_paths_binary_rejects_corruption():
    data = paths_to_bytes(np.zeros((1, 1, 2)), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        paths_from_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(ValueError):
        paths_from_bytes(data[:-1])
    with pytest.raises(ValueError):
        paths_from_bytes(data[:5])
    with pytest.raises(ValueError):
        paths_to_bytes(np.zeros((1, 1, 2)), np.zeros(3))


@settings(max_examples=30, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=3, max_dims=3, max_side=4), elements=st.floats(allow_nan=False)))
def test_paths_binary_round_trip_property(values):
    times = np.linspace(0, 1, values.shape[2])
    v, t = paths_from_bytes(paths_to_bytes(values, times))
    np.testing.assert_array_equal(v, values)


def test_json_is_deterministic_and_round_trips():
    obj = {"b": np.float64(0.1), "a": [np.int64(2), math.inf], "c": np.array([1.5, 2.0])}
    text = dumps_json(obj)
    assert text == dumps_json(dict(reversed(list(obj.items()))))
    back = loads_json(text)
    assert back == {"a": [2, math.inf], "b": 0.1, "c": [1.5, 2.0]}


def test_sweep_report_json_round_trip():
    rep = eps_sweep(ModelParams(0.5, 0.6, 1), 1.0, [0.5, 0.1, 0.05, 0.01], 50, SeedSpec(1), n_grid=32)
    again = SweepReport.from_dict(loads_json(dumps_json(rep.to_dict())))
    assert again.to_dict() == rep.to_dict()
