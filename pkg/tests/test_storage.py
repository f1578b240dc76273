import numpy as np
import pytest

from morphosim.core.errors import GapRangeError, NonUniformSamplingError
from morphosim.core.timeseries import TimeSeries
from morphosim.services.actuators import magnetic_force
from morphosim.storage.models import RunManifest
from morphosim.storage.operations import (
    load_magnet_table,
    read_table_csv,
    read_trace_csv,
    write_manifest,
    write_summary,
    write_table_csv,
    write_trace_csv,
)


def test_trace_csv_keeps_header_and_values(tmp_path):
    dt = 1e-3
    ts = TimeSeries.from_columns(0.0, dt, {
        "x": np.sin(np.arange(5000) * dt),
        "v": np.cos(np.arange(5000) * dt),
    })
    path = write_trace_csv(str(tmp_path / "trace.csv"), ts)

    with open(path, encoding="utf-8") as f:
        assert f.readline().strip() == "t,x,v"
    loaded = read_trace_csv(path)
    assert loaded.channels == ("x", "v")
    assert len(loaded) == 5000
    assert loaded.dt == pytest.approx(dt, rel=1e-8)
    np.testing.assert_allclose(loaded.samples, ts.samples, rtol=1e-8, atol=1e-12)


def test_trace_csv_subset_of_channels(tmp_path):
    ts = TimeSeries.from_columns(1.0, 0.5, {"a": [1.0, 2.0, 3.0], "b": [4.0, 5.0, 6.0]})
    path = write_trace_csv(str(tmp_path / "sub.csv"), ts, ["b"])
    columns = read_table_csv(path)
    assert list(columns) == ["t", "b"]
    np.testing.assert_allclose(columns["t"], [1.0, 1.5, 2.0])


def test_uneven_timestamps_rejected(tmp_path):
    path = tmp_path / "uneven.csv"
    write_table_csv(str(path), ["t", "x"], [[0.0, 1.0], [0.1, 2.0], [0.3, 3.0], [0.4, 4.0]])
    with pytest.raises(NonUniformSamplingError):
        read_trace_csv(str(path))


def test_header_is_required(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("0.0,1.0\n0.1,2.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_table_csv(str(path))


def test_header_and_rows_must_agree(tmp_path):
    with pytest.raises(ValueError):
        write_table_csv(str(tmp_path / "bad.csv"), ["a", "b"], [[1.0, 2.0, 3.0]])
    path = tmp_path / "short_header.csv"
    path.write_text("t,x\n0.0,1.0,2.0\n0.1,1.0,2.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_table_csv(str(path))


def test_load_magnet_table(tmp_path):
    path = tmp_path / "magnet.csv"
    path.write_text("gap_m,force_N\n0.0,6.0\n0.01,3.0\n0.02,1.0\n", encoding="utf-8")
    model = load_magnet_table(str(path), "soft")
    assert model.form == "tabulated"
    assert model.mode == "soft"
    assert magnetic_force(model, 0.015) == pytest.approx(2.0)
    with pytest.raises(GapRangeError):
        magnetic_force(model, 0.05)


def test_magnet_table_needs_two_columns(tmp_path):
    path = tmp_path / "wide.csv"
    path.write_text("gap_m,force_N,extra\n0.0,6.0,1\n0.01,3.0,1\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_magnet_table(str(path))


def test_magnet_table_must_decrease(tmp_path):
    path = tmp_path / "rising.csv"
    path.write_text("gap_m,force_N\n0.0,1.0\n0.01,3.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_magnet_table(str(path))


def test_summary_lines(tmp_path):
    lines = write_summary(str(tmp_path / "summary.txt"), {"c1": "0.015", "ok": "true"})
    assert lines == ["c1=0.015", "ok=true"]
    assert (tmp_path / "summary.txt").read_text(encoding="utf-8") == "c1=0.015\nok=true\n"


def test_manifest_lines_sorted(tmp_path):
    manifest = RunManifest(
        subcommand="swim-opt",
        parameters={"seed": 3, "amplitude": 0.3, "k": [0.01, 0.02], "passive_law": "linear"},
        seed=3,
        outputs=["out/oracle_table.csv", "out/summary.txt"],
        version="9.9.9",
    )
    assert manifest.lines() == [
        "subcommand=swim-opt",
        "version=9.9.9",
        "seed=3",
        "param.amplitude=0.3",
        "param.k=0.01,0.02",
        "param.passive_law=linear",
        "param.seed=3",
        "output.0=out/oracle_table.csv",
        "output.1=out/summary.txt",
    ]
    path = write_manifest(str(tmp_path / "nested" / "run_manifest.txt"), manifest)
    with open(path, encoding="utf-8") as f:
        assert f.read().splitlines() == manifest.lines()


def test_manifest_without_seed():
    assert RunManifest(subcommand="joint-coeffs").lines()[2] == "seed="
