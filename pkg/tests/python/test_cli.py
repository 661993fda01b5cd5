from __future__ import annotations

import json
from pathlib import Path

import pytest

from inertiaforge.cli import main


def _config(tmp_path: Path, **sections: dict) -> Path:
    data = {
        "grid": {"source": "synthetic", "n_per_cluster": 4, "seed": 2},
        "fault": {"buses": [1], "delta_p": 0.01, "trace_buses": [1, 5]},
        "spectral": {"k": 4},
    }
    for name, values in sections.items():
        data.setdefault(name, {}).update(values)
    path = tmp_path / "inertiaforge.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _csv_grid(fixture_dir: Path) -> dict:
    return {
        "source": "csv",
        "bus_file": str(fixture_dir / "buses.csv"),
        "line_file": str(fixture_dir / "lines.csv"),
        "generator_file": str(fixture_dir / "generators.csv"),
        "town_file": str(fixture_dir / "towns.csv"),
        "national_load_file": str(fixture_dir / "national_loads.csv"),
    }


def test_build_synthetic(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "out"
    assert main(["build", "--config", str(_config(tmp_path)), "--output", str(out)]) == 0
    assert (out / "grid" / "manifest.json").exists()
    assert (out / "grid" / "buses.csv").exists()
    resolved = json.loads((out / "resolved_config.json").read_text(encoding="utf-8"))
    assert resolved["output"]["directory"] == str(out)
    assert "grid valid" in capsys.readouterr().out


def test_build_csv_grid(tmp_path: Path, grid_fixture_dir: Path) -> None:
    out = tmp_path / "out"
    config = _config(tmp_path, grid=_csv_grid(grid_fixture_dir))
    assert main(["build", "--config", str(config), "--output", str(out)]) == 0
    dispatch = (out / "dispatch.csv").read_text(encoding="utf-8").splitlines()
    assert len(dispatch) > 1
    buses = (out / "grid" / "buses.csv").read_text(encoding="utf-8").splitlines()
    # isolated bus 6 is dropped
    assert len(buses) == 1 + 5


def test_broken_csv_names_the_row(tmp_path: Path, grid_fixture_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    grid = _csv_grid(grid_fixture_dir)
    broken = tmp_path / "lines.csv"
    broken.write_text(
        "from,to,length_km,voltage_kv,susceptance_S\n1,2,14,380,\n2,3,twelve,220,\n",
        encoding="utf-8",
    )
    grid["line_file"] = str(broken)
    code = main(["build", "--config", str(_config(tmp_path, grid=grid)), "--output", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert "line 3" in err
    assert "twelve" in err


def test_missing_config_file(tmp_path: Path) -> None:
    assert main(["build", "--config", str(tmp_path / "absent.json")]) == 2


def test_invalid_override(tmp_path: Path) -> None:
    config = _config(tmp_path)
    assert main(["fault", "--config", str(config), "--set", "fault.dt=-1", "--output", str(tmp_path / "out")]) == 2


def test_fault_outputs(tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert main(["fault", "--config", str(_config(tmp_path)), "--output", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["fault_buses"] == [1]
    assert summary["M_b"] > 0
    assert summary["M_b_generators"] <= summary["M_b"]
    assert len(list((out / "frames").glob("frame_*.geojson"))) == 10
    assert (out / "rocof.csv").read_text(encoding="utf-8").splitlines()[-1].startswith("M_b,,")
    traces = (out / "frequency_hz.csv").read_text(encoding="utf-8").splitlines()
    assert traces[0] == "t,bus_id,delta_f_hz"
    assert (out / "trajectory.csv").exists()


def test_fiedler_heavy_fault_beats_bridge_fault(tmp_path: Path) -> None:
    magnitudes = {}
    # bus 1 ends cluster A; bus 5 carries the bridge
    for bus in (1, 5):
        out = tmp_path / f"bus{bus}"
        config = _config(tmp_path, grid={"n_per_cluster": 8}, fault={"buses": [bus], "trace_buses": [bus]})
        assert main(["fault", "--config", str(config), "--output", str(out)]) == 0
        magnitudes[bus] = json.loads((out / "summary.json").read_text(encoding="utf-8"))["M_b"]
    assert magnitudes[1] > magnitudes[5]


def test_zero_loss_is_quiet(tmp_path: Path) -> None:
    out = tmp_path / "out"
    config = _config(tmp_path, fault={"delta_p": 0.0})
    assert main(["fault", "--config", str(config), "--output", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["M_b"] < 1e-8


def test_fault_on_load_bus_fails(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _config(tmp_path, fault={"buses": [2]})
    assert main(["fault", "--config", str(config), "--output", str(tmp_path / "out")]) == 2
    assert "cannot fault load bus 2" in capsys.readouterr().err


def test_spectral_outputs(tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert main(["spectral", "--config", str(_config(tmp_path)), "--output", str(out)]) == 0
    modes = (out / "modes.csv").read_text(encoding="utf-8").splitlines()
    assert modes[0] == "bus_id,u2,u3,u4"
    assert modes[1].startswith("lambda,")
    assert len(modes) == 2 + 8
    weights = (out / "fiedler_weights.csv").read_text(encoding="utf-8").splitlines()
    assert weights[0].startswith("bus_id,kind,region,fiedler_sq")
    assert (out / "timescales.csv").exists()
    assert (out / "mode_mass.csv").exists()


def test_spectral_with_overdamped_modes_still_writes_modes(tmp_path: Path) -> None:
    out = tmp_path / "out"
    config = _config(tmp_path, spectral={"k": 4, "inertia": 1.0, "damping": 100.0})
    assert main(["spectral", "--config", str(config), "--output", str(out)]) == 0
    assert (out / "modes.csv").read_text(encoding="utf-8").startswith("bus_id,u2,u3,u4")
    assert (out / "fiedler_weights.csv").exists()
    assert (out / "mode_mass.csv").exists()
    timescales = (out / "timescales.csv").read_text(encoding="utf-8").splitlines()
    assert timescales[0] == "alpha,eigenvalue,frequency_rad_s,frequency_times_dt,overdamped"
    assert len(timescales) == 1 + 3
    assert all(row.endswith(",True") for row in timescales[1:])


@pytest.mark.heavy
def test_sweep_is_byte_reproducible(tmp_path: Path) -> None:
    config = _config(tmp_path, placement={"seeds": [1, 2], "levels": [1.0, 0.8]})
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["sweep", "--config", str(config), "--output", str(first)]) == 0
    assert main(["sweep", "--config", str(config), "--output", str(second)]) == 0
    content = (first / "sweep.csv").read_bytes()
    assert content == (second / "sweep.csv").read_bytes()
    rows = content.decode("utf-8").splitlines()
    assert rows[0] == "procedure,seed,M_sys_GWs2,fault_bus,u2b_sq,M_b"
    # 3 procedures x 2 seeds x 2 levels x 1 fault
    assert len(rows) == 1 + 12


@pytest.mark.heavy
def test_sweep_with_shift_procedure(tmp_path: Path) -> None:
    out = tmp_path / "out"
    config = _config(tmp_path, placement={"procedures": ["fiedler_shift"], "shift_levels": [0.0, 0.1]})
    assert main(["sweep", "--config", str(config), "--output", str(out)]) == 0
    rows = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 1 + 2
    assert all(row.startswith("fiedler_shift,1,") for row in rows[1:])
