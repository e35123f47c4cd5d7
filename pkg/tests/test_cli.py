import hashlib
import json
from pathlib import Path

import pytest

from driftwind.cli import main
from driftwind.config import (
    ConfigError,
    DEFAULT_CONFIG,
    config_hash,
    load_config,
    parse_config,
    serialize_config,
)


def write_config(tmp_path, **overrides):
    doc = {
        "delta": 0.0625,
        "arrows": {"kind": "constant", "arrow": "right"},
        "grid": {"resolution": 128},
        "integrator": {"max_time": 4.0},
        "output_dir": str(tmp_path / "runs"),
    }
    doc.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc, indent=2))
    return path


def tree_hashes(root: Path, suffixes=(".csv", ".json", ".dwgrid")) -> dict:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.suffix in suffixes:
            out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


# ---------------------------------------------------------------------------
# config


def test_config_roundtrip_identity():
    cfg = parse_config({"delta": 0.05, "arrows": {"kind": "iid", "p_right": 0.25, "seed": 3}})
    again = parse_config(json.loads(serialize_config(cfg)))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_config_defaults_fill():
    cfg = parse_config({})
    assert cfg == parse_config(DEFAULT_CONFIG)
    assert cfg["grid"]["resolution"] == 512


def test_config_rejects_bad_delta():
    with pytest.raises(ConfigError):
        parse_config({"delta": 0.2})


def test_config_rejects_bad_velocity_band():
    with pytest.raises(ConfigError):
        parse_config({"spacetime": {"u0": 0.7, "u1": 0.7}})


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config({"no_such_section": 1})


def test_config_rejects_unknown_arrow_kind():
    with pytest.raises(ConfigError):
        parse_config({"arrows": {"kind": "banana"}})


# ---------------------------------------------------------------------------
# subcommands


@pytest.fixture(scope="module")
def built_run(tmp_path_factory):
    """One small cached-field run shared by the CLI tests."""
    tmp = tmp_path_factory.mktemp("cli")
    cfg_path = write_config(tmp)
    assert main(["build-field", "--config", str(cfg_path)]) == 0
    cfg = load_config(cfg_path)
    return tmp, cfg_path, cfg


def test_build_field_writes_manifest_and_grids(built_run):
    tmp, cfg_path, cfg = built_run
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    manifest = json.loads((run / "fields" / "manifest.json").read_text())
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["cell_count"] == 24
    assert manifest["field_sum_min"] > 0.5
    assert manifest["interpolation_error"] < 1e-3
    assert (run / "fields" / "vr.dwgrid").exists()
    assert (run / "fields" / "vu.dwgrid").exists()


def test_build_field_idempotent_and_deterministic(built_run, capsys):
    tmp, cfg_path, cfg = built_run
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    before = tree_hashes(run / "fields")
    assert main(["build-field", "--config", str(cfg_path)]) == 0
    assert "cached" in capsys.readouterr().out
    assert tree_hashes(run / "fields") == before
    # forced rebuild reproduces identical bytes
    assert main(["build-field", "--config", str(cfg_path), "--force"]) == 0
    assert tree_hashes(run / "fields") == before


def test_delta_out_of_range_is_user_error(tmp_path, capsys):
    cfg_path = write_config(tmp_path, delta=0.2)
    assert main(["build-field", "--config", str(cfg_path)]) == 1
    assert "delta" in capsys.readouterr().err


def test_integrate_requires_manifest(tmp_path, capsys):
    cfg_path = write_config(tmp_path)
    assert main(["integrate", "--config", str(cfg_path), "--start", "0.5,0.5"]) == 1
    assert "build-field" in capsys.readouterr().err


def test_integrate_constant_right_stays_in_strip(built_run):
    tmp, cfg_path, cfg = built_run
    assert main(["integrate", "--config", str(cfg_path), "--start", "0.5,0.5"]) == 0
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    rows = (run / "integrate" / "traj_000.csv").read_text().strip().splitlines()
    assert rows[0] == "t,x,y"
    tail = [list(map(float, r.split(","))) for r in rows[-20:]]
    ys = [r[2] for r in tail]
    # after reaching the flat band the height is pinned within the coarse
    # (resolution 128) grid's interpolation accuracy
    assert max(ys) - min(ys) < 5e-3
    assert 1.0 / 3.0 < ys[-1] < 2.0 / 3.0
    events = (run / "integrate" / "events_000.csv").read_text().strip().splitlines()
    assert events[0] == "t,axis,line,cell_i,cell_j"
    assert len(events) > 4


def test_integrate_same_config_identical_csv(built_run):
    tmp, cfg_path, cfg = built_run
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    assert main(["integrate", "--config", str(cfg_path), "--start", "0.5,0.5"]) == 0
    first = tree_hashes(run / "integrate")
    assert main(["integrate", "--config", str(cfg_path), "--start", "0.5,0.5"]) == 0
    assert tree_hashes(run / "integrate") == first


def test_integrate_with_warp_reports_conjugacy(built_run):
    tmp, cfg_path, cfg = built_run
    doc = json.loads(Path(cfg_path).read_text())
    doc["warp"] = {"enabled": True, "lattice_hook": True}
    warp_cfg = Path(str(cfg_path) + ".warp.json")
    warp_cfg.write_text(json.dumps(doc))
    # lattice hook keeps the same field grids usable: build then integrate
    assert main(["build-field", "--config", str(warp_cfg)]) == 0
    assert main(["integrate", "--config", str(warp_cfg), "--start", "0.5,0.5"]) == 0
    cfg2 = load_config(warp_cfg)
    run = Path(cfg2["output_dir"]) / config_hash(cfg2)
    rec = json.loads((run / "integrate" / "slopes_000.json").read_text())
    assert "conjugacy_residual" in rec
    assert rec["conjugacy_residual"] < 1e-9  # identity warp
    assert (run / "integrate" / "matched_000.csv").exists()


def test_walk_csv_and_coalescence(built_run):
    tmp, cfg_path, cfg = built_run
    assert (
        main(
            [
                "walk", "--config", str(cfg_path),
                "--start", "0,0", "--start", "3,0",
                "--steps", "10", "--coalescence",
            ]
        )
        == 0
    )
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    rows = (run / "walks" / "walk_000.csv").read_text().strip().splitlines()
    assert rows[0] == "n,i,j"
    assert rows[1] == "0,0,0"
    assert rows[-1] == "10,10,0"
    rep = json.loads((run / "walks" / "coalescence.json").read_text())
    assert rep["merged"][0]["meet"] == [3, 0]


def test_stats_birkhoff_constant_observable(built_run, capsys):
    tmp, cfg_path, cfg = built_run
    assert (
        main(
            [
                "stats", "--config", str(cfg_path),
                "--estimator", "birkhoff", "--observable", "one",
                "--samples", "200",
            ]
        )
        == 0
    )
    out = capsys.readouterr().out.strip().splitlines()[-1]
    rec = json.loads(out)
    assert rec["estimate"] == 1.0


def test_stats_slope_thresholds(built_run):
    tmp, cfg_path, cfg = built_run
    assert (
        main(
            [
                "stats", "--config", str(cfg_path),
                "--estimator", "slope-thresholds",
                "--start", "1.0,1.0", "--horizon", "4.0",
            ]
        )
        == 0
    )
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    rec = json.loads((run / "stats" / "slope-thresholds.json").read_text())
    assert rec["slope_max"] <= 1.0 + 1e-5  # coarse-grid wiggle above the exact 1
    assert rec["slope_min"] < rec["slope_max"]


def test_export_tessellation_and_process(built_run):
    tmp, cfg_path, cfg = built_run
    assert main(["export", "--config", str(cfg_path), "--what", "tessellation"]) == 0
    assert main(["export", "--config", str(cfg_path), "--what", "process-x"]) == 0
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    doc = json.loads((run / "export" / "tessellation.json").read_text())
    assert doc["cell_count"] == 24
    csv_text = (run / "export" / "process_x.csv").read_text()
    assert csv_text.startswith("# intensity=")


def test_report_renders_figures(built_run):
    tmp, cfg_path, cfg = built_run
    assert main(["integrate", "--config", str(cfg_path), "--start", "0.5,0.5"]) == 0
    assert main(["report", "--config", str(cfg_path)]) == 0
    run = Path(cfg["output_dir"]) / config_hash(cfg)
    pngs = sorted(p.name for p in (run / "report").glob("*.png"))
    assert "tessellation.png" in pngs
    assert "field_vr.png" in pngs
    assert "trajectories.png" in pngs
    assert "slopes.png" in pngs
    for p in (run / "report").glob("*.png"):
        assert p.stat().st_size > 5000


def test_unknown_flag_is_user_error(tmp_path, capsys):
    cfg_path = write_config(tmp_path)
    assert main(["walk", "--config", str(cfg_path), "--bogus"]) == 1


def test_missing_config_file_is_user_error(capsys):
    assert main(["build-field", "--config", "/nonexistent/cfg.json"]) == 1
