import json
import os

import pytest

from minsurf_lab.cli import main


def run(args):
    return main([str(a) for a in args])


def test_catalog_lists_surfaces(capsys):
    assert run(["catalog"]) == 0
    out = capsys.readouterr().out
    for name in ("plane_k", "holo_graph", "catenoid_r6",
                 "enneper_r6", "perturbed_graph", "scaled_graph"):
        assert name in out


def test_analyze_plane_writes_report(tmp_path, capsys):
    code = run(["analyze", "--surface", "plane_k", "--res", "17,33",
                "--out", tmp_path / "r"])
    assert code == 0
    out = capsys.readouterr().out
    assert "[pass]" in out and "[FAIL]" not in out
    body = json.loads((tmp_path / "r" / "analyze.json").read_text())
    assert body["all_passed"] is True
    assert body["command"] == "analyze"
    assert "timestamp" not in body
    pngs = [f for f in os.listdir(tmp_path / "r") if f.endswith(".png")]
    assert pngs, "report should render figures next to the data files"


def test_analyze_perturbed_fails_exit_code(tmp_path):
    # the non-minimal control passes only at fine resolutions; at the
    # coarse pair the jacobi non-decay check is expected to fail and the
    # exit code must say so
    code = run(["analyze", "--surface", "perturbed_graph",
                "--res", "17,33", "--out", tmp_path / "r"])
    assert code == 1


def test_holonomy_synthetic(tmp_path, capsys):
    code = run(["holonomy", "--synthetic", "so4", "--seed", 3,
                "--out", tmp_path / "r"])
    assert code == 0
    out = capsys.readouterr().out
    assert "so4_no_parallel_structure" in out


def test_unknown_surface_exits_2(tmp_path):
    assert run(["analyze", "--surface", "nope", "--out", tmp_path / "r"]) == 2


def test_bad_resolution_order(tmp_path):
    with pytest.raises(SystemExit):
        run(["analyze", "--surface", "plane_k", "--res", "33,17",
             "--out", tmp_path / "r"])


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("surface = plane_k\nres = 17,33\n# a comment\n")
    code = run(["analyze", "--config", cfg, "--out", tmp_path / "r"])
    assert code == 0
    body = json.loads((tmp_path / "r" / "analyze.json").read_text())
    assert body["config"]["surface"] == "plane_k"


def test_reports_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run(["analyze", "--surface", "plane_k", "--res", "17,33",
                    "--out", tmp_path / d]) == 0
    ra = (tmp_path / "a" / "analyze.json").read_bytes()
    rb = (tmp_path / "b" / "analyze.json").read_bytes()
    assert ra == rb


def test_spectrum_catenoid(tmp_path, capsys):
    code = run(["spectrum", "--surface", "catenoid_r6", "--param",
                "tmax=2.0", "--res", "33,49", "--out", tmp_path / "r"])
    assert code == 0
    body = json.loads((tmp_path / "r" / "spectrum.json").read_text())
    names = [c["name"] for c in body["checks"]]
    assert any("negative" in n or "unstable" in n for n in names)
