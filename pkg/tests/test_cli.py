# tests/test_cli.py
import json

import pytest
from click.testing import CliRunner

from apps.cli.main import cli, main
from geometry.curve import record_frame, save_curve
from geometry.manifold import ChartedManifold
from tests.shapes import FIXTURES, circle

R2 = ChartedManifold.euclidean(2)


def run(*args):
    return CliRunner().invoke(cli, ["--log-level", "ERROR", *map(str, args)])


def report(path):
    return json.loads(path.read_text())


@pytest.fixture
def files(tmp_path):
    """A planar twist, a unit circle and a 2 pi rotation loop on disk."""
    twist = tmp_path / "twist.json"
    loop = tmp_path / "loop.csv"
    assert run("twist", "--dim", 2, "--out", twist).exit_code == 0
    assert run("loop", "--dim", 2, "--turns", 1, "--out", loop).exit_code == 0
    ring = tmp_path / "circle.json"
    save_curve(record_frame(circle(R2)), ring)
    return {"twist": twist, "loop": loop, "circle": ring, "dir": tmp_path}


def test_check_accepts_a_circle(files):
    out = files["dir"] / "check.json"
    res = run("check", files["circle"], "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["kind"] == "check"
    assert rep["in_LM"] and rep["in_LMdelta"]
    assert rep["margin"] == pytest.approx(1.0, abs=1e-3)
    assert rep["config"]["delta"] == 0.05


def test_check_flags_a_degenerate_segment(tmp_path):
    out = tmp_path / "check.json"
    res = run("check", FIXTURES / "segment.json", "--report", out)
    assert res.exit_code == 2
    rep = report(out)
    assert not rep["in_LMdelta"]
    assert any(f.startswith("margin:") for f in rep["failures"])


def test_corrupted_file_is_an_input_error():
    res = run("check", FIXTURES / "corrupted.json")
    assert res.exit_code == 3
    assert "line 6 column" in res.output


def test_reports_are_deterministic(files):
    a, b = files["dir"] / "a.json", files["dir"] / "b.json"
    run("check", files["circle"], "--report", a)
    run("check", files["circle"], "--report", b)
    assert a.read_bytes() == b.read_bytes()


def test_spin_invariants(files):
    out = files["dir"] / "spin.json"
    assert run("spin", "invariant", files["loop"], "--report", out).exit_code == 0
    assert report(out)["class"] == -1
    assert run("spin", "invariant", files["twist"], "--report", out).exit_code == 0
    assert report(out)["class"] == -1


def test_matrix_wire_scan(files):
    out, curve = files["dir"] / "wire.json", files["dir"] / "wire_curve.json"
    res = run("wire", "matrix", files["loop"], files["twist"], "--scan", "--out", curve, "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["passed"] and rep["N"] % 2 == 0
    assert rep["loop_class"] == -1
    assert curve.exists()


def test_matrix_wire_needs_one_mode(files):
    res = run("wire", "matrix", files["loop"], files["twist"])
    assert res.exit_code == 3
    assert "exactly one of --n and --scan" in res.output


def test_concat_records_jumps(files):
    out = files["dir"] / "concat.json"
    res = run("concat", files["twist"], files["twist"], "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["duration"] == pytest.approx(2.0)
    assert rep["max_jump"] < 1e-6


def test_concat_refuses_mismatched_ends(files):
    res = run("concat", files["twist"], files["circle"])
    assert res.exit_code != 0
    assert "endpoint mismatch" in res.output


def test_loc_equal(files):
    out = files["dir"] / "loc.json"
    twist = files["twist"]
    res = run("loc", "equal", twist, twist, "--omega", twist, "--power-b", 2, "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["equal"] and rep["class_omega"] == -1

    double = files["dir"] / "double.json"
    assert run("concat", twist, twist, "--out", double).exit_code == 0
    assert run("loc", "equal", twist, double, "--omega", twist).exit_code == 2


def test_census_over_a_directory(files, tmp_path):
    d = tmp_path / "census"
    d.mkdir()
    (d / "one.json").write_bytes(files["twist"].read_bytes())
    run("concat", files["twist"], files["twist"], "--out", d / "two.json")
    out = tmp_path / "census.json"
    res = run("pi0", "census", "--dim", 2, "--in", d, "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["classes"] == {"one": -1, "two": 1}
    assert rep["both_classes"]


def test_smooth_a_jump_fixture(tmp_path):
    jumpy, anchor = tmp_path / "jumpy.json", tmp_path / "alpha.json"
    assert run("twist", "--dim", 3, "--jump", 0.03, "--out", jumpy).exit_code == 0
    assert run("twist", "--dim", 3, "--out", anchor).exit_code == 0
    out = tmp_path / "smooth.json"
    res = run("smooth", jumpy, "--anchor", anchor, "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["jumps_removed"] == 1
    assert rep["margin_after"] > 0


def test_asymptotics_table(files):
    out, table = files["dir"] / "asym.json", files["dir"] / "asym.csv"
    res = run("asymptotics", files["loop"], files["twist"], "--n", 4, "--n", 8, "--csv", table, "--report", out)
    assert res.exit_code == 0, res.output
    rep = report(out)
    assert rep["Ns"] == [4, 8]
    assert all(rep["monotone"].values())
    assert table.read_text().splitlines()[0] == "N,k,deviation"


def test_manifold_list():
    res = run("manifold", "list")
    assert res.exit_code == 0
    assert "bump2" in res.output and "hyperbolic" in res.output


def test_main_maps_usage_errors(tmp_path):
    assert main(["--log-level", "ERROR", "check", str(FIXTURES / "segment.json")]) == 2
    assert main(["no-such-command"]) == 3


def test_relative_outputs_land_in_the_output_dir(files, tmp_path):
    res = CliRunner().invoke(cli, ["--log-level", "ERROR", "check", str(files["circle"]), "--report", "rep/check.json"],
                             env={"NONDEG_OUTPUT_DIR": str(tmp_path / "env")})
    assert res.exit_code == 0, res.output
    assert report(tmp_path / "env" / "rep" / "check.json")["kind"] == "check"

    res = run("--output-dir", tmp_path / "flag", "loop", "--dim", 2, "--out", "loop.csv")
    assert res.exit_code == 0, res.output
    assert (tmp_path / "flag" / "loop.csv").exists()


def test_twist_scaled_into_a_preset(tmp_path):
    out = tmp_path / "alpha_s2.json"
    res = run("twist", "--dim", 2, "--manifold", "s2", "--out", out)
    assert res.exit_code == 0, res.output
    assert report(out)["manifold"]["kind"] == "sphere"
    assert run("check", out).exit_code == 0

    res = run("twist", "--dim", 2, "--manifold", "h3", "--out", out)
    assert res.exit_code == 3
    assert "dimension 3" in res.output
    assert run("twist", "--dim", 2, "--manifold", "nowhere", "--out", out).exit_code == 3


def test_transfer_into_a_preset(files, tmp_path):
    out_dir, rep = tmp_path / "h2", tmp_path / "transfer.json"
    res = run("transfer", files["twist"], files["circle"], "--manifold", "h2", "--out-dir", out_dir, "--report", rep)
    assert res.exit_code == 0, res.output
    r = report(rep)
    assert r["kind"] == "transfer" and r["scanned"] and r["passed"]
    assert [m["output"] for m in r["members"]] == [str(out_dir / "twist.json"), str(out_dir / "circle.json")]
    assert all(m["duration"] == pytest.approx(r["lam"]) for m in r["members"])
    assert report(out_dir / "circle.json")["manifold"]["kind"] == "hyperbolic"

    res = run("transfer", files["circle"], "--manifold", "h2", "--lam", 0.1, "--out-dir", out_dir, "--report", rep)
    assert res.exit_code == 0, res.output
    assert report(rep)["lam"] == 0.1 and not report(rep)["scanned"]
    assert run("transfer", files["circle"], "--manifold", "h3", "--lam", 0.1, "--out-dir", out_dir).exit_code == 3
