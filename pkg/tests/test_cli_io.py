import contextlib
import io
import json
import os

import numpy as np
import pytest

from closedloft import cli_io
from closedloft import spline_core as sc
from closedloft.errors import InvalidInputError

from conftest import circle_points, square_points, tube_rows


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _tube_file(tmp_path, name="tube.json", m1=8, seed=0):
    rows = tube_rows(m1, seed=seed)
    return _write(
        tmp_path, name, json.dumps({"version": 1, "rows": [r.tolist() for r in rows]})
    )


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli_io.main(argv)
    return code, out.getvalue(), err.getvalue()


# --- contour parsing ---

def test_parse_minimal_triangle():
    rows = cli_io.parse_contours('{"version": 1, "rows": [[[0,0,0],[1,0,0],[0,1,0]]]}')
    assert len(rows.rows) == 1
    assert rows.rows[0].shape == (3, 3)


def test_parse_rejects_duplicate_point_with_location():
    rows = [circle_points(8).tolist() for _ in range(3)]
    rows[2][5] = rows[2][4]
    text = json.dumps({"version": 1, "rows": rows})
    with pytest.raises(cli_io.ContourParseError, match="row 2.*index 5"):
        cli_io.parse_contours(text)


def test_parse_csv_matches_json(tmp_path):
    rows = [circle_points(6, z=0.0), circle_points(9, z=1.0)]
    json_text = json.dumps({"version": 1, "rows": [r.tolist() for r in rows]})
    csv_lines = ["# tube fixture"]
    for r in rows:
        csv_lines.extend(f"{float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in r)
        csv_lines.append("")
    from_json = cli_io.parse_contours(json_text)
    from_csv = cli_io.parse_contours("\n".join(csv_lines))
    for a, b in zip(from_json.rows, from_csv.rows):
        np.testing.assert_array_equal(a, b)


def test_parse_alignment_hints_applied():
    base = circle_points(8)
    doc = {
        "version": 1,
        "rows": [base.tolist(), base.tolist()],
        "hints": {"starts": [0, 2], "reversed": [False, False]},
    }
    rows = cli_io.parse_contours(json.dumps(doc))
    assert rows.aligned
    np.testing.assert_array_equal(rows.rows[1], np.roll(base, -2, axis=0))


def test_parse_errors():
    with pytest.raises(cli_io.ContourParseError, match="line"):
        cli_io.parse_contours('{"rows": [[[0,0,0],')
    with pytest.raises(cli_io.ContourParseError, match="at least 3"):
        cli_io.parse_contours('{"rows": [[[0,0,0],[1,0,0]]]}')
    with pytest.raises(cli_io.ContourParseError):
        cli_io.parse_contours("1 2\n")


# --- surface round trip ---

def _small_surface(rng):
    ku = sc.clamped_knot_vector([0, 0.3713281, 1], 2)
    kv = sc.cyclic_knot_vector([0, 0.2, 0.44447, 0.6, 0.8123, 1], 3)
    net = rng.normal(size=(ku.n_basis, kv.n_basis - 3, 3)) * np.pi
    return sc.BSplineSurface(2, 3, ku, kv, net)


def test_surface_roundtrip_bit_exact(rng):
    sf = cli_io.SurfaceFile(_small_surface(rng), {"method": "park", "per": 1.0})
    text = cli_io.serialize_surface(sf)
    back = cli_io.parse_surface(text)
    assert back == sf
    assert np.array_equal(back.surface.control_net, sf.surface.control_net)
    assert cli_io.serialize_surface(back) == text


# --- OBJ export ---

def test_obj_bilinear_patch():
    kv = sc.clamped_knot_vector([0, 1], 1)
    net = np.array([[[0, 0, 0], [0, 1, 0]], [[1, 0, 0], [1, 1, 0]]], float)
    s = sc.BSplineSurface(1, 1, kv, kv, net)
    text = cli_io.export_obj(s, 2, 2)
    verts = [l for l in text.splitlines() if l.startswith("v ")]
    faces = [l for l in text.splitlines() if l.startswith("f ")]
    assert len(verts) == 4 and len(faces) == 1


def test_obj_closed_tube_stitches_seam(rng):
    s = _small_surface(rng)
    text = cli_io.export_obj(s, 10, 16)
    verts = [l for l in text.splitlines() if l.startswith("v ")]
    faces = [l for l in text.splitlines() if l.startswith("f ")]
    assert len(verts) == 10 * 16
    assert len(faces) == 9 * 16
    # last ring of faces reuses vertex column 1
    assert any(" 1 " in f or f.endswith(" 1") for f in faces)


def test_obj_vertices_on_surface(rng):
    s = _small_surface(rng)
    text = cli_io.export_obj(s, 5, 8)
    verts = np.array(
        [[float(x) for x in l.split()[1:]] for l in text.splitlines() if l.startswith("v ")]
    )
    us = np.repeat(np.linspace(0, 1, 5), 8)
    vs = np.tile(np.arange(8) / 8, 5)
    np.testing.assert_array_equal(verts, sc.eval_surface(s, us, vs))


def test_obj_sample_validation(rng):
    with pytest.raises(InvalidInputError):
        cli_io.export_obj(_small_surface(rng), 1, 8)


# --- CLI: loft ---

def test_cmd_loft_piegl(tmp_path):
    inp = _tube_file(tmp_path)
    out = str(tmp_path / "surface.json")
    obj = str(tmp_path / "mesh.obj")
    code, stdout, _ = _run(
        ["loft", "--input", inp, "--method", "piegl", "--per", "1.0",
         "--output", out, "--obj", obj]
    )
    assert code == 0
    assert "control-net=" in stdout and "max-residual=" in stdout
    sf = cli_io.parse_surface(open(out).read())
    assert sf.surface.closed_v
    assert sf.provenance["method"] == "piegl"
    assert len(sf.provenance["input_digest"]) == 64
    assert os.path.exists(obj)


def test_cmd_loft_bad_per(tmp_path):
    inp = _tube_file(tmp_path)
    code, _, err = _run(["loft", "--input", inp, "--per", "1.5", "--output", "x.json"])
    assert code == 64
    assert "per must lie in [0,1]" in err


def test_cmd_loft_park_equals_piegl_on_equal_rows(tmp_path):
    rows = tube_rows(8, seed=4, equal_counts=18)
    inp = _write(
        tmp_path, "eq.json", json.dumps({"version": 1, "rows": [r.tolist() for r in rows]})
    )
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert _run(["loft", "--input", inp, "--method", "piegl", "--output", out1])[0] == 0
    assert _run(["loft", "--input", inp, "--method", "park", "--output", out2])[0] == 0
    s1 = cli_io.parse_surface(open(out1).read()).surface
    s2 = cli_io.parse_surface(open(out2).read()).surface
    scale = sc.bbox_diagonal(np.vstack(rows))
    assert np.abs(s1.control_net - s2.control_net).max() <= 1e-8 * scale


def test_cmd_loft_determinism(tmp_path):
    inp = _tube_file(tmp_path, seed=11)
    out1, out2 = str(tmp_path / "d1.json"), str(tmp_path / "d2.json")
    code1, stdout1, _ = _run(["loft", "--input", inp, "--method", "park", "--output", out1])
    code2, stdout2, _ = _run(["loft", "--input", inp, "--method", "park", "--output", out2])
    assert code1 == code2 == 0
    assert stdout1 == stdout2
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_cmd_loft_missing_file(tmp_path):
    code, _, err = _run(["loft", "--input", str(tmp_path / "nope.json"), "--output", "o.json"])
    assert code == 1


def test_cmd_loft_unknown_flag(tmp_path):
    code, _, _ = _run(["loft", "--nonsense"])
    assert code == 64


# --- CLI: interp-curve ---

def test_cmd_interp_curve_square_natural(tmp_path):
    inp = _write(
        tmp_path, "sq.json", json.dumps({"version": 1, "rows": [square_points().tolist()]})
    )
    code, stdout, _ = _run(
        ["interp-curve", "--input", inp, "--closed", "--degree", "1", "--knot-method", "natural"]
    )
    assert code == 0
    doc = json.loads(stdout)
    assert doc["max_residual"] == 0.0
    assert doc["condition_ok"] == "true"
    assert doc["kind"] == "closed"


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cmd_interp_curve_even_natural_warns(tmp_path):
    pts = circle_points(12) + np.random.default_rng(5).normal(scale=0.08, size=(12, 3))
    inp = _write(
        tmp_path, "c12.json", json.dumps({"version": 1, "rows": [pts.tolist()]})
    )
    code, stdout, err = _run(
        ["interp-curve", "--input", inp, "--closed", "--degree", "4", "--knot-method", "natural"]
    )
    assert "warning" in err.lower() or "warn" in err.lower()
    assert code in (0, 2)  # ill-conditioned; may solve or fail with diagnostics


def test_cmd_interp_curve_averaging_circle(tmp_path):
    inp = _write(
        tmp_path, "c16.json",
        json.dumps({"version": 1, "rows": [circle_points(16).tolist()]}),
    )
    code, stdout, _ = _run(
        ["interp-curve", "--input", inp, "--closed", "--degree", "3",
         "--knot-method", "averaging"]
    )
    assert code == 0
    doc = json.loads(stdout)
    assert doc["max_residual"] < 1e-10


def test_cmd_interp_curve_input_knots(tmp_path):
    inp = _write(
        tmp_path, "c12.json",
        json.dumps({"version": 1, "rows": [circle_points(12).tolist()]}),
    )
    kv = sc.clamped_knot_vector(np.linspace(0, 1, 14), 3)
    kpath = _write(
        tmp_path, "knots.json",
        json.dumps({"style": "clamped", "degree": 3, "values": kv.knots.tolist()}),
    )
    out = str(tmp_path / "curve.json")
    code, stdout, _ = _run(
        ["interp-curve", "--input", inp, "--closed", "--degree", "3",
         "--knot-method", "input", "--input-knots", kpath, "--per", "1.0",
         "--output", out]
    )
    assert code == 0
    doc = json.loads(open(out).read())
    assert doc["kind"] == "open"  # clamped output of the input-knots pipeline
    assert "updated_input_knots" in doc


def test_cmd_interp_curve_multi_row_rejected(tmp_path):
    inp = _tube_file(tmp_path)
    code, _, err = _run(["interp-curve", "--input", inp, "--closed"])
    assert code == 1


def test_cmd_interp_curve_open_requires_averaging(tmp_path):
    inp = _write(
        tmp_path, "arc.json",
        json.dumps({"version": 1, "rows": [[[0, 0, 0], [1, 1, 0], [2, 0, 0], [3, 1, 0]]]}),
    )
    code, _, _ = _run(["interp-curve", "--input", inp, "--degree", "2"])
    assert code == 64
    code, stdout, _ = _run(
        ["interp-curve", "--input", inp, "--degree", "2", "--knot-method", "averaging"]
    )
    assert code == 0


# --- CLI: verify-conjectures ---

def test_cmd_verify_deterministic_bytes():
    args = ["verify-conjectures", "--which", "1", "--trials", "40", "--seed", "42"]
    code1, out1, _ = _run(args)
    code2, out2, _ = _run(args)
    assert code1 == code2 == 0
    assert out1 == out2
    assert "closedloft conjecture report" in out1
    assert "rank_tol" in out1


def test_cmd_verify_which_both_and_exit_zero():
    code, out, _ = _run(
        ["verify-conjectures", "--which", "both", "--trials", "25", "--seed", "7",
         "--degrees", "2,3", "--nhat-extra", "1:4"]
    )
    assert code == 0
    assert out.count("closedloft conjecture report") == 2
    assert "counterexamples: 0" in out


def test_cmd_verify_stress_flag():
    code, out, _ = _run(
        ["verify-conjectures", "--which", "1", "--trials", "5", "--seed", "3",
         "--degrees", "3", "--stress"]
    )
    assert code == 0
    assert "stress degree=3 epsilon=" in out


def test_cmd_verify_zero_trials_usage_error():
    code, _, err = _run(["verify-conjectures", "--trials", "0"])
    assert code == 64


def test_cmd_verify_bad_ranges():
    code, _, _ = _run(["verify-conjectures", "--n-range", "banana"])
    assert code == 64
    code, _, _ = _run(["verify-conjectures", "--degrees", "a,b"])
    assert code == 64
