import csv
import json
import math

import numpy as np
import pytest

from leafwise.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, SCHEMA_VERSION, main

TUBE = """[chart]
t = 0, 1
z = -1, 1
r = 1e-6, 1
theta = period 6.283185307179586

[forms]
alpha = dz + {theta_coeff}*dtheta
beta = dt
leaf_axes = z, r, theta
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture
def form_file(tmp_path):
    def write(text, name="form.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


class TestVerify:
    def test_t4_contact(self, capsys):
        code, rep = run_json(capsys, "verify", "--model", "t4", "--p", "0", "--q", "0", "--r", "0")
        assert code == EXIT_PASS and rep["status"] == "pass"
        (check,) = rep["checks"]
        assert abs(check["value"] - 2 * math.pi) < 1e-9
        assert check["grid_points"] == 17**4 and check["tier"] == "EXACT"
        assert rep["schema_version"] == SCHEMA_VERSION and rep["config"]["model"] == "t4"

    def test_t4_parallel(self, capsys):
        code, rep = run_json(capsys, "verify", "--model", "t4", "--check", "parallel", "--grid", "9")
        assert code == EXIT_PASS and rep["checks"][0]["value"] < 1e-4

    def test_bad_form_file_has_witness(self, capsys, form_file):
        path = form_file("[chart]\nt = period 1\nx = period 1\ny = period 1\nz = period 1\n\n[forms]\nalpha = dz\nbeta = dt\n", "bad.cfg")
        code, rep = run_json(capsys, "verify", "--form-file", path)
        assert code == EXIT_FAIL and rep["status"] == "fail"
        assert rep["checks"][0]["witness"] is not None

    def test_form_file_equals_model(self, capsys, form_file):
        path = form_file(TUBE.format(theta_coeff="r**2"))
        code, rep = run_json(capsys, "verify", "--form-file", path, "--check", "all", "--grid", "9")
        assert code == EXIT_PASS and [c["name"] for c in rep["checks"]] == ["contact", "frobenius", "parallel"]

    def test_single_leaf_form(self, capsys, form_file):
        path = form_file("[chart]\nx = -1, 1\ny = -1, 1\nz = -1, 1\n\n[forms]\nalpha = dz + x*dy\n")
        code, _ = run_json(capsys, "verify", "--form-file", path)
        assert code == EXIT_PASS

    def test_symplectic_model(self, capsys):
        code, rep = run_json(capsys, "verify", "--model", "standard_symplectic", "--check", "all", "--grid", "7")
        assert code == EXIT_PASS and len(rep["checks"]) == 3

    def test_text_format(self, capsys):
        code, out = run(capsys, "verify", "--model", "t4", "--grid", "5", "--format", "text")
        assert code == EXIT_PASS and out.startswith("leafwise verify: pass") and "[PASS] contact" in out


class TestFields:
    def test_t4_columns(self, capsys, tmp_path):
        table = tmp_path / "fields.csv"
        code, rep = run_json(capsys, "fields", "--model", "t4", "--grid", "5", "--table", str(table))
        assert code == EXIT_PASS
        mean = rep["result"]["transverse"]["mean_field"]
        assert [mean[k] for k in ("t", "x", "y", "z")] == pytest.approx([-1, 0, 0, 0], abs=1e-12)
        assert rep["result"]["transverse"]["max_deviation_from_mean"] < 1e-12
        assert rep["result"]["reeb"]["conditions_finite"]
        with open(table, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:4] == ["t", "x", "y", "z"] and len(rows) == 5**4 + 1
        T = np.array([[float(v) for v in row[4:8]] for row in rows[1:]])
        np.testing.assert_allclose(T, np.broadcast_to([-1, 0, 0, 0], T.shape), atol=1e-12)

    def test_local_reeb(self, capsys):
        code, rep = run_json(capsys, "fields", "--model", "local", "--grid", "5")
        assert code == EXIT_PASS
        reeb = rep["result"]["reeb"]
        # exact up to the rounding of the least-squares solve
        mean = reeb["mean_field"]
        assert [mean[k] for k in ("t", "z", "r", "theta")] == pytest.approx([0, 1, 0, 0], abs=1e-15)
        assert reeb["max_deviation_from_mean"] < 1e-15 and reeb["max_residual"] < 1e-12


class TestFlows:
    def test_transport_local(self, capsys):
        code, rep = run_json(capsys, "transport", "--model", "local", "--step", "0.01", "--t-end", "0.5")
        assert code == EXIT_PASS and rep["checks"][0]["value"] < 1e-8

    def test_gray_rotating(self, capsys):
        code, rep = run_json(capsys, "gray", "--model", "rotating_t4", "--step", "1e-2")
        assert code == EXIT_PASS and rep["checks"][0]["value"] < 1e-3

    def test_gray_constant(self, capsys):
        code, rep = run_json(capsys, "gray", "--model", "t4", "--step", "0.1")
        assert code == EXIT_PASS
        for state in rep["result"]["states"]:
            assert state["g"] == 1.0 and state["end"] == state["seed"]
        assert rep["checks"][0]["value"] < 1e-10


class TestConstructions:
    def test_lutz(self, capsys):
        code, rep = run_json(capsys, "lutz", "--grid", "9")
        assert code == EXIT_PASS
        assert 0 < rep["result"]["r_star"] < rep["result"]["R_outer"]

    def test_lutz_malformed_region(self, capsys, form_file):
        path = form_file(TUBE.format(theta_coeff="2*r**2"))
        code, rep = run_json(capsys, "lutz", "--form-file", path, "--grid", "9")
        assert code == EXIT_CONFIG and rep["status"] == "config_error"
        assert rep["deviation"] > 0.1

    def test_lutz_outside_chart(self, capsys):
        code, _ = run_json(capsys, "lutz", "--R-outer", "2")
        assert code == EXIT_CONFIG

    def test_glue(self, capsys):
        code, rep = run_json(capsys, "glue")
        assert code == EXIT_PASS
        assert max(rep["result"]["residual_f0"], rep["result"]["residual_f1"]) < 1e-12


class TestConfig:
    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[run]\noperation = verify\nmodel = t4\n\n[model]\np = 1\n\n[grid]\npoints = 5\n")
        code, rep = run_json(capsys, "verify", "--config", str(cfg), "--q", "0.5")
        assert code == EXIT_PASS
        assert rep["config"]["parameters"] == {"p": 1.0, "q": 0.5} and rep["config"]["grid"] == 5

    @pytest.mark.parametrize(
        "text",
        [
            "[run]\nmodle = t4\n",
            "[extras]\nfoo = 1\n",
            "[grid]\npoints = 1\n",
            "[model]\nradius = 2\n",
            "[run]\noperation = glue\n",
            "[tolerances]\nfd = tiny\n",
        ],
    )
    def test_strict_rejection(self, capsys, tmp_path, text):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(text)
        code, rep = run_json(capsys, "verify", "--config", str(cfg))
        assert code == EXIT_CONFIG and rep["status"] == "config_error"

    def test_bad_flags(self, capsys, form_file):
        assert run_json(capsys, "verify", "--param", "nope=1")[0] == EXIT_CONFIG
        assert run_json(capsys, "transport", "--model", "overtwisted")[0] == EXIT_CONFIG
        assert run_json(capsys, "lutz", "--model", "t4")[0] == EXIT_CONFIG
        path = form_file("[chart]\nx = -1, 1\n\n[forms]\nalpha = dx*dx\n")
        assert run_json(capsys, "verify", "--form-file", path)[0] == EXIT_CONFIG
        with pytest.raises(SystemExit):
            main(["verify", "--model", "nonexistent"])

    def test_output_file(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code = main(["verify", "--grid", "5", "--output", str(out)])
        assert code == EXIT_PASS and capsys.readouterr().out == ""
        assert json.loads(out.read_text())["status"] == "pass"

    @pytest.mark.parametrize("argv", [["verify", "--grid", "9"], ["gray", "--step", "0.05"], ["glue", "--grid", "9"]])
    def test_byte_identical_reports(self, capsys, argv):
        first = run(capsys, *argv)
        second = run(capsys, *argv)
        assert first == second
