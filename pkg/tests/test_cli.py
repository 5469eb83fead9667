import json
import subprocess
import sys

import pytest

from qdp.cli import main

LOGISTIC_MODEL = {
    "jumps": [
        {"delta": 1, "rate": [{"power": [1, 0], "coeff": "1"},
                              {"power": [1, 1], "coeff": "1"}]},
        {"delta": -1, "rate": [{"power": [1, 0], "coeff": "1"},
                               {"power": [2, 0], "coeff": "1"}]},
    ],
    "N": 400, "lambda": 0.0,
}


def write_config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", cfg, "--out", str(out), *extra])


class TestAnalyze:
    def test_logistic_model(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"model": LOGISTIC_MODEL})
        assert run("analyze", cfg, tmp_path / "out") == 0
        rep = json.loads((tmp_path / "out" / "analysis.json").read_text())
        assert {"power": [1, 1], "coeff": "1"} in rep["F"]
        assert {"power": [2, 0], "coeff": "-1"} in rep["F"]
        assert {"power": [1, 0], "coeff": "2"} in rep["G"]
        assert rep["bifurcation"]["kind"] == "transcritical"
        assert rep["dd_curve"]["upright"] is True
        assert rep["strong_stochasticity"]["status"] == "HOLDS"
        assert rep["branch"]["z_star"] == "1"
        assert rep["errata_notes"]

    def test_folded_case_reports_fold(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "F": [{"power": [4, 0], "coeff": "-1"},
                  {"power": [1, 2], "coeff": "1"}],
            "G": [{"power": [3, 0], "coeff": "1"},
                  {"power": [0, 3], "coeff": "1"}]})
        assert run("analyze", cfg, tmp_path / "out") == 0
        rep = json.loads((tmp_path / "out" / "analysis.json").read_text())
        assert rep["dd_curve"]["upright"] is False
        assert rep["dd_curve"]["fold_intervals"]

    def test_strong_stochasticity_failure_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "F": [{"power": [0, 1], "coeff": "1"}],
            "G": [{"power": [2, 0], "coeff": "1"}]})
        assert run("analyze", cfg, tmp_path / "out") == 2
        rep = json.loads((tmp_path / "out" / "analysis.json").read_text())
        assert rep["strong_stochasticity"]["status"] == "FAILS"
        assert rep["error"]["type"] == "StrongStochasticityError"

    def test_classification_included_with_scales(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "model": LOGISTIC_MODEL,
            "scales": {"a": {"coeff": "1", "exp": "-1"},
                       "b": {"coeff": "1", "exp": "-1"},
                       "lambda": {"coeff": "1", "exp": "2"}}})
        assert run("analyze", cfg, tmp_path / "out") == 0
        rep = json.loads((tmp_path / "out" / "analysis.json").read_text())
        cls = rep["classification"]
        assert cls["range"] == "DD_SCALE"
        assert cls["F_limit"] == {"2": "-1"}
        assert cls["G_limit"] == {"1": "2"}


CATALOG = {
    "transcritical": ({"F": [{"power": [2, 0], "coeff": "-1"},
                             {"power": [1, 1], "coeff": "1"}],
                       "G": [{"power": [1, 0], "coeff": "2"}]},
                      ("1", ["1", "0"], ["2", "-1"])),
    "saddle": ({"F": [{"power": [2, 0], "coeff": "-1"},
                      {"power": [0, 1], "coeff": "1"}],
                "G": [{"power": [0, 0], "coeff": "1"}]},
               ("4/3", ["2/3", "0"], ["2", "-1"])),
    "pitchfork": ({"F": [{"power": [3, 0], "coeff": "-1"},
                         {"power": [1, 1], "coeff": "1"}],
                   "G": [{"power": [1, 0], "coeff": "2"}]},
                  ("4/3", ["2/3", "0"], ["2", "-1"])),
}


class TestDiagram:
    @pytest.mark.parametrize("name", list(CATALOG))
    def test_catalog_exponents(self, tmp_path, name):
        fg, (nu_star, piece0, piece1) = CATALOG[name]
        cfg = write_config(tmp_path, "c.json", {**fg, "epsilon": [0.04]})
        out = tmp_path / name
        assert run("diagram", cfg, out) == 0
        rep_cfg = write_config(tmp_path, "c2.json", fg)
        assert run("analyze", rep_cfg, out) == 0
        rep = json.loads((out / "analysis.json").read_text())
        assert rep["branch"]["nu_star"] == nu_star
        pieces = rep["dd_curve"]["pieces"]
        assert [pieces[0]["eps_exp"], pieces[0]["lam_exp"]] == piece0
        assert [pieces[1]["eps_exp"], pieces[1]["lam_exp"]] == piece1
        assert (out / "diagram.csv").exists()
        assert (out / "ddcurve.csv").exists()
        header = (out / "diagram.csv").read_text().splitlines()[0]
        assert header == "lambda,phi,b,phi_star_lo,phi_star_hi,b_star,regime"

    def test_missing_epsilon_is_usage_error(self, tmp_path):
        fg, _ = CATALOG["transcritical"]
        cfg = write_config(tmp_path, "c.json", fg)
        assert run("diagram", cfg, tmp_path / "out") == 1

    def test_folded_case_multivalued(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "F": [{"power": [4, 0], "coeff": "-1"},
                  {"power": [1, 2], "coeff": "1"}],
            "G": [{"power": [3, 0], "coeff": "1"},
                  {"power": [0, 3], "coeff": "1"}],
            "epsilon": [0.2]})
        out = tmp_path / "out"
        assert run("diagram", cfg, out) == 0
        rows = (out / "ddcurve.csv").read_text().splitlines()[1:]
        by_piece = {}
        for row in rows:
            lam, x, idx = row.split(",")
            by_piece.setdefault(int(idx), []).append(float(lam))
        assert set(by_piece) == {0, 1, 2}
        # the folded middle piece revisits lambda values covered by piece 0
        assert min(by_piece[0][-1], max(by_piece[1])) > min(by_piece[1])

    def test_svg_rendering(self, tmp_path):
        fg, _ = CATALOG["transcritical"]
        cfg = write_config(tmp_path, "c.json", {**fg, "epsilon": [0.04]})
        out = tmp_path / "out"
        assert run("diagram", cfg, out, "--svg") == 0
        assert (out / "diagram.svg").exists()


def validate_config(replicas=150, em=300, eps=(0.2,)):
    return {
        "model": LOGISTIC_MODEL,
        "scales": {"a": {"coeff": "1", "exp": "-1"},
                   "b": {"coeff": "1", "exp": "-1"},
                   "lambda": None,
                   "x0": {"coeff": "1", "exp": "1"},
                   "center": "zero"},
        "epsilon": list(eps),
        "replicas": replicas, "em_replicas": em, "seed": 31,
        "dt": 0.005, "horizon": 1.0, "t_ref": 1.0, "compare_times": [1.0],
    }


class TestSimulateValidate:
    def test_simulate_writes_ensembles(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", validate_config(10, 10))
        out = tmp_path / "out"
        assert run("simulate", cfg, out) == 0
        lines = (out / "ensemble_chain_eps0.2.jsonl").read_text().splitlines()
        assert len(lines) == 10
        rec = json.loads(lines[0])
        assert rec["replica"] == 0
        assert rec["path"][0][0] == 0.0

    def test_zero_replicas_usage_error(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", validate_config(0, 10))
        assert run("simulate", cfg, tmp_path / "out") == 1

    def test_validate_passes_and_reports(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", validate_config())
        out = tmp_path / "out"
        code = run("validate", cfg, out)
        rep = json.loads((out / "validate_report.json").read_text())
        assert code in (0, 3)
        assert rep["sde"]["drift"] == {"2": "-1"}
        assert rep["sde"]["diffusion"] == {"1": "2"}
        assert rep["config"]["seed"] == 31
        assert "0.2" in rep["results"]

    def test_validate_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", validate_config())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        c1 = run("validate", cfg, out1)
        c2 = run("validate", cfg, out2)
        assert c1 == c2
        b1 = (out1 / "validate_report.json").read_bytes()
        b2 = (out2 / "validate_report.json").read_bytes()
        assert b1 == b2

    def test_simulate_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", validate_config(10, 10))
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert run("simulate", cfg, out1) == run("simulate", cfg, out2)
        name = "ensemble_chain_eps0.2.jsonl"
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestUsage:
    def test_unknown_command(self, tmp_path):
        assert main(["frobnicate", "--config", "x"]) == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["analyze", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 1

    def test_both_model_and_fg_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "model": LOGISTIC_MODEL,
            "F": [{"power": [1, 0], "coeff": "1"}],
            "G": [{"power": [1, 0], "coeff": "1"}]})
        assert run("analyze", cfg, tmp_path / "out") == 1

    def test_empty_config_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {})
        assert run("analyze", cfg, tmp_path / "out") == 1

    def test_console_entry_point(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"model": LOGISTIC_MODEL})
        proc = subprocess.run(
            [sys.executable, "-m", "qdp.cli", "analyze", "--config", cfg,
             "--out", str(tmp_path / "out")],
            capture_output=True, text=True)
        assert proc.returncode == 0
