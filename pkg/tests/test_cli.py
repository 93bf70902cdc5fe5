"""CLI contract: outputs mirror library calls, exit codes, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from lapbayes.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolverCommands:
    def test_fit_t_golden(self, capsys):
        code, out, _ = run_cli(["fit-t", "--q50", "5", "--q75", "6.35", "--ess", "10"], capsys)
        assert code == 0
        values = dict(line.split(" = ") for line in out.strip().splitlines())
        assert abs(float(values["beta"]) - 16.89) / 16.89 < 0.01
        assert float(values["mu0"]) == 5.0

    def test_fit_t_json_matches_text(self, capsys):
        code, out_text, _ = run_cli(
            ["fit-t", "--q50", "5", "--q75", "6.35", "--ess", "10"], capsys)
        code2, out_json, _ = run_cli(
            ["fit-t", "--q50", "5", "--q75", "6.35", "--ess", "10", "--json"], capsys)
        text_beta = dict(l.split(" = ") for l in out_text.strip().splitlines())["beta"]
        json_beta = json.loads(out_json)["beta"]
        assert float(text_beta) == json_beta

    def test_ess_heuristic(self, capsys):
        code, out, _ = run_cli(
            ["ess-heuristic", "--sd-post", "0.67", "--n", "13", "--sd-expert", "1.5"], capsys)
        assert code == 0
        val = float(out.strip().split(" = ")[1])
        assert val == pytest.approx(2.59, abs=0.01)

    def test_concord_half(self, capsys):
        code, out, _ = run_cli(["concord", "--p", "0.5"], capsys)
        assert code == 0
        values = dict(line.split(" = ") for line in out.strip().splitlines())
        assert float(values["r"]) == 0.0

    def test_solve_lomax(self, capsys):
        code, out, _ = run_cli(["solve-lomax", "--q13", "1", "--q23", "4"], capsys)
        values = dict(line.split(" = ") for line in out.strip().splitlines())
        assert float(values["alpha"]) == pytest.approx(1.0, abs=1e-8)
        assert float(values["beta"]) == pytest.approx(2.0, abs=1e-8)

    def test_lomax_tertiles_fig1(self, capsys):
        code, out, _ = run_cli(
            ["lomax-tertiles", "--ess", "1,10,25,100", "--median", "1"], capsys)
        lines = out.strip().splitlines()
        assert lines[0] == "ess,q13,median,q23"
        assert len(lines) == 5
        q13s = [float(l.split(",")[1]) for l in lines[1:]]
        q23s = [float(l.split(",")[3]) for l in lines[1:]]
        assert all(np.diff(q13s) > 0)  # tighter tertiles as ESS grows
        assert all(np.diff(q23s) < 0)

    def test_dap_values(self, capsys):
        code, out, _ = run_cli(
            ["dap-tau", "--alpha", "10", "--ytilde", "1", "--t", "1", "--gamma", "0.5"],
            capsys)
        assert float(out.strip().split(" = ")[1]) == pytest.approx(0.163, abs=0.005)
        code, out, _ = run_cli(
            ["dap-median", "--alpha", "10", "--ytilde", "1", "--p", "0.5"], capsys)
        assert float(out.strip().split(" = ")[1]) == pytest.approx(0.717, abs=0.005)
        code, out, _ = run_cli(["moment-match-ln", "--alpha", "10", "--ytilde", "1"], capsys)
        values = dict(line.split(" = ") for line in out.strip().splitlines())
        assert float(values["mu"]) == pytest.approx(-0.32, abs=0.005)
        assert float(values["sigma"]) == pytest.approx(0.34, abs=0.005)

    def test_coherency_command(self, tmp_path, capsys):
        doc = {"matrix": [[1.0, 0.9, 0.7], [0.9, 1.0, 0.9], [0.7, 0.9, 1.0]],
               "pairs": [[1, 3]]}
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        code, out, _ = run_cli(["coherency", "--matrix", str(path), "--json"], capsys)
        assert code == 0
        rep = json.loads(out)["reports"][0]
        assert rep["interval"][0] == pytest.approx(0.62, abs=1e-6)
        assert rep["interval"][1] == pytest.approx(1.0, abs=1e-6)

    def test_fit_ess_gamma_csv(self, tmp_path, capsys):
        from scipy.special import gammaincinv

        path = tmp_path / "pairs.csv"
        rows = [(p, float(gammaincinv(10, p)) / 7) for p in (0.1, 0.25, 0.5, 0.75, 0.9)]
        path.write_text("p,value\n" + "\n".join(f"{p},{v}" for p, v in rows))
        code, out, _ = run_cli(["fit-ess-gamma", "--pairs", str(path)], capsys)
        values = dict(line.split(" = ") for line in out.strip().splitlines())
        assert float(values["shape"]) == pytest.approx(10.0, abs=0.1)


class TestExitCodes:
    def test_input_error_is_2(self, capsys):
        code, _, err = run_cli(["solve-lomax", "--q13", "1", "--q23", "2.5"], capsys)
        assert code == 2
        assert "input error" in err

    def test_missing_file_is_2(self, capsys):
        code, _, err = run_cli(["coherency", "--matrix", "/nope/zz.json"], capsys)
        assert code == 2

    def test_ok_is_0(self, capsys):
        code, _, _ = run_cli(["elicitation-count", "--k", "4"], capsys)
        assert code == 0


class TestSampleCommand:
    def _model_doc(self, tmp_path):
        doc = {
            "model": {"family": "exponential", "parameterization": "median_direct",
                      "interval": [0.001, 10.0]},
            "beliefs": [{"observable": "t_med", "family": "lognormal",
                         "params": {"mu": -0.32, "sigma": 0.34}}],
        }
        path = tmp_path / "model.json"
        path.write_text(json.dumps(doc))
        return path

    def test_sample_writes_csv_and_diagnostics(self, tmp_path, capsys):
        model = self._model_doc(tmp_path)
        out = tmp_path / "draws.csv"
        code, _, _ = run_cli([
            "sample", "--model", str(model), "--out", str(out), "--seed", "7",
            "--chains", "2", "--warmup", "400", "--samples", "500",
        ], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "chain,iter,t_med,lam"
        assert len(lines) == 1 + 2 * 500
        sidecar = json.loads((tmp_path / "draws.csv.diagnostics.json").read_text())
        assert "parameters" in sidecar

    def test_seeded_runs_byte_identical(self, tmp_path, capsys):
        model = self._model_doc(tmp_path)
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            code, _, _ = run_cli([
                "sample", "--model", str(model), "--out", str(out), "--seed", "7",
                "--chains", "2", "--warmup", "400", "--samples", "400",
            ], capsys)
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestPlotData:
    def test_figure1(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["plot-data", "--figure", "1", "--out", str(tmp_path)], capsys)
        assert code == 0
        csv_path = tmp_path / "figure1_lomax_tertiles.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "ess,q13,median,q23"
        assert len(lines) == 5
        medians = [float(l.split(",")[2]) for l in lines[1:]]
        assert all(m == medians[0] for m in medians)

    def test_figure3(self, tmp_path, capsys):
        code, _, _ = run_cli(["plot-data", "--figure", "3", "--out", str(tmp_path)], capsys)
        assert code == 0
        man = json.loads((tmp_path / "figure3_manifest.json").read_text())
        assert man["median"] == pytest.approx(0.717, abs=0.005)

    def test_figure5_overlay_close(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["plot-data", "--figure", "5", "--out", str(tmp_path), "--seed", "3"], capsys)
        assert code == 0
        lines = (tmp_path / "figure5_tmed_posterior.csv").read_text().splitlines()[1:]
        cols = np.array([[float(v) for v in l.split(",")] for l in lines])
        gap = np.max(np.abs(cols[:, 1] - cols[:, 2]))
        assert gap < 0.05  # max pointwise density gap between KDE and expert pdf


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "lapbayes.cli", "elicitation-count", "--k", "4"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "15" in proc.stdout
