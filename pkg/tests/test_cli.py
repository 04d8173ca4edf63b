import json
import math

import numpy as np
import pytest

from switchsim import cli
from switchsim import detector as det
from switchsim import tomography as tomo
from switchsim import trajectory as traj


def run_cli(args):
    return cli.main([str(a) for a in args])


def read_summary(out_dir):
    with open(out_dir / "summary.json") as fh:
        return json.load(fh)


def strip_elapsed(summary):
    summary = dict(summary)
    summary.pop("elapsed_seconds")
    return summary


class TestFidelityCommand:
    def test_outputs(self, tmp_path):
        assert run_cli(["fidelity", "--out", tmp_path]) == 0
        for name in ("fig2.csv", "fig3.csv", "fig4.csv", "summary.json"):
            assert (tmp_path / name).exists()
        fig2 = (tmp_path / "fig2.csv").read_text().strip().splitlines()
        assert fig2[0] == "t_over_tau0,fidelity"
        rows = [tuple(map(float, r.split(","))) for r in fig2[1:]]
        # zero crossing at t = tau0
        near_tau0 = min(rows, key=lambda r: abs(r[0] - 1.0))
        assert near_tau0[1] < 0.02
        assert rows[0][1] == pytest.approx(9.0 / 11.0, abs=1e-9)

    def test_fig3_endpoints(self, tmp_path):
        assert run_cli(["fidelity", "--out", tmp_path]) == 0
        rows = [
            tuple(map(float, r.split(",")))
            for r in (tmp_path / "fig3.csv").read_text().strip().splitlines()[1:]
        ]
        assert rows[0][1] == pytest.approx(0.0, abs=1e-12)  # ratio 1
        assert rows[-1][1] > 0.99  # ratio 1e6

    def test_fig4_endpoints(self, tmp_path):
        assert run_cli(["fidelity", "--out", tmp_path]) == 0
        rows = [
            tuple(map(float, r.split(",")))
            for r in (tmp_path / "fig4.csv").read_text().strip().splitlines()[1:]
        ]
        assert rows[0][1] == pytest.approx(1.0)
        assert rows[-1][1] == pytest.approx(0.0, abs=1e-9)

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ratioo": 10}))
        assert run_cli(["fidelity", "--config", cfg, "--out", tmp_path]) == 2

    def test_bad_ratio_value(self, tmp_path):
        assert run_cli(["fidelity", "--out", tmp_path, "--set", "ratio=0.5"]) == 2


class TestSimulateCommand:
    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--seed", 5, "--set", "n_traj=5000"]
        assert run_cli(args + ["--out", a]) == 0
        assert run_cli(args + ["--out", b]) == 0
        assert (a / "histogram.csv").read_bytes() == (b / "histogram.csv").read_bytes()
        assert strip_elapsed(read_summary(a)) == strip_elapsed(read_summary(b))

    def test_summary_contents(self, tmp_path):
        assert (
            run_cli(
                [
                    "simulate", "--out", tmp_path, "--seed", 9,
                    "--set", "n_traj=20000",
                    "--set", "params.gamma_L=2", "--set", "params.gamma_R=2",
                ]
            )
            == 0
        )
        s = read_summary(tmp_path)
        assert s["tool_version"]
        assert "config_echo" in s and "elapsed_seconds" in s
        # equal rates: truncated-exponential mean
        gamma, tau = 2.0, s["config_echo"]["tau"]
        trunc = 1.0 - math.exp(-gamma * tau)
        mean = 1.0 / gamma - tau * math.exp(-gamma * tau) / trunc
        assert s["mean_switch_time"] == pytest.approx(mean, abs=0.01)
        assert s["chi2"]["p_value"] > 1e-6

    def test_histogram_round_trips_in_rate_units(self, tmp_path):
        assert (
            run_cli(["simulate", "--out", tmp_path, "--seed", 2, "--set", "n_traj=3000"])
            == 0
        )
        h = traj.read_histogram_csv(tmp_path / "histogram.csv", time_scale=10.0)
        assert h.total == 3000
        assert h.bin_edges[-1] == pytest.approx(1.0)

    def test_simulation_error_exit_code(self, tmp_path):
        code = run_cli(
            [
                "simulate", "--out", tmp_path, "--seed", 1,
                "--set", "method=euler", "--set", "dt=0.5",
                "--set", "params.E=30",
            ]
        )
        assert code == 3


class TestTomographyCommand:
    def make_histogram(self, tmp_path, p, bloch, n=40000):
        cfg = traj.SimConfig(n_traj=n, tau=1.2, seed=77, n_bins=120)
        h = traj.run_ensemble(p, bloch.to_density(), cfg)
        path = tmp_path / "hist.csv"
        traj.write_histogram_csv(h, path, time_scale=p.gamma_R)
        return path

    def test_round_trip(self, tmp_path):
        p = det.DetectorParams(1.0, 5.0, math.pi / 4, 60.0)
        truth = tomo.BlochComponents(0.3, -0.4, 0.5)
        hist = self.make_histogram(tmp_path, p, truth)
        code = run_cli(
            [
                "tomography", "--out", tmp_path, "--seed", 4,
                "--set", f"histogram={hist}",
                "--set", "params.gamma_L=1", "--set", "params.gamma_R=5",
                "--set", f"params.beta={math.pi / 4}", "--set", "params.E=60",
            ]
        )
        assert code == 0
        with open(tmp_path / "tomography.json") as fh:
            result = json.load(fh)
        assert result["converged"]
        assert abs(result["bloch"]["x"] - truth.x) < 0.05
        assert abs(result["bloch"]["z"] - truth.z) < 0.05

    def test_not_identifiable_exit(self, tmp_path):
        p = det.DetectorParams(1.0, 5.0, 0.0, 60.0)
        hist = self.make_histogram(tmp_path, p, tomo.BlochComponents(0, 0, 0.5), n=5000)
        code = run_cli(
            [
                "tomography", "--out", tmp_path, "--seed", 4,
                "--set", f"histogram={hist}",
                "--set", "params.gamma_L=1", "--set", "params.gamma_R=5",
                "--set", "params.beta=0", "--set", "params.E=60",
            ]
        )
        assert code == 5
        with open(tmp_path / "tomography.json") as fh:
            assert json.load(fh)["converged"] is False


class TestSCurvesCommand:
    def test_outputs_and_separation_bound(self, tmp_path):
        assert run_cli(["scurves", "--out", tmp_path]) == 0
        for kind in ("strong", "weak_incoherent", "weak_coherent"):
            assert (tmp_path / f"scurve_{kind}.csv").exists()
            assert (tmp_path / f"fidelity_{kind}.csv").exists()
        rows = [
            tuple(map(float, r.split(",")))
            for r in (tmp_path / "scurve_strong.csv").read_text().strip().splitlines()[1:]
        ]
        # separation bounded by 2m - 1 = 0.4 at mixing 0.7
        assert all(abs(r[4] - r[3]) <= 0.4 + 1e-9 for r in rows)

    def test_beta_zero_identical_curves(self, tmp_path):
        assert (
            run_cli(["scurves", "--out", tmp_path, "--set", "mixing_p=1.0"]) == 0
        )
        ref = None
        for kind in ("strong", "weak_incoherent", "weak_coherent"):
            rows = (tmp_path / f"scurve_{kind}.csv").read_text()
            if ref is None:
                ref = rows
            else:
                assert rows == ref

    def test_steepness_increases_coherent_fidelity(self, tmp_path):
        a, b = tmp_path / "s5", tmp_path / "s10"
        run_cli(["scurves", "--out", a, "--set", 'kinds=["weak_coherent"]'])
        run_cli(
            ["scurves", "--out", b, "--set", 'kinds=["weak_coherent"]', "--set", "steepness=10"]
        )

        def fidelity_at(path, beta):
            rows = [
                tuple(map(float, r.split(",")))
                for r in (path / "fidelity_weak_coherent.csv").read_text().strip().splitlines()[1:]
            ]
            return min(rows, key=lambda r: abs(r[0] - beta))[1]

        assert fidelity_at(b, math.pi / 3) > fidelity_at(a, math.pi / 3)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli(["scurves", "--out", a])
        run_cli(["scurves", "--out", b])
        for kind in ("strong", "weak_incoherent", "weak_coherent"):
            assert (a / f"scurve_{kind}.csv").read_bytes() == (
                b / f"scurve_{kind}.csv"
            ).read_bytes()


class TestCoherentCommand:
    def test_outputs(self, tmp_path):
        assert run_cli(["coherent", "--out", tmp_path]) == 0
        for law in ("dominant_coupling", "large_bias"):
            rows = [
                tuple(map(float, r.split(",")))
                for r in (tmp_path / f"coherent_{law}.csv").read_text().strip().splitlines()[1:]
            ]
            # fidelity vanishes at the degeneracy point
            assert rows[-1][3] == pytest.approx(0.0, abs=1e-9)
        dom = [
            tuple(map(float, r.split(",")))
            for r in (tmp_path / "coherent_dominant_coupling.csv").read_text().strip().splitlines()[1:]
        ]
        assert dom[0][3] == pytest.approx(1.0)  # beta = 0


class TestParser:
    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["frobnicate"])

    def test_set_parsing(self):
        cfg = {}
        cli._apply_set(cfg, "a.b=3")
        cli._apply_set(cfg, 'c=["x"]')
        cli._apply_set(cfg, "d=text")
        assert cfg == {"a": {"b": 3}, "c": ["x"], "d": "text"}
