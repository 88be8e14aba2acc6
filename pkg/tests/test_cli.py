import csv
import json
from pathlib import Path

import pytest

from cvtele.cli import main, selftest_report

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*argv):
    return main(list(argv))


class TestExitCodes:
    def test_fig2_passes(self, tmp_path, capsys):
        out = tmp_path / "r.txt"
        assert run_cli("run", "fig2_coherent", "--out", str(out)) == 0
        text = out.read_text()
        assert "F_c" in text and "all checks pass" in text

    def test_fig2_reports_fidelity(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_cli("run", "fig2_coherent", "--format", "structured", "--out", str(out)) == 0
        f = next(e for e in json.loads(out.read_text())["entries"] if e["name"] == "F_c")
        assert f["pass"] and abs(f["linear"] - 0.70) <= 0.01

    def test_empty_file(self, tmp_path, capsys):
        p = tmp_path / "empty.toml"
        p.write_text("")
        assert run_cli("run", "--scenario", str(p)) == 2
        assert "kind" in capsys.readouterr().err

    def test_missing_file_named(self, tmp_path, capsys):
        p = tmp_path / "absent.toml"
        assert run_cli("run", "--scenario", str(p)) == 2
        assert str(p) in capsys.readouterr().err

    def test_malformed_reports_line(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text('kind = "coherent_teleport"\n\n[teleporter\n')
        assert run_cli("run", str(p)) == 2
        assert "line 3" in capsys.readouterr().err

    def test_bad_field_reported(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text('kind = "coherent_teleport"\n[resources.epr2]\nv_sq_x = "a lot"\nv_sq_p = 0.1\n')
        assert run_cli("run", str(p)) == 2
        assert "resources.epr2.v_sq_x" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert run_cli("run", "fig2_coherent", "--colour") == 2

    def test_unknown_subcommand(self, capsys):
        assert run_cli("teleport") == 2

    def test_no_scenario(self, capsys):
        assert run_cli("run") == 2

    def test_selftest(self, capsys):
        assert run_cli("selftest") == 0
        assert "all checks pass" in capsys.readouterr().out

    def test_selftest_checks(self):
        rep = selftest_report()
        assert rep.all_pass and len(rep.entries) == 7

    def test_failing_check_exits_one(self, tmp_path, capsys):
        p = tmp_path / "fail.toml"
        p.write_text('kind = "coherent_teleport"\n[resources.epr2]\nvacuum = true\n'
                     '[targets]\n"F_c" = { value = 0.9, tol = 0.01 }\n')
        assert run_cli("run", str(p)) == 1

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert run_cli("selftest", "--out", str(blocker / "r.txt")) == 1

    def test_unwritable_plot_dir(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert run_cli("sweep", "gain_sweep", "--out", str(tmp_path / "r"), "--plot-dir", str(blocker / "d")) == 1

    def test_negative_seed(self, capsys):
        assert run_cli("run", "fig2_coherent", "--seed", "-1") == 2

    def test_list(self, capsys):
        assert run_cli("list") == 0
        assert "fig4_swap" in capsys.readouterr().out


class TestSubcommands:
    def test_calibrate(self, tmp_path):
        out = tmp_path / "c.json"
        assert run_cli("calibrate", "fig3_epr1", "--format", "structured", "--out", str(out)) == 0
        data = json.loads(out.read_text())
        assert data["calibrations"][0]["residual_db"] < 1e-6

    def test_calibrate_without_stages(self, capsys):
        assert run_cli("calibrate", "delta_sweep") == 2

    def test_sweep_override(self, tmp_path):
        out = tmp_path / "s.json"
        assert run_cli("sweep", "delta_sweep", "--param", "epr2.delta", "--values", "1,0.5",
                       "--format", "structured", "--out", str(out)) == 0
        reps = json.loads(out.read_text())["reports"]
        assert [r["scenario"] for r in reps] == ["delta_sweep[epr2.delta=1]", "delta_sweep[epr2.delta=0.5]"]

    def test_sweep_bad_values(self, capsys):
        assert run_cli("sweep", "delta_sweep", "--values", "1,x") == 2

    def test_seed_and_shots_override(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli("run", "fig2_coherent", "--shots", "2000", "--seed", "1", "--format", "structured", "--out", str(a))
        run_cli("run", "fig2_coherent", "--shots", "2000", "--seed", "2", "--format", "structured", "--out", str(b))
        ea = {e["name"]: e["linear"] for e in json.loads(a.read_text())["entries"]}
        eb = {e["name"]: e["linear"] for e in json.loads(b.read_text())["entries"]}
        assert ea["F_c"] == eb["F_c"] and ea["mc.F_c"] != eb["mc.F_c"]

    def test_plot_dir(self, tmp_path):
        d = tmp_path / "plots"
        assert run_cli("run", "fig4_swap", "--shots", "1000", "--out", str(tmp_path / "r"), "--plot-dir", str(d)) == 0
        assert (d / "fig4_swap.png").stat().st_size > 0
        rows = list(csv.DictReader((d / "fig4_swap.csv").open()))
        assert any(r["quantity"] == "delta_ref_out" for r in rows)

    def test_sweep_plot(self, tmp_path):
        d = tmp_path / "plots"
        assert run_cli("sweep", "delta_sweep", "--out", str(tmp_path / "r"), "--plot-dir", str(d)) == 0
        assert (d / "delta_sweep.png").exists()
        rows = [r for r in csv.DictReader((d / "delta_sweep.csv").open()) if r["quantity"] == "F_c"]
        assert [float(r["sweep_value"]) for r in rows] == [1.0, 0.5, 0.42]


class TestGolden:
    @pytest.mark.parametrize("argv,golden", [
        (("run", "fig2_coherent"), "fig2_coherent.json"),
        (("run", "fig3_epr1"), "fig3_epr1.json"),
        (("selftest",), "selftest.json"),
        (("sweep", "gain_sweep"), "gain_sweep.json"),
    ])
    def test_structured_byte_stable(self, tmp_path, argv, golden):
        out = tmp_path / "out.json"
        assert run_cli(*argv, "--format", "structured", "--out", str(out)) == 0
        assert out.read_bytes() == (GOLDEN / golden).read_bytes()
