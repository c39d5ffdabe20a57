import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import oracles
from jmfbm.cli import main

DEMO_CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"
MODEL = ["--r", "0.05", "--sigma", "0.2", "--hurst", "0.7", "--s0", "100"]
JUMPS = ["--lambda", "1", "--k", "-0.1", "--sigma-j", "0.25"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, list(csv.DictReader(io.StringIO(out.getvalue())))


def raw(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


class TestPrice:
    def test_vanilla_black_scholes(self):
        code, rows = run("price", "vanilla", "--r", "0.05", "--sigma", "0.2", "--hurst", "0.5",
                         "--s0", "100", "--k1", "95", "--t1", "1")
        assert code == 0
        ref = oracles.black_scholes_call(100.0, 95.0, 1.0, 0.05, 0.08)
        assert abs(float(rows[0]["price"]) - ref) < 1e-12

    def test_compound_zero_strike(self):
        _, van = run("price", "vanilla", *MODEL, *JUMPS, "--k1", "100", "--t1", "1")
        code, cmp = run("price", "compound", *MODEL, *JUMPS, "--k1", "0", "--t1", "0.5",
                        "--k2", "100", "--t2", "1")
        assert code == 0
        assert abs(float(cmp[0]["price"]) - float(van[0]["price"])) < 1e-9
        assert float(cmp[0]["critical_price"]) == 0.0

    def test_extendible_reports_residuals(self):
        code, rows = run("price", "extendible", *MODEL, *JUMPS, "--k1", "100", "--t1", "0.5",
                         "--k2", "105", "--t2", "1", "--premium", "2")
        assert code == 0
        row = rows[0]
        assert row["levels_source"] == "solved"
        assert abs(float(row["residual_L"])) < 1e-9 and abs(float(row["residual_M"])) < 1e-9

    def test_extendible_equal_levels(self):
        code, rows = run("price", "extendible", *MODEL, "--k1", "100", "--t1", "0.5", "--k2", "105",
                         "--t2", "1", "--premium", "2", "--l", "100", "--m", "100")
        _, van = run("price", "vanilla", *MODEL, "--k1", "100", "--t1", "0.5")
        assert code == 0 and rows[0]["levels_source"] == "given"
        assert abs(float(rows[0]["price"]) - float(van[0]["price"])) < 1e-12

    def test_nextendible(self):
        code, rows = run("price", "nextendible", *MODEL, "--k1", "100", "--t1", "0.5", "--k2", "105",
                         "--t2", "1", "--premium", "2", "--t3", "1.5", "--k3", "110",
                         "--premium3", "1e6")
        _, one = run("price", "extendible", *MODEL, "--k1", "100", "--t1", "0.5", "--k2", "105",
                     "--t2", "1", "--premium", "2")
        assert code == 0
        assert abs(float(rows[0]["price"]) - float(one[0]["price"])) < 1e-10
        assert rows[0]["L2"] == rows[0]["M2"] == "105"

    def test_flagged_exit_code(self):
        code, _ = run("price", "vanilla", *MODEL, "--lambda", "200", "--k", "0.1", "--sigma-j", "0.1",
                      "--k1", "100", "--t1", "1")
        assert code == 2

    def test_missing_setting(self, capsys):
        code, _ = run("price", "vanilla", "--r", "0.05")
        assert code == 1
        assert "missing required setting" in capsys.readouterr().err

    def test_bad_flag(self, capsys):
        assert run("price", "swaption")[0] == 1

    def test_no_extension_region_is_error(self, capsys):
        code, _ = run("price", "extendible", *MODEL, "--k1", "100", "--t1", "0.5", "--k2", "105",
                      "--t2", "1", "--premium", "80")
        assert code == 1
        assert "plain call" in capsys.readouterr().err


class TestConfigFile:
    def test_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("# model\nr = 0.05\nsigma = 0.2  # vol\nhurst = 0.5\ns0 = 100\n"
                       "k1 = 100\nt1 = 1\n")
        _, from_file = run("price", "vanilla", "--config", str(cfg))
        _, flagged = run("price", "vanilla", "--config", str(cfg), "--sigma", "0.3")
        assert float(from_file[0]["sigma"]) == 0.2
        assert float(flagged[0]["sigma"]) == 0.3
        # defaults fill what neither gives
        assert float(from_file[0]["q"]) == 0.0 and float(from_file[0]["t0"]) == 0.0

    @pytest.mark.parametrize("text,message", [
        ("r 0.05\n", "expected"),
        ("volatility = 0.2\n", "unknown key"),
        ("r = fast\n", "bad value"),
    ])
    def test_malformed(self, tmp_path, capsys, text, message):
        cfg = tmp_path / "bad.conf"
        cfg.write_text(text)
        code, _ = run("price", "vanilla", "--config", str(cfg))
        assert code == 1
        assert message in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert run("price", "vanilla", "--config", "/nonexistent/run.conf")[0] == 1


TABLE_ARGS = ("--config", str(DEMO_CONFIGS / "table1.conf"), "--t1-list", "1,0.5",
              "--k1-list", "10,11,12,13,14")
FIGURE_ARGS = ("--config", str(DEMO_CONFIGS / "figure1.conf"), "--t1-list", "0.25,0.5,0.75,1",
               "--k1-list", "0.8,1,1.2,1.4")


class TestTable:
    def test_refuses_to_invent_parameters(self, capsys):
        code, _ = run("table", "--r", "0.1", "--sigma", "0.1", "--hurst", "0.8", "--s0", "12",
                      "--l", "5", "--m", "15", "--premium", "0.05", "--t1-list", "1",
                      "--k1-list", "10")
        assert code == 1
        err = capsys.readouterr().err
        for key in ("lambda", "t2", "k2", "t0"):
            assert key in err

    def test_columns_and_richardson(self):
        code, rows = run("table", *TABLE_ARGS)
        assert code == 0 and len(rows) == 10
        assert list(rows[0]) == ["t1", "k1", "price_merton", "price_mfbm", "price_jmfbm",
                                 "price_richardson"]
        for row in rows:
            assert float(row["price_richardson"]) == 2 * float(row["price_jmfbm"]) - float(row["price_merton"])

    def test_single_cell(self):
        code, rows = run("table", "--config", str(DEMO_CONFIGS / "table1.conf"),
                         "--t1-list", "1", "--k1-list", "10")
        assert code == 0 and len(rows) == 1

    def test_matches_golden(self, fixtures_dir):
        _, text = raw("table", *TABLE_ARGS)
        assert_csv_close(text, (fixtures_dir / "table1.csv").read_text())

    def test_byte_stable(self):
        assert raw("table", *TABLE_ARGS)[1] == raw("table", *TABLE_ARGS)[1]

    def test_empty_grid(self):
        assert run("table", "--config", str(DEMO_CONFIGS / "table1.conf"),
                   "--t1-list", "", "--k1-list", "10")[0] == 1


class TestFigure:
    def test_models_coincide(self):
        code, rows = run("figure", "--r", "0.05", "--sigma", "0.2", "--hurst", "0.5", "--s0", "100",
                         "--lambda", "0", "--t2", "1.5", "--k2", "105", "--t0", "0",
                         "--premium", "2", "--l", "85", "--m", "130",
                         "--t1-list", "0.5,1", "--k1-list", "95,100")
        assert code == 0 and len(rows) == 4
        for row in rows:
            assert abs(float(row["jmfbm_minus_merton"])) < 1e-10
            assert abs(float(row["jmfbm_minus_mfbm"])) < 1e-10

    def test_matches_golden(self, fixtures_dir):
        _, text = raw("figure", *FIGURE_ARGS)
        assert_csv_close(text, (fixtures_dir / "figure1.csv").read_text())


def assert_csv_close(text, golden):
    got = list(csv.reader(io.StringIO(text)))
    want = list(csv.reader(io.StringIO(golden)))
    assert got[0] == want[0] and len(got) == len(want)
    np.testing.assert_allclose(np.array(got[1:], float), np.array(want[1:], float),
                               rtol=1e-12, atol=1e-14)


class TestMcCheck:
    def test_vanilla_agrees(self):
        code, rows = run("mc-check", "vanilla", *MODEL, *JUMPS, "--k1", "100", "--t1", "1",
                         "--paths", "40000")
        assert code == 0 and abs(float(rows[0]["z"])) <= 3

    def test_corrupted_value_detected(self):
        code, _ = run("mc-check", "vanilla", *MODEL, *JUMPS, "--k1", "100", "--t1", "1",
                      "--paths", "40000", "--corrupt-analytic", "1.0")
        assert code == 3

    def test_degenerate_exact_match(self):
        code, rows = run("mc-check", "vanilla", "--r", "0.05", "--sigma", "0", "--hurst", "0.6",
                         "--s0", "100", "--k1", "90", "--t1", "1", "--paths", "10000")
        assert code == 0
        assert float(rows[0]["mc_std_error"]) == 0.0 and float(rows[0]["z"]) == 0.0

    @pytest.mark.parametrize("kind,extra", [
        ("compound", ["--k1", "6", "--t1", "0.5", "--k2", "100", "--t2", "1"]),
        ("extendible", ["--k1", "100", "--t1", "0.5", "--k2", "105", "--t2", "1", "--premium", "2"]),
    ])
    def test_nested_contracts(self, kind, extra):
        code, _ = run("mc-check", kind, *MODEL, *JUMPS, *extra, "--paths", "40000",
                      "--inner", "analytic")
        assert code == 0
        brownian = [a if a != "0.7" else "0.5" for a in MODEL]
        code, _ = run("mc-check", kind, *brownian, *JUMPS, *extra, "--paths", "40000",
                      "--inner", "simulated")
        assert code == 0

    def test_simulated_roll_exposes_covariance_convention(self):
        # with H != 1/2 the true fBm path law differs from the nested window variances
        code, rows = run("mc-check", "extendible", *MODEL, *JUMPS, "--k1", "100", "--t1", "0.5",
                         "--k2", "105", "--t2", "1", "--premium", "2", "--paths", "40000")
        assert code == 3 and float(rows[0]["z"]) > 3

    def test_needs_enough_paths(self, capsys):
        code, _ = run("mc-check", "vanilla", *MODEL, "--k1", "100", "--t1", "1", "--paths", "500")
        assert code == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "jmfbm", "price", "vanilla", *MODEL,
                           "--k1", "100", "--t1", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("kind,")
