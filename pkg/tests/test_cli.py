import csv
import json
import subprocess
import sys

import pytest

from weylsos import fock, polyparse
from weylsos.cli import main, parse_grid, parse_log_grid, parse_orders


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestNormalForm:
    def test_swap(self, capsys):
        assert run(capsys, "normal-form", "--poly", "a*ad")[:2] == (0, "1 + ad*a\n")

    def test_fixed_point(self, capsys):
        assert run(capsys, "normal-form", "--poly", "ad*a")[1] == "ad*a\n"

    def test_position_squared(self, capsys):
        code, out, _ = run(capsys, "normal-form", "--poly", "x^2")
        assert code == 0
        assert polyparse.parse_poly(out) == polyparse.parse_poly("0.5 + ad*a + 0.5*a^2 + 0.5*ad^2")

    def test_parse_error_position(self, capsys):
        code, _, err = run(capsys, "normal-form", "--poly", "ad*a + $")
        assert code == 2 and "position 7" in err


class TestLowerBound:
    def test_harmonic_json(self, capsys):
        code, out, _ = run(capsys, "lower-bound", "--poly", "ad*a + 0.5", "--order", "1", "--json")
        rec = json.loads(out)
        assert code == 0 and rec["status"] == "optimal"
        assert abs(rec["bound"] - 0.5) < 1e-7
        assert set(rec) >= {"order", "bound", "gap", "status", "lambdaStar", "wall_time"}

    def test_schmudgen_text(self, capsys):
        code, out, _ = run(capsys, "lower-bound", "--poly", "(ad*a - 1)*(ad*a - 2)", "-k", "2")
        bound = float(out.split()[1])
        assert code == 0 and bound <= -0.2499

    def test_double_well_below_variational(self, capsys):
        _, out, _ = run(capsys, "lower-bound", "--m", "-1", "-k", "2", "--json")
        v = fock.variational_upper_bound(polyparse.builtin_quartic(-1), 40)
        assert json.loads(out)["bound"] < v

    def test_order_too_small(self, capsys):
        assert run(capsys, "lower-bound", "--m", "1", "-k", "1")[0] == 2

    def test_dump_and_config(self, capsys, tmp_path):
        cfgfile = tmp_path / "solver.ini"
        cfgfile.write_text("[solver]\ntol = 1e-9\nmax_iter = 100\n")
        dump = tmp_path / "h.sdp"
        code, out, _ = run(capsys, "lower-bound", "--poly", "ad*a + 0.5", "-k", "1", "--config", str(cfgfile), "--dump-sdp", str(dump), "--json")
        assert code == 0 and dump.read_text().startswith("weylsos-sdp 1\n")

    def test_bad_config_key(self, capsys, tmp_path):
        cfgfile = tmp_path / "solver.ini"
        cfgfile.write_text("[solver]\nbogus = 1\n")
        assert run(capsys, "lower-bound", "--m", "1", "-k", "2", "--config", str(cfgfile))[0] == 2


class TestSweep:
    def test_single_point(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        code, _, _ = run(capsys, "sweep", "--m-grid", "1", "--orders", "2", "--cutoff", "20", "--out", str(out))
        rows = list(csv.reader(out.open()))
        assert code == 0 and rows[0] == ["m", "variational", "lambda2"] and len(rows) == 2

    def test_soundness_and_format(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        run(capsys, "sweep", "--m-grid", "0", "--orders", "2", "--out", str(out))
        raw = out.read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        m, var, lam2 = raw.decode().splitlines()[1].split(",")
        assert float(lam2) <= float(var) + 1e-6
        assert var == f"{float(var):.12g}"

    def test_idempotent(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--m-grid=-1:1:1", "--orders", "2,3", "--cutoff", "20"]
        run(capsys, *args, "--out", str(a))
        run(capsys, *args, "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_parallel_matches_serial(self, capsys, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--m-grid=-1,0,1", "--orders", "2", "--cutoff", "20"]
        run(capsys, *args, "--out", str(a))
        monkeypatch.setenv("WEYLSOS_THREADS", "3")
        run(capsys, *args, "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, err = run(capsys, "sweep", "--m-grid", "1", "--orders", "2", "--out", str(tmp_path / "no" / "x.csv"))
        assert code == 2 and "cannot write" in err

    def test_order_validated_up_front(self, capsys, tmp_path):
        assert run(capsys, "sweep", "--m-grid", "1", "--orders", "1,2", "--out", str(tmp_path / "x.csv"))[0] == 2


class TestLambdaStarSweep:
    def test_single_point(self, capsys, tmp_path):
        out = tmp_path / "l.csv"
        code, _, _ = run(capsys, "lambdastar-sweep", "--m", "1", "--orders", "3,4", "--grid", "100", "--out", str(out))
        rows = list(csv.reader(out.open()))
        assert code == 0 and rows[0] == ["lambdaStar", "d3", "d4"] and len(rows) == 2
        assert all(float(x) >= -1e-6 for x in rows[1][1:])

    def test_infeasible_cells_carry_status(self, capsys, tmp_path):
        out = tmp_path / "l.csv"
        run(capsys, "lambdastar-sweep", "--m", "-1", "--orders", "5", "--grid", "100", "--out", str(out))
        assert list(csv.reader(out.open()))[1][1] == "dual_infeasible"


class TestPerturb:
    def test_sos_input(self, capsys):
        code, out, _ = run(capsys, "perturb", "--poly", "ad*a", "--r", "1", "--json")
        assert code == 0 and json.loads(out)[0]["epsilon"] < 1e-7

    def test_schmudgen_column(self, capsys):
        code, out, _ = run(capsys, "perturb", "--poly", "(ad*a - 1)*(ad*a - 2)", "--r", "1..3", "--c", "3")
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        eps = [float(r[2]) for r in rows]
        assert code == 0 and len(eps) == 3
        assert eps[0] >= eps[1] - 1e-7 and eps[1] >= eps[2] - 1e-7
        for r in rows:
            assert float(r[3]) <= float(r[4]) + 1e-12


class TestSelftest:
    def test_clean(self, capsys):
        code, out, _ = run(capsys, "selftest")
        assert code == 0 and "FAIL" not in out

    def test_injected_fault_is_named(self, capsys):
        code, out, _ = run(capsys, "selftest", "--inject-fault", "commute_identity")
        assert code == 4
        failing = [line.split()[1] for line in out.splitlines() if line.startswith("FAIL")]
        assert failing == ["commute_identity"]


def test_grid_parsers():
    assert [float(x) for x in parse_grid("-4:1:0.25")][:3] == [-4, -3.75, -3.5]
    assert len(parse_grid("-4:1:0.25")) == 21
    assert parse_log_grid("1e2:1e4", 1) == pytest.approx([1e2, 1e3, 1e4])
    assert parse_orders("2..6") == [2, 3, 4, 5, 6]


def test_usage_error_exit_code(capsys):
    assert run(capsys, "lower-bound")[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "weylsos", "normal-form", "--poly", "a a ad"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "2*a + ad*a^2\n"
