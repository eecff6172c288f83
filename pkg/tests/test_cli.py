import json

import pytest

from zhangpile.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSimulate:
    def test_writes_histograms_and_summary(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--sites", "4", "--a", "0.5", "--b", "1.0",
            "--steps", "5000", "--seed", "7", "--out", str(tmp_path),
        )
        assert code == EXIT_OK
        assert "central-site mean" in out
        hists = sorted(tmp_path.glob("hist_*.csv"))
        assert len(hists) == 4
        lines = hists[0].read_text().splitlines()
        assert lines[0] == "bin_left,mass"
        assert lines[-1].startswith("ZERO_ATOM,")
        assert len(lines) == 1 + 200 + 1
        summary = list(tmp_path.glob("summary_*.csv"))
        assert len(summary) == 1
        assert "seed7" in summary[0].name and "N4" in summary[0].name

    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ("simulate", "--sites", "3", "--a", "0", "--b", "1",
                "--steps", "3000", "--seed", "11", "--format", "json")
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert run(capsys, *args, "--out", str(d1))[0] == EXIT_OK
        assert run(capsys, *args, "--out", str(d2))[0] == EXIT_OK
        for f1 in sorted(d1.iterdir()):
            f2 = d2 / f1.name
            assert f1.read_bytes() == f2.read_bytes()

    def test_json_format(self, tmp_path, capsys):
        code, _, _ = run(
            capsys,
            "simulate", "--sites", "2", "--steps", "2000", "--seed", "1",
            "--out", str(tmp_path), "--format", "json",
            "--tracked-sites", "0",
        )
        assert code == EXIT_OK
        (hist,) = sorted(tmp_path.glob("hist_*.json"))
        data = json.loads(hist.read_text())
        assert set(data) == {"bin_left", "mass", "zero_atom"}
        assert len(data["mass"]) == 200

    def test_missing_seed_is_drawn_and_printed(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "simulate", "--sites", "2", "--steps", "500", "--out", str(tmp_path)
        )
        assert code == EXIT_OK
        assert out.startswith("seed: ")

    def test_bad_flags_are_usage_errors(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "simulate", "--sites", "2", "--a", "0.9", "--b", "0.5",
            "--steps", "100", "--seed", "1", "--out", str(tmp_path),
        )
        assert code == EXIT_USAGE
        assert "error" in err

    def test_unknown_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--bogus", "1"])
        assert exc.value.code == EXIT_USAGE


class TestExactOnesite:
    def test_table_shows_density_jump(self, tmp_path, capsys):
        out_file = tmp_path / "f.csv"
        code, out, _ = run(capsys, "exact-onesite", "--b", "0.5", "--out", str(out_file))
        assert code == EXIT_OK
        lines = out_file.read_text().splitlines()
        assert lines[0] == "h,F,f"
        assert len(lines) == 1 + 201
        rows = [line.split(",") for line in lines[1:]]
        h = [float(r[0]) for r in rows]
        f = [float(r[2]) for r in rows]
        i = h.index(0.5)
        # density drops discontinuously across h = b
        assert f[i - 1] > f[i + 1]
        assert (f[i - 1] - f[i]) > 0.2
        F = [float(r[1]) for r in rows]
        assert F[-1] == pytest.approx(1.0, abs=1e-9)
        assert all(b >= a - 1e-12 for a, b in zip(F[:-1], F[1:]))


class TestCouple:
    def test_reduction_match_writes_tables(self, tmp_path, capsys):
        out_file = tmp_path / "c.csv"
        code, out, _ = run(
            capsys, "couple", "--mode", "reduction-match", "--sites", "5",
            "--a", "0.5", "--b", "1.0", "--seed", "2", "--attempts", "5",
            "--out", str(out_file),
        )
        assert code == EXIT_OK
        assert "5/5 met" in out
        lines = out_file.read_text().splitlines()
        assert lines[0] == "attempt,met,meeting_time"
        assert len(lines) == 6
        decay = tmp_path / "c_decay.csv"
        assert decay.exists()
        assert decay.read_text().splitlines()[0] == "post_step,sup_difference"

    def test_exact_mode_on_periodic_interval_downgrades(self, capsys):
        code, out, _ = run(
            capsys, "couple", "--mode", "exact", "--a", "0.6", "--b", "0.9",
            "--seed", "1", "--attempts", "3",
        )
        assert code == EXIT_OK
        assert "periodic" in out
        assert "shift" in out

    def test_equalize(self, capsys):
        code, out, _ = run(
            capsys, "couple", "--mode", "equalize", "--sites", "2",
            "--a", "0", "--b", "1", "--seed", "3", "--attempts", "3",
        )
        assert code == EXIT_OK
        assert "3/3 met" in out


class TestVerify:
    @pytest.mark.parametrize("suite", ["abelian", "fsc", "asm-match"])
    def test_suites_pass(self, suite, capsys):
        code, out, _ = run(
            capsys, "verify", "--suite", suite, "--sites", "5", "--seed", "1",
            "--trials", "300",
        )
        assert code == EXIT_OK
        assert "ok" in out

    def test_coefficient_suite(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--suite", "coefficients", "--sites", "5",
            "--seed", "1", "--trials", "400",
        )
        assert code == EXIT_OK

    def test_onesite_suite(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--suite", "onesite", "--seed", "1",
            "--trials", "50000",
        )
        assert code == EXIT_OK

    def test_failure_exits_two(self, capsys, monkeypatch):
        import zhangpile._verify as verify_mod

        def broken(n, seed, trials=1):
            rep = verify_mod.VerifyReport("abelian")
            rep.fail("synthetic failure")
            return rep

        monkeypatch.setitem(verify_mod.SUITES, "abelian", broken)
        code, out, _ = run(capsys, "verify", "--suite", "abelian", "--seed", "1")
        assert code == EXIT_VERIFY
        assert "FAILED" in out


class TestSweep:
    def test_summary_rows_per_size(self, tmp_path, capsys):
        out_file = tmp_path / "sweep.csv"
        code, out, _ = run(
            capsys, "sweep", "--sizes", "4,8,12", "--a", "0.5", "--b", "1.0",
            "--steps", "30000", "--seed", "5", "--out", str(out_file),
        )
        assert code == EXIT_OK
        lines = out_file.read_text().splitlines()
        assert len(lines) == 4
        assert lines[1].startswith("4,")
        assert "concentration:" in out
