import csv
import io
import json
import re
import subprocess
import sys
from fractions import Fraction
from math import comb

import pytest

from persistence import analytics
from persistence.cli import ADVERSARIAL_FIELDS, DENSE_FIELDS, EXACT_FIELDS, SIMULATE_FIELDS, main


def write(path, *lines):
    path.write_text("".join(f"{x}\n" for x in lines))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def records(text):
    return [json.loads(line) for line in text.splitlines()]


@pytest.fixture
def files(tmp_path):
    return {
        "stream": write(tmp_path / "stream.txt", 1, 3, 2),
        "coin": write(tmp_path / "coin.txt", 0, 1),
        "half": write(tmp_path / "half.txt", "1/2", "1/2"),
        "perm": write(tmp_path / "perm.txt", 1, 2, 3),
        "big": write(tmp_path / "big.txt", *range(1, 11)),
    }


class TestSimulate:
    def test_stream_threshold(self, capsys, files):
        code, out, _ = run(capsys, "simulate", "--model", "stream", "--values", files["stream"],
                           "--policy", "threshold", "--threshold", 3)
        assert code == 0
        (rec,) = records(out)
        assert list(rec) == SIMULATE_FIELDS
        assert rec["mean_total"] == "7/1"
        assert rec["horizon"] == "n+1" and rec["steps"] == 4

    def test_stream_naive_sums(self, capsys, files):
        _, out, _ = run(capsys, "simulate", "--model", "stream", "--values", files["stream"], "--policy", "naive")
        assert records(out)[0]["mean_total"] == "6/1"

    def test_iid_rank_one(self, capsys, files):
        code, out, _ = run(capsys, "simulate", "--model", "iid", "--values", files["coin"], "--probs", files["half"],
                           "--n", 10**4, "--policy", "rank", "--rank", 1, "--trials", 100, "--seed", 7)
        assert code == 0
        rec = records(out)[0]
        assert rec["forecast_relative"] == "2/3"
        assert rec["horizon"] == "n"
        assert abs(float(Fraction(rec["mean_relative"])) - 2 / 3) < 3 * rec["stderr_relative"] + 1e-3

    def test_byte_identical(self, capsys, files, tmp_path):
        argv = ["simulate", "--model", "perm", "--values", files["big"], "--policy", "median",
                "--trials", 20, "--seed", 5, "--format", "csv"]
        outs = []
        for i in range(2):
            target = tmp_path / f"out{i}.csv"
            assert run(capsys, *argv, "--out", target)[0] == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]
        rows = list(csv.DictReader(io.StringIO(outs[0].decode())))
        assert list(rows[0]) == SIMULATE_FIELDS

    def test_missing_seed(self, capsys, files):
        code, _, err = run(capsys, "simulate", "--model", "perm", "--values", files["perm"], "--policy", "naive",
                           "--trials", 5)
        assert code == 1 and "--seed" in err


class TestExact:
    def test_perm_threshold(self, capsys, files):
        code, out, _ = run(capsys, "exact", "--model", "perm", "--values", files["perm"],
                           "--policy", "threshold", "--threshold", 3)
        rec = records(out)[0]
        assert code == 0 and list(rec) == EXACT_FIELDS
        assert rec["expected_total"] == "8/1" and rec["forecast_total"] == "8/1"
        assert rec["outcomes"] == 6

    def test_perm_offline(self, capsys, files):
        _, out, _ = run(capsys, "exact", "--model", "perm", "--values", files["perm"], "--policy", "offline")
        assert records(out)[0]["expected_total"] == "28/3"

    def test_iid_offline(self, capsys, files):
        _, out, _ = run(capsys, "exact", "--model", "iid", "--values", files["coin"], "--probs", files["half"],
                        "--n", 2, "--policy", "offline")
        assert records(out)[0]["expected_total"] == "5/4"

    def test_guard_exit_code(self, capsys, files):
        code, _, err = run(capsys, "exact", "--model", "perm", "--values", files["big"], "--policy", "naive")
        assert code == 2 and "n <= 9" in err


class TestFormula:
    def test_iid(self, capsys, files):
        _, out, _ = run(capsys, "formula", "--model", "iid", "--values", files["coin"], "--probs", files["half"],
                        "--n", 2, "--policy", "rank", "--rank", 1)
        rec = records(out)[0]
        assert rec["alg_relative_asymptotic"] == "2/3"
        assert rec["alg_total_exact"] == "5/4"
        assert rec["horizon"] == "n"

    def test_perm(self, capsys, files):
        _, out, _ = run(capsys, "formula", "--model", "perm", "--values", files["perm"], "--policy", "rank", "--rank", 1)
        rec = records(out)[0]
        assert rec["alg_total_exact"] == "8/1" and rec["horizon"] == "n+1"

    def test_offline_is_usage_error(self, capsys, files):
        assert run(capsys, "formula", "--model", "perm", "--values", files["perm"], "--policy", "offline")[0] == 1


class TestSweep:
    def test_dense_grid(self, capsys):
        code, out, _ = run(capsys, "sweep", "--family", "dense", "--c-grid", "0.05:0.5:0.05", "--sizes", 1000)
        rows = records(out)
        assert code == 0 and len(rows) == 10
        assert all(list(r) == DENSE_FIELDS for r in rows)
        assert rows[-1]["rho"] == "2/3"
        rhos = [Fraction(r["rho"]) for r in rows]
        assert all(a > b for a, b in zip(rhos, rhos[1:]))

    def test_infeasible_row_is_flagged(self, capsys):
        code, out, _ = run(capsys, "sweep", "--c-grid", "0.05,0.5", "--sizes", 10)
        rows = records(out)
        assert code == 0
        assert rows[0]["feasible"] is False and rows[0]["error"]
        assert rows[1]["feasible"] is True

    def test_c_outside_range(self, capsys):
        assert run(capsys, "sweep", "--c-grid", "0.6")[0] == 1

    def test_adversarial(self, capsys):
        _, out, _ = run(capsys, "sweep", "--family", "adversarial", "--sizes", 1000, "--n", 10**4, "--format", "csv")
        (row,) = list(csv.DictReader(io.StringIO(out)))
        assert list(row) == ADVERSARIAL_FIELDS
        ratio = Fraction(row["naive_over_opt"]) / Fraction(row["naive_predicted"])
        assert abs(ratio - 1) < Fraction(1, 100)


class TestUsage:
    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1

    def test_missing_values(self, capsys):
        assert run(capsys, "simulate", "--model", "perm", "--policy", "naive")[0] == 1

    def test_unreadable_file(self, capsys, tmp_path):
        assert run(capsys, "exact", "--model", "perm", "--values", tmp_path / "nope", "--policy", "naive")[0] == 1

    def test_bad_probs(self, capsys, files, tmp_path):
        bad = write(tmp_path / "bad.txt", "1/2", "1/3")
        code, _, err = run(capsys, "exact", "--model", "iid", "--values", files["coin"], "--probs", bad,
                           "--n", 2, "--policy", "naive")
        assert code == 1 and "prob" in err


class TestVerify:
    def test_all_pass(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0
        assert out.count("PASS") == len(out.splitlines()) > 5

    def test_json_records(self, capsys):
        _, out, _ = run(capsys, "verify", "--format", "json")
        recs = records(out)
        assert {"check", "claim", "passed", "detail"} == set(recs[0])
        assert all(r["passed"] for r in recs)

    def test_corrupted_binomial_term_is_caught(self, capsys, monkeypatch):
        def corrupted(t, n, k):
            # the s = 1 term uses C(n-1, k-2) instead of C(n-2, k-2)
            terms = [
                (-1) ** s * comb(n - 1 - (0 if s == 1 else s), k - 1 - s)
                for s in range(min(t, k))
            ]
            return Fraction(sum(terms), comb(n - 1, k - 1))

        monkeypatch.setattr(analytics, "f_tnk", corrupted)
        code, out, _ = run(capsys, "verify", "--format", "json")
        assert code == 3
        failed = {r["check"]: r["detail"] for r in records(out) if not r["passed"]}
        assert "sum_f_identity_a" in failed
        n, k = map(int, re.match(r"n=(\d+), k=(\d+)", failed["sum_f_identity_a"]).groups())
        assert n <= 10 and k <= 5


def test_module_entry_point(tmp_path):
    values = write(tmp_path / "s.txt", 1, 3, 2)
    proc = subprocess.run(
        [sys.executable, "-m", "persistence", "simulate", "--model", "stream", "--values", values,
         "--policy", "threshold", "--threshold", "3"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["mean_total"] == "7/1"
