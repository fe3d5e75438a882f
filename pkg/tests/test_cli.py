import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xishift.cli import UsageError, cmd_verify, main, thread_cap
from xishift.errors import NotPSDError, ProblemFormatError
from xishift.problem import ProblemFile, parse_problem, serialize_problem

SCALAR_FLOW = {"kind": "flow", "S": [[-1]], "B": [[1]]}
GAP_PAIR = {"kind": "pair", "H0": [[0, 0], [0, 2]], "V": [[-1, 0], [0, 0]]}


def write(tmp_path, doc, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


class TestParse:
    def test_minimal_pair(self):
        p = parse_problem('{"kind": "pair", "H0": [[0]], "V": [[1]]}')
        assert p.kind == "pair" and p.n == 1
        assert p["V"][0, 0] == 1

    def test_complex_entries(self):
        p = parse_problem({"kind": "pair", "H0": [[1, [0, 1]], [[0, -1], 2]], "V": [[0, 0], [0, 0]]})
        assert p["H0"][0, 1] == 1j and p["H0"][1, 0] == -1j

    def test_non_psd_b_names_eigenvalue(self):
        text = json.dumps({"kind": "flow", "S": [[1, 0], [0, 1]], "B": [[1, 0], [0, -0.5]]}, indent=1)
        with pytest.raises(NotPSDError, match="-0.5") as exc:
            parse_problem(text)
        assert exc.value.eigenvalue == pytest.approx(-0.5)
        assert "line" in str(exc.value)

    @pytest.mark.parametrize(
        "doc, fragment",
        [
            ({"kind": "pair", "H0": [[0, 1]], "V": [[1]]}, "not square"),
            ({"kind": "pair", "H0": [[0, 0], [0, 1]], "V": [[1]]}, "dimension mismatch"),
            ({"kind": "pair", "H0": [[0, 1], [0, 0]], "V": [[1, 0], [0, 1]]}, "not Hermitian"),
            ({"kind": "pair", "H0": [[0]]}, "missing"),
            ({"kind": "wave", "H0": [[0]], "V": [[0]]}, "kind"),
            ({"kind": "pair", "H0": [[0]], "V": [[0]], "color": 1}, "unknown"),
            ({"kind": "pair", "H0": [["x"]], "V": [[0]]}, "row 0, column 0"),
            ({"kind": "pair", "H0": [[0]], "V": [[0]], "grid": {"min": 1}}, "grid"),
            ({"kind": "pair", "H0": [[0]], "V": [[0]], "eps": [-1]}, "eps"),
            ({"kind": "flow", "S": [[1]], "V": [[0]]}, "not allowed"),
        ],
    )
    def test_format_errors_carry_field(self, doc, fragment):
        with pytest.raises(ProblemFormatError, match=fragment):
            parse_problem(json.dumps(doc, indent=1))

    def test_field_error_reports_line(self):
        text = '{\n "kind": "pair",\n "H0": [[0, 1]],\n "V": [[1]]\n}'
        with pytest.raises(ProblemFormatError, match=r"field 'H0' \(line 3\)"):
            parse_problem(text)

    def test_malformed_json(self):
        with pytest.raises(ProblemFormatError, match="line 2"):
            parse_problem('{"kind": "pair",\n "H0": [[0]],, }')

    def test_round_trip_file(self, tmp_path):
        doc = dict(GAP_PAIR, eps=[0.1, 0.01], grid={"min": -2, "max": 3, "count": 5}, seed=4,
                   tolerances={"tol_eig": 1e-11})
        p = parse_problem(write(tmp_path, doc))
        q = parse_problem(serialize_problem(p))
        assert p == q
        assert serialize_problem(q) == serialize_problem(p)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.sampled_from(["flow", "pair"]))
    def test_round_trip_random(self, seed, n, kind):
        from xishift.cli import _random_problem

        p = _random_problem(kind, n, seed)
        assert parse_problem(serialize_problem(p)) == p


class TestVerify:
    def test_scalar_flow(self):
        rep = cmd_verify(parse_problem(SCALAR_FLOW), ["ttr8", "bk"])
        assert len(rep.entries) == 2
        assert rep.ok
        assert all(c.residual < 1e-12 for c in rep.entries)
        assert all(c.anchor for c in rep.entries)

    def test_gap_pair(self):
        rep = cmd_verify(parse_problem(GAP_PAIR), ["gap"], grid=(-0.5, -0.5, 1))
        (entry,) = rep.entries
        assert entry.passed and entry.value == -1

    def test_empty_suites(self):
        rep = cmd_verify(parse_problem(GAP_PAIR), [])
        assert rep.entries == [] and rep.ok

    def test_incompatible_suite(self):
        with pytest.raises(UsageError, match="ttr8"):
            cmd_verify(parse_problem(GAP_PAIR), ["ttr8"])

    def test_all_flow_suites_on_random_instance(self):
        from xishift.cli import FLOW_SUITES, _random_problem

        rep = cmd_verify(_random_problem("flow", 5, 3), FLOW_SUITES)
        assert rep.ok, [c for c in rep.entries if not c.passed]
        assert {c.suite for c in rep.entries} == set(FLOW_SUITES)

    def test_all_pair_suites_on_random_instance(self):
        from xishift.cli import PAIR_SUITES, _random_problem

        rep = cmd_verify(_random_problem("pair", 4, 3), PAIR_SUITES, grid=(-2, 2, 7))
        assert rep.ok, [c for c in rep.entries if not c.passed]

    def test_singular_s_runs_arctan_trend(self):
        p = parse_problem({"kind": "flow", "S": [[0, 0], [0, 1]], "B": [[1, 0], [0, 1]]})
        rep = cmd_verify(p, ["arctan"])
        assert len(rep.entries) == 4 and rep.ok

    def test_failures_are_entries(self):
        # singular S + A breaks the trindex identity's hypothesis
        p = parse_problem({"kind": "flow", "S": [[1, 0], [0, -1]], "A": [[-1, 0], [0, 0]], "B": [[1, 0], [0, 1]]})
        rep = cmd_verify(p, ["ttr8"])
        (entry,) = rep.entries
        assert not entry.passed and "HypothesisViolation" in entry.name

    def test_tol_override(self):
        rep = cmd_verify(parse_problem(SCALAR_FLOW), ["ttr8"], tol=-1.0)
        assert not rep.ok


class TestMain:
    def test_verify_exit_zero(self, tmp_path, capsys):
        assert main(["verify", "--in", write(tmp_path, SCALAR_FLOW), "--suites", "ttr8,bk"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["summary"] == {"total": 2, "passed": 2, "failed": 0}
        assert "timing" not in doc["entries"][0]

    def test_verify_exit_one_and_report_written(self, tmp_path):
        out = tmp_path / "r.json"
        code = main(["verify", "--in", write(tmp_path, SCALAR_FLOW), "--suites", "ttr8", "--tol", "-1", "--out", str(out)])
        assert code == 1
        assert json.loads(out.read_text())["summary"]["failed"] == 1

    def test_bad_input_exit_two(self, tmp_path, capsys):
        bad = {"kind": "flow", "S": [[1, 0], [0, 1]], "B": [[1, 0], [0, -0.5]]}
        assert main(["verify", "--in", write(tmp_path, bad)]) == 2
        assert "-0.5" in capsys.readouterr().err

    def test_wrong_kind_for_command(self, tmp_path):
        assert main(["flow", "--in", write(tmp_path, GAP_PAIR)]) == 2

    def test_timing_flag(self, tmp_path, capsys):
        main(["verify", "--in", write(tmp_path, SCALAR_FLOW), "--suites", "ttr8", "--timing"])
        assert "timing" in json.loads(capsys.readouterr().out)["entries"][0]

    def test_ssf_gap_grid_is_integer(self, tmp_path, capsys):
        assert main(["ssf", "--in", write(tmp_path, GAP_PAIR), "--grid", "-0.9,-0.1,5", "--eps", "0", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "lambda,xi_exact,target[eps=0.0],trindex[eps=0.0],averaged[eps=0.0],residual[eps=0.0]"
        assert len(lines) == 6
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[1:4] == ["-1", "-1", "-1"]
            assert cells[4] == "-1"

    def test_ssf_zero_v(self, tmp_path, capsys):
        doc = {"kind": "pair", "H0": [[0, 0], [0, 2]], "V": [[0, 0], [0, 0]]}
        assert main(["ssf", "--in", write(tmp_path, doc), "--grid", "-2,3,6"]) == 0
        rows = json.loads(capsys.readouterr().out)["rows"]
        for row in rows:
            assert row[1] == 0
            assert all(abs(v) < 1e-12 for v in row[2:])

    def test_ssf_deterministic(self, tmp_path, monkeypatch):
        a, b, c = (tmp_path / f"{x}.csv" for x in "abc")
        args = ["ssf", "--random", "5", "--seed", "7", "--format", "csv", "--grid", "-2,2,9"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        monkeypatch.setenv("XISHIFT_THREADS", "1")
        assert main(args + ["--out", str(c)]) == 0
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_verify_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            main(["verify", "--random", "4", "--seed", "2", "--kind", "pair", "--grid", "-2,2,5", "--out", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_flow_csv(self, tmp_path, capsys):
        doc = {"kind": "flow", "S": [[1, 0], [0, -1]], "B": [[1, 0], [0, 1]]}
        assert main(["flow", "--in", write(tmp_path, doc)]) == 0
        assert capsys.readouterr().out == "t_lo,t_hi,n,multiplicity_at_t_hi\n-inf,-1,1,1\n-1,1,0,1\n1,inf,-1,\n"

    def test_bk_json(self, tmp_path, capsys):
        doc = {"kind": "flow", "S": [[1]], "B": [[1]]}
        assert main(["bk", "--in", write(tmp_path, doc)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["det"] == pytest.approx([0, -1], abs=1e-12)
        assert out["trindex"] == pytest.approx(0.25)

    def test_negative_grid_values_parse(self, capsys):
        assert main(["ssf", "--random", "3", "--grid", "-2,-1,2", "--eps", "0.1"]) == 0
        assert len(json.loads(capsys.readouterr().out)["rows"]) == 2

    def test_missing_source_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["verify"])
        assert exc.value.code == 2

    def test_kind_with_input_rejected(self, tmp_path):
        assert main(["verify", "--in", write(tmp_path, GAP_PAIR), "--kind", "pair"]) == 2


class TestThreads:
    def test_absent(self, monkeypatch):
        monkeypatch.delenv("XISHIFT_THREADS", raising=False)
        assert thread_cap() is None

    def test_value(self, monkeypatch):
        monkeypatch.setenv("XISHIFT_THREADS", "3")
        assert thread_cap() == 3

    @pytest.mark.parametrize("raw", ["0", "many", "-2"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("XISHIFT_THREADS", raw)
        with pytest.raises(UsageError):
            thread_cap()

    def test_invalid_env_exit_two(self, monkeypatch, tmp_path):
        monkeypatch.setenv("XISHIFT_THREADS", "zero")
        assert main(["verify", "--in", write(tmp_path, SCALAR_FLOW)]) == 2


def test_module_entry_point(tmp_path):
    path = write(tmp_path, SCALAR_FLOW)
    proc = subprocess.run([sys.executable, "-m", "xishift", "verify", "--in", path, "--suites", "ttr8"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["summary"]["passed"] == 1


def test_problem_equality_compares_arrays():
    a = ProblemFile("pair", {"H0": np.eye(2), "V": np.zeros((2, 2))})
    b = ProblemFile("pair", {"H0": np.eye(2), "V": np.zeros((2, 2))})
    c = ProblemFile("pair", {"H0": np.eye(2), "V": np.eye(2)})
    assert a == b and a != c
