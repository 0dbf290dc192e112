import csv
import io
import json
import math

import pytest

from coherent_ecp import protocols
from coherent_ecp.cli import grid, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestRun:
    def test_ecp1(self, capsys):
        code, out, _ = run(capsys, "run", "ecp1", "--alpha", "2", "--beta", "0.7071067811865476", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["p_exact"] == pytest.approx(0.499832, abs=1e-6)
        assert doc["final_fidelity"] == pytest.approx(1.0, abs=1e-10)

    def test_ecp2_theta(self, capsys):
        code, out, _ = run(
            capsys, "run", "ecp2", "--alpha", "2",
            "--theta1", "0.7853981634", "--theta2", "0.7853981634", "--theta3", "0.5235987756",
        )
        assert code == 0
        line = next(l for l in out.splitlines() if l.startswith("final_fidelity"))
        assert float(line.split("=")[1]) == pytest.approx(1.0, abs=1e-10)

    def test_ecp2_coefficients(self, capsys):
        code, out, _ = run(capsys, "run", "ecp2", "--alpha", "1", "--beta", "0.5", "--gamma", "0.5",
                           "--delta", "0.5", "--eta", "0.5", "--json")
        assert code == 0
        assert json.loads(out)["protocol"] == "ecp2"

    def test_degenerate(self, capsys):
        code, _, err = run(capsys, "run", "ecp1", "--alpha", "2", "--beta", "0")
        assert code == 2
        assert "degenerate" in err

    def test_missing_flag(self, capsys):
        assert run(capsys, "run", "ecp1", "--alpha", "2")[0] == 64
        assert run(capsys, "run", "ecp2", "--alpha", "2", "--theta1", "1")[0] == 64

    @pytest.mark.parametrize("argv", [["run"], ["run", "ecp3", "--alpha", "1"], ["sweep-ecp1", "--steps", "1"],
                                      ["bogus"], ["sweep-ecp1", "--alpha", "x"], []])
    def test_usage_errors(self, capsys, argv):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 64


class TestSweepEcp1:
    def test_defaults(self, capsys, tmp_path):
        path = tmp_path / "ecp1.csv"
        code, _, _ = run(capsys, "sweep-ecp1", "--out", str(path))
        assert code == 0
        table = rows(path.read_text())
        assert len(table) == 603
        peak = {a: max(float(r["p_exact"]) for r in table if float(r["alpha"]) == a) for a in (0.5, 1.0, 2.0)}
        assert peak[0.5] < peak[1.0] < peak[2.0]
        for r in table:
            if float(r["beta"]) in (0.0, 1.0):
                assert float(r["p_exact"]) == 0
                assert float(r["p_formula"]) == 0
        mid = next(r for r in table if float(r["alpha"]) == 2 and abs(float(r["beta"]) - 0.705) < 1e-12)
        assert float(mid["p_exact"]) == pytest.approx(0.499832, abs=2e-4)
        meta = json.loads((tmp_path / "ecp1.csv.meta.json").read_text())
        assert meta["rows"] == 603
        assert "sqrt(1 - beta^2)" in meta["gamma_convention"]

    def test_stdout_and_determinism(self, capsys):
        a = run(capsys, "sweep-ecp1", "--alpha", "1", "--steps", "11")[1]
        b = run(capsys, "sweep-ecp1", "--alpha", "1", "--steps", "11")[1]
        assert a == b
        assert a.splitlines()[0] == "alpha,beta,gamma,p_formula,p_exact"
        assert len(a.splitlines()) == 12

    def test_row_near_balanced(self, capsys):
        # an odd grid puts beta = 1/sqrt2 close to a node
        p = protocols.p_exact_ecp1(protocols.Ecp1Params.from_beta(2.0, 1 / math.sqrt(2)))
        assert p == pytest.approx(0.499832, abs=1e-6)

    def test_explicit_gamma(self, capsys):
        code, out, _ = run(capsys, "sweep-ecp1", "--alpha", "1", "--steps", "3", "--gamma", "0.5")
        assert code == 0
        assert {r["gamma"] for r in rows(out)} == {"0.5"}

    def test_unwritable(self, capsys, tmp_path):
        code, _, err = run(capsys, "sweep-ecp1", "--steps", "3", "--out", str(tmp_path / "no" / "x.csv"))
        assert code == 74
        assert "cannot write" in err


class TestSweepEcp2:
    def test_small_grid(self, capsys):
        code, out, _ = run(capsys, "sweep-ecp2", "--steps", "11")
        assert code == 0
        table = rows(out)
        assert len(table) == 121
        for r in table:
            t1, t2, p = float(r["theta1"]), float(r["theta2"]), float(r["p_exact"])
            if t1 == 0 or t2 == 0:
                assert p == 0
            elif t1 < math.pi / 2 and t2 < math.pi / 2:
                assert p > 0
                assert p == pytest.approx(float(r["p_formula"]), rel=1e-9)

    def test_grid_endpoints(self):
        g = grid(0.0, math.pi / 2, 101)
        assert g[0] == 0.0 and g[-1] == math.pi / 2 and len(g) == 101
        assert g[50] == pytest.approx(math.pi / 4, abs=1e-15)


class TestValidate:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "validate", "--seed", "42")
        assert code == 0
        assert out.count("PASS") == 12

    def test_seed_reproducible(self, capsys):
        assert run(capsys, "validate", "--seed", "42")[1] == run(capsys, "validate", "--seed", "42")[1]

    def test_n3_mutation(self, capsys, monkeypatch):
        original = protocols.n3

        def flipped(q):
            b, g, d, e = q.coefficients
            x4 = math.exp(-4 * q.alpha**2)
            return (original(q) ** -2 - 4 * (b * g + b * d - g * e - d * e) * x4) ** -0.5

        monkeypatch.setattr(protocols, "n3", flipped)
        code, out, _ = run(capsys, "validate", "--seed", "42")
        assert code == 1
        failing = out.splitlines()[-1]
        assert failing.startswith("failed checks:")
        assert "N3" in failing
        assert "N4" not in failing


class TestExec:
    def test_bundled(self, capsys):
        from importlib import resources

        path = resources.files("coherent_ecp").joinpath("programs", "ecp1.circ")
        code, out, _ = run(capsys, "exec", str(path))
        assert code == 0
        report = out.splitlines()[-1]
        fid = float(report.split("fidelity=")[1].split()[0])
        assert fid == pytest.approx(1.0, abs=1e-10)

    def test_missing(self, capsys, tmp_path):
        assert run(capsys, "exec", str(tmp_path / "nope.circ"))[0] == 66

    def test_parse_error(self, capsys, tmp_path):
        path = tmp_path / "broken.circ"
        path.write_text("alpha 1\nmodes a\nbs a q -> x y\n")
        code, _, err = run(capsys, "exec", str(path))
        assert code == 65
        assert "broken.circ:3:4:" in err

    def test_assertion_failure(self, capsys, tmp_path):
        from importlib import resources

        src = resources.files("coherent_ecp").joinpath("programs", "ecp1.circ").read_text()
        path = tmp_path / "strict.circ"
        path.write_text(src.replace("report ecp1", "assert_prob_ge 0.6\nreport ecp1"))
        code, out, _ = run(capsys, "exec", str(path))
        assert code == 3
        assert "FAILED at line" in out

    def test_degenerate_runtime(self, capsys, tmp_path):
        path = tmp_path / "empty.circ"
        path.write_text("alpha 1\nmodes a b\nterm 1 0 : 1 1\nselectvac a\nnormalize\n")
        assert run(capsys, "exec", str(path))[0] == 2
