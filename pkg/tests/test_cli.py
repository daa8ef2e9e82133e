import csv
import io
import json

import pytest

from rissop.channel import SystemConfig
from rissop.cli import SweepSpec, main, run_fig1, run_fig2, run_fig3, run_fig4, run_validate
from rissop.exceptions import DomainError


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSweepSpec:
    @pytest.mark.parametrize("kwargs", [
        {"step": 0.0}, {"start": 5.0, "stop": 5.0}, {"methods": ()}, {"methods": ("bogus",)},
        {"variable": "speed"}, {"seed": -1},
    ])
    def test_invalid(self, kwargs):
        base = {"variable": "gamma0_db", "start": 0.0, "stop": 10.0, "step": 2.0}
        with pytest.raises(DomainError):
            SweepSpec(**{**base, **kwargs})

    def test_values_include_stop(self):
        spec = SweepSpec("gamma0_db", 0.0, 60.0, 2.0)
        assert spec.values()[0] == 0.0 and spec.values()[-1] == 60.0 and len(spec.values()) == 31

    def test_runner_checks_variable(self):
        with pytest.raises(DomainError):
            run_fig3(SweepSpec("gamma0_db", 0.0, 10.0, 1.0))


class TestSweepRunners:
    def test_fig1_orderings(self):
        header, rows = run_fig1(SweepSpec("gamma0_db", 0.0, 60.0, 2.0, methods=("quadrature",)))
        assert header == ["gamma0_db", "n", "policy", "alpha", "method", "sop"]
        table = {(r["gamma0_db"], r["n"], r["policy"]): r["sop"] for r in rows}
        for g in range(0, 61, 2):
            g = float(g)
            assert table[(g, 64, "OPA")] <= table[(g, 64, "EPA")]
            for policy in ("EPA", "OPA"):
                assert table[(g, 16, policy)] >= table[(g, 32, policy)] >= table[(g, 64, policy)]

    def test_fig1_parallel_rows_identical(self):
        spec = SweepSpec("gamma0_db", 0.0, 20.0, 5.0)
        assert run_fig1(spec, n_jobs=1) == run_fig1(spec, n_jobs=4)

    def test_fig2_ordering_and_identity(self):
        spec = SweepSpec("distance_ratio", 1.0, 3.0, 1.0, methods=("quadrature", "closed_form"))
        _, rows = run_fig2(spec, gamma0_db=[0.0, 20.0, 40.0])
        quad = {(r["distance_ratio"], r["gamma0_db"]): r["sop"] for r in rows if r["method"] == "quadrature"}
        for g in (0.0, 20.0, 40.0):
            assert quad[(1.0, g)] < quad[(2.0, g)] < quad[(3.0, g)]
        _, fig1 = run_fig1(SweepSpec("gamma0_db", 20.0, 21.0, 5.0, methods=("quadrature",)),
                           n_values=(64,))
        epa = [r["sop"] for r in fig1 if r["policy"] == "EPA"][0]
        assert quad[(2.0, 20.0)] == epa

    def test_fig2_closed_form_envelope(self):
        # holds for ratios 2 and 3; at ratio 1 the closed form undershoots by ~50 %
        spec = SweepSpec("distance_ratio", 2.0, 3.0, 1.0, methods=("quadrature", "closed_form"))
        _, rows = run_fig2(spec)
        by_key = {}
        for r in rows:
            by_key.setdefault((r["distance_ratio"], r["gamma0_db"]), {})[r["method"]] = r["sop"]
        for vals in by_key.values():
            if vals["quadrature"] < 0.1:
                assert abs(vals["closed_form"] / vals["quadrature"] - 1) < 0.1

    def test_fig3_trends(self):
        _, rows = run_fig3(SweepSpec("n_elements", 10, 200, 10))
        table = {(r["n_elements"], r["gamma0_db"]): r["alpha_star"] for r in rows}
        ns = sorted({k[0] for k in table})
        for g in (10.0, 20.0, 30.0):
            col = [table[(n, g)] for n in ns]
            assert all(b < a for a, b in zip(col, col[1:]))
        for n in ns:
            assert table[(n, 10.0)] > table[(n, 20.0)] > table[(n, 30.0)]

    def test_fig4_trends(self):
        _, rows = run_fig4(SweepSpec("d_re", 5.0, 50.0, 5.0))
        table = {(r["d_re"], r["d_sr"]): r["alpha_star"] for r in rows}
        d_res = sorted({k[0] for k in table})
        for s in (20.0, 30.0, 40.0):
            col = [table[(d, s)] for d in d_res]
            assert all(b > a for a, b in zip(col, col[1:]))
        for d in d_res:
            assert table[(d, 20.0)] < table[(d, 30.0)] < table[(d, 40.0)]


class TestMain:
    def test_fig1_csv(self, capsys):
        code, out, _ = run(["fig1", "--stop", "4"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "gamma0_db,n,policy,alpha,method,sop"
        assert len(lines) == 1 + 3 * 3 * 2 * 2
        sop = lines[1].split(",")[-1]
        assert len(sop.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 10

    def test_outputs_to_files(self, tmp_path, capsys):
        out, manifest = tmp_path / "f.csv", tmp_path / "f.json"
        code, _, _ = run(["fig3", "--stop", "40", "--out", str(out), "--manifest", str(manifest)], capsys)
        assert code == 0
        rows = read_csv(out.read_text())
        info = json.loads(manifest.read_text())
        assert info["rows"] == len(rows) == 4 * 3
        assert info["columns"] == ["n_elements", "gamma0_db", "alpha_star"]

    def test_deterministic_csv(self, capsys):
        argv = ["fig1", "--stop", "4", "--methods", "monte_carlo", "--trials", "2000", "--seed", "5"]
        _, first, _ = run(argv, capsys)
        _, second, _ = run(argv + ["--jobs", "3"], capsys)
        assert first == second

    def test_config_and_overrides(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"n_elements": 32, "gamma0_db": 25.0}))
        code, out, _ = run(["sop", "--config", str(path), "--set", "d_re=20", "--methods",
                            "quadrature"], capsys)
        assert code == 0
        result = json.loads(out)
        assert result["config"]["n_elements"] == 32 and result["config"]["distances"]["RE"] == 20.0
        expected = SystemConfig(n_elements=32, gamma0_db=25.0, distances={"RE": 20.0})
        from rissop.analytic import sop_exact_quadrature
        assert result["sop"]["quadrature"] == sop_exact_quadrature(expected)

    def test_explain(self, capsys):
        code, out, _ = run(["sop", "--explain"], capsys)
        result = json.loads(out)
        assert code == 0 and "breakdown" in result and len(result["breakdown"]["xi"]) == 3

    @pytest.mark.parametrize("argv", [
        ["fig1", "--step", "-1"],
        ["fig1", "--methods", "bogus"],
        ["fig2", "--seed", "-4"],
        ["sop", "--set", "nonsense=1"],
        ["sop", "--set", "alpha=2"],
        ["sop", "--config", "/nonexistent/cfg.json"],
        ["validate", "--trials", "10"],
        ["fig9"],
        [],
    ])
    def test_usage_errors(self, argv, capsys):
        try:
            code = main(argv)
        except SystemExit as exc:  # argparse rejects before main's handlers
            code = exc.code
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_numerical_failure_exit_code(self, capsys, monkeypatch):
        import rissop.cli as cli
        from rissop.exceptions import NumericalError

        def boom(*args, **kwargs):
            raise NumericalError("did not converge", {"abserr": 1.0})

        monkeypatch.setattr(cli, "sop_by_method", boom)
        code, _, err = run(["sop"], capsys)
        assert code == 2 and "numerical" in err


class TestValidate:
    def test_default_passes(self):
        report = run_validate(SystemConfig(), 100_000, 0)
        assert report["passed"], report["failures"]
        assert set(report["checks"]) == {"monte_carlo_vs_quadrature", "closed_form_envelope",
                                         "alpha_star", "convexity", "ks_gamma_e", "ks_gamma_d"}

    def test_corrupted_zeta_fails(self, capsys):
        code, out, err = run(["validate", "--zeta-override", "RE=0.001"], capsys)
        report = json.loads(out)
        assert code == 3
        assert report["failures"] == ["closed_form_envelope"]
        assert "closed_form_envelope" in err

    def test_byte_identical(self, tmp_path, capsys):
        outputs = []
        for jobs in (1, 2, 8, 1):
            path = tmp_path / f"r{jobs}-{len(outputs)}.json"
            assert main(["validate", "--seed", "17", "--jobs", str(jobs), "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
        assert all(o == outputs[0] for o in outputs)

    def test_trial_floor(self):
        with pytest.raises(DomainError):
            run_validate(SystemConfig(), 1000, 0)
