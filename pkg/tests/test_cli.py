import json

import pytest

from vqt.cli import main

GOLDEN = ["solve", "--c", "2", "--lambda", "2", "--mu1", "0.75", "--mu2", "1.12",
          "--k", "0.45"]


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolve:
    def test_golden_row_at_threshold(self, capsys):
        code, out, _ = run(capsys, GOLDEN + ["--grid-points", "5", "--mean"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x,F_0,F_1,cdf,pdf"
        row = next(l for l in lines if l.startswith("0.45,"))
        cells = [float(v) for v in row.split(",")]
        assert cells[3] == pytest.approx(0.0768040 + 0.02202 + 0.03179, abs=5e-5)
        assert lines[-1].startswith("# mean=")

    def test_threshold_point_injected_once(self, capsys):
        _, out, _ = run(capsys, GOLDEN + ["--grid-points", "7"])
        xs = [l.split(",")[0] for l in out.strip().splitlines()[1:]]
        assert xs.count("0.45") == 1

    def test_erlang_routing_header(self, capsys):
        code, out, _ = run(capsys, ["solve", "--c", "1", "--lambda", "0.5",
                                    "--mu1", "1", "--mu2", "1", "--k", "1",
                                    "--grid-points", "3"])
        assert code == 0
        assert out.splitlines()[0] == "# model=erlang_c"
        assert out.splitlines()[1] == "x,cdf,pdf"

    def test_unstable_literal_equal_rate_example_exits_2(self, capsys):
        # rho = 2 here: no stationary law exists, routing cannot save it
        code, _, err = run(capsys, ["solve", "--c", "1", "--lambda", "2",
                                    "--mu1", "1", "--mu2", "1", "--k", "1"])
        assert code == 2
        assert "Unstable" in err

    def test_degenerate_exit_and_suggestion(self, capsys):
        code, _, err = run(capsys, ["solve", "--c", "3", "--lambda", "2.4",
                                    "--mu1", "0.8", "--mu2", "0.9", "--k", "5"])
        assert code == 2
        assert "Degenerate" in err and "mu1" in err

    def test_csv_reemission_idempotent(self, capsys):
        _, out, _ = run(capsys, GOLDEN + ["--grid-points", "9"])
        lines = out.strip().splitlines()
        for line in lines[1:]:
            cells = line.split(",")
            again = ",".join(f"{float(v):.15g}" for v in cells)
            assert again == line

    def test_json_payload(self, capsys):
        code, out, _ = run(capsys, GOLDEN + ["--format", "json", "--grid-points",
                                             "4", "--mean", "--mixture", "--verify"])
        assert code == 0
        payload = json.loads(out)
        for key in ("params", "pi", "b_c", "grid", "cdf", "pdf", "components",
                    "mean", "mixture", "residuals", "warnings"):
            assert key in payload
        assert payload["b_c"] == pytest.approx(-0.827051, abs=5e-5)
        assert payload["pi"][0][0] == pytest.approx(0.0224116, abs=5e-5)
        assert payload["pi"][0][1] == pytest.approx(0.0108889, abs=5e-5)
        assert payload["pi"][1][0] == pytest.approx(0.0435035, abs=5e-5)
        assert max(payload["residuals"].values()) < 1e-8
        assert 0.45 in payload["grid"]

    def test_log_spacing(self, capsys):
        _, out, _ = run(capsys, GOLDEN + ["--spacing", "log", "--grid-points", "5"])
        xs = [float(l.split(",")[0]) for l in out.strip().splitlines()[1:]]
        assert xs == sorted(xs)
        assert 0.45 in xs

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "grid.csv"
        code, out, _ = run(capsys, GOLDEN + ["--grid-points", "3", "--out",
                                             str(target)])
        assert code == 0 and out == ""
        assert target.read_text().startswith("x,F_0")


class TestValidate:
    def test_matched_model_passes(self, capsys):
        code, out, _ = run(capsys, [
            "validate", "--c", "2", "--lambda", "2", "--mu1", "0.75",
            "--mu2", "1.12", "--k", "0.45", "--events", "150000",
            "--replications", "2", "--seed", "9",
        ])
        assert code == 0
        assert out.startswith("x,analytic_cdf,sim_cdf,half_width,z")
        assert "# mean analytic=" in out

    def test_mismatched_model_exits_4(self, capsys, monkeypatch):
        # simulate a slowdown system but compare against the analytic CDF of
        # a faster one: the gap dwarfs Monte Carlo noise
        import vqt.cli as cli_mod
        from vqt.model import validate_params
        from vqt import solver
        real_solve = solver.solve

        def solve_wrong(params):
            return real_solve(validate_params(params.c, params.lam, params.mu1,
                                              0.9, params.k))
        monkeypatch.setattr(cli_mod.solver, "solve", solve_wrong)
        code, out, _ = run(capsys, [
            "validate", "--c", "3", "--lambda", "2", "--mu1", "0.8",
            "--mu2", "0.7", "--k", "5", "--events", "200000",
            "--replications", "1", "--seed", "12", "--grid", "3,5,7,10",
        ])
        assert code == 4

    def test_reproducible_byte_identical(self, capsys):
        argv = ["validate", "--c", "2", "--lambda", "2", "--mu1", "0.75",
                "--mu2", "1.12", "--k", "0.45", "--events", "60000",
                "--replications", "2", "--seed", "33"]
        _, out1, _ = run(capsys, argv)
        _, out2, _ = run(capsys, argv)
        assert out1 == out2


class TestSweep:
    def test_degenerate_row_skipped_neighbors_ok(self, capsys):
        code, out, _ = run(capsys, [
            "sweep", "--c", "3", "--lambda", "2", "--mu1", "0.3", "--mu2", "0.8",
            "--k", "5", "--sweep", "lambda=0.7:1.1:5", "--metrics", "mean",
        ])
        assert code == 0
        lines = out.strip().splitlines()
        statuses = [l.split(",")[1] for l in lines[1:]]
        assert statuses[2] == "degenerate"       # lambda = 0.9 = c*mu1
        assert statuses[0] == "ok" and statuses[-1] == "ok"
        degenerate_row = lines[3].split(",")
        assert degenerate_row[2] == ""

    def test_equal_rate_point_routed(self, capsys):
        code, out, _ = run(capsys, [
            "sweep", "--c", "3", "--lambda", "2", "--mu1", "0.8", "--mu2", "0.8",
            "--k", "5", "--sweep", "mu2=0.7:0.9:3",
            "--metrics", "cdf@3,p_wait",
        ])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "mu2,status,cdf@3,p_wait"
        rows = [l.split(",") for l in lines[1:]]
        assert [r[1] for r in rows] == ["ok", "erlang_c", "ok"]
        cdfs = [float(r[2]) for r in rows]
        assert cdfs == sorted(cdfs)              # pointwise ordered in mu2

    def test_all_invalid_exits_2(self, capsys):
        code, _, err = run(capsys, [
            "sweep", "--c", "1", "--lambda", "2", "--mu1", "1", "--mu2", "1.2",
            "--k", "1", "--sweep", "mu2=0.5:1.5:3", "--metrics", "mean",
        ])
        assert code == 2

    def test_convexity_violation_of_mean_in_lambda(self, capsys):
        code, out, _ = run(capsys, [
            "sweep", "--c", "3", "--lambda", "2", "--mu1", "0.3", "--mu2", "0.8",
            "--k", "5", "--sweep", "lambda=0.2:2.3:40", "--metrics", "mean",
        ])
        assert code == 0
        rows = [l.split(",") for l in out.strip().splitlines()[1:]]
        pts = [(float(r[0]), float(r[2])) for r in rows if r[1] == "ok"]
        violated = any(
            pts[i][1] > 0.5 * (pts[i - 1][1] + pts[i + 1][1]) + 1e-12
            for i in range(1, len(pts) - 1)
            if pts[i + 1][0] - pts[i][0] == pytest.approx(pts[i][0] - pts[i - 1][0])
        )
        assert violated

    def test_bad_sweep_spec(self, capsys):
        code, _, err = run(capsys, [
            "sweep", "--c", "2", "--lambda", "1", "--mu1", "1", "--mu2", "1.2",
            "--k", "1", "--sweep", "nope=1:2:3", "--metrics", "mean",
        ])
        assert code == 2
