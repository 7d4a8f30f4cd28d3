import csv
from dataclasses import replace

import numpy as np
import pytest

from epsolve import ContractViolation, SpecError
from epsolve.bench import cli
from epsolve.bench.experiment import (TRACE_HEADER, ExperimentSpec, emit_trace, load_run, preset,
                                      read_trace, run_experiment, save_run)
from epsolve.bench.invariants import verify_invariants
from conftest import vi_config


def vi_start_spec(tmp_path=None, **kw):
    return ExperimentSpec(**{**preset("table8"), "out_dir": tmp_path, **kw})


# -- trace files ------------------------------------------------------------


def test_one_iteration_trace(tmp_path, vi_runs):
    path = emit_trace(vi_runs[(1, 1)], tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(TRACE_HEADER)


def test_trace_round_trip_bit_exact(tmp_path, vi_runs):
    trace = vi_runs[(0.7, 0.1)]
    rows = read_trace(emit_trace(trace, tmp_path / "t.csv"))
    assert [r["E"] for r in rows] == [r.E for r in trace.records]
    assert [r["linesearch_lhs"] for r in rows] == [r.linesearch_lhs for r in trace.records]
    assert [r["m_k"] for r in rows] == [r.m for r in trace.records]


def test_example2_E_strictly_decreasing(vi_runs):
    E = [r.E for r in vi_runs[(0, 0)].records]
    assert all(b < a for a, b in zip(E, E[1:]))
    assert E[-1] <= 1e-8


def test_emit_errors(tmp_path, vi_runs):
    with pytest.raises(OSError, match="missing"):
        emit_trace(vi_runs[(0, 0)], tmp_path / "missing" / "t.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ContractViolation):
        read_trace(bad)


def test_save_and_load_run(tmp_path, qvi, vi_runs):
    cfg = vi_config((0, 0))
    save_run(vi_runs[(0, 0)], tmp_path / "run.csv", "quasimonotone-vi", cfg)
    trace, instance, config = load_run(tmp_path / "run.csv")
    assert np.array_equal(config.x0, cfg.x0)
    for name in ("theta", "delta", "beta_schedule", "termination", "inner_tol", "max_outer"):
        assert getattr(config, name) == getattr(cfg, name)
    for a, b in zip(trace.records, vi_runs[(0, 0)].records):
        assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z) and a.E == b.E
    assert verify_invariants(trace, instance, config).passed
    (tmp_path / "run.vectors.csv").unlink()
    with pytest.raises(ContractViolation):
        load_run(tmp_path / "run.csv")


# -- invariant reports ------------------------------------------------------


def test_corrupted_trace_fails_feasibility(qvi, vi_runs):
    trace = vi_runs[(0, 0)]
    recs = list(trace.records)
    bad = recs[2].x.copy()
    bad[1] += 0.1
    recs[2] = replace(recs[2], x=bad)
    report = verify_invariants(replace(trace, records=tuple(recs)), qvi, vi_config((0, 0)))
    assert report["feasibility"].status == "fail"
    assert not report.passed


def test_minty_not_applicable(nash, nash_run):
    from conftest import nash_config
    report = verify_invariants(nash_run, nash, nash_config(0.5))
    assert report["minty_retention"].status == "n/a"
    assert report["boundedness_ball"].status == "n/a"
    assert "n/a" in report.format()


def test_mismatched_instance(nash, vi_runs):
    with pytest.raises(ContractViolation):
        verify_invariants(vi_runs[(0, 0)], nash, vi_config((0, 0)))


# -- sweeps -----------------------------------------------------------------


def test_vi_start_sweep(tmp_path):
    rows = run_experiment(vi_start_spec(tmp_path))
    assert [r.iterations for r in rows] == [6, 5, 5, 1, 5, 5]
    assert rows[3].status == "SolvedByYEqualsX"
    with open(tmp_path / "summary.csv", newline="") as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 6
    for row in summary:
        assert int(row["iterations"]) == len(read_trace(tmp_path / row["trace_file"]))
        if row["status"] == "ToleranceMet":
            assert float(row["final_E"]) <= 1e-8


def test_sweep_determinism_and_workers():
    serial = run_experiment(vi_start_spec())
    again = run_experiment(vi_start_spec())
    pooled = run_experiment(vi_start_spec(workers=3))
    counts = [r.iterations for r in serial]
    assert [r.iterations for r in again] == counts
    assert [r.iterations for r in pooled] == counts
    assert [tuple(r.x0) for r in pooled] == [tuple(r.x0) for r in serial]


def test_empty_grid_writes_nothing(tmp_path):
    with pytest.raises(SpecError):
        run_experiment(vi_start_spec(tmp_path, x0s=[]))
    assert not any(tmp_path.iterdir())


def test_invalid_grid_points():
    with pytest.raises(SpecError):
        run_experiment(vi_start_spec(thetas=[1.5]))
    with pytest.raises(SpecError):
        run_experiment(vi_start_spec(x0s=[(2.0, 0.0)]))
    with pytest.raises(SpecError):
        run_experiment(vi_start_spec(problem="nash-cournot"))
    with pytest.raises(SpecError):
        preset("table11")


def test_output_path_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        run_experiment(vi_start_spec(blocker / "out"))


def test_failed_run_recorded_not_raised():
    rows = run_experiment(vi_start_spec(x0s=[(0, 0)], max_outer=2))
    assert rows[0].status == "IterationLimit" and rows[0].failed
    rows = run_experiment(vi_start_spec(x0s=[(0, 0)], thetas=[0.3], deltas=[0.9]))
    assert rows[0].status.startswith("Error:LinesearchFailure") and rows[0].failed


# -- command line -----------------------------------------------------------


def test_cli_solve_and_verify(tmp_path, capsys):
    code = cli.main(["solve", "--problem", "quasimonotone-vi", "--theta", "0.95",
                     "--x0", "0,0", "--out", str(tmp_path)])
    assert code == 0
    assert "ToleranceMet" in capsys.readouterr().out
    assert cli.main(["verify", str(tmp_path / "trace_000.csv")]) == 0
    out = capsys.readouterr().out
    assert "feasibility" in out and " fail " not in out


def test_cli_sweep_lists(tmp_path, capsys):
    code = cli.main(["sweep", "--problem", "quasimonotone-vi", "--theta", "0.5,0.95",
                     "--beta", "const:0.5", "--beta", "rational:5,3", "--x0", "0.3,0.5",
                     "--no-traces", "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "summary.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 4
    assert not list(tmp_path.glob("trace_*.csv"))


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["solve", "--problem", "quasimonotone-vi", "--theta", "2"]) == 2
    assert cli.main(["solve", "--problem", "quasimonotone-vi", "--theta", "0.5",
                     "--beta", "linear:1"]) == 2
    assert cli.main(["solve", "--problem", "quasimonotone-vi", "--theta", "0.5",
                     "--max-iters", "1"]) == 1
    assert cli.main(["verify", str(tmp_path / "nothing.csv")]) == 2
    assert cli.main(["sweep", "--preset", "table8", "--out", str(tmp_path)]) == 0


def test_cli_verify_detects_corruption(tmp_path, capsys):
    cli.main(["solve", "--problem", "quasimonotone-vi", "--theta", "0.95", "--x0", "0,0",
              "--out", str(tmp_path)])
    vec = tmp_path / "trace_000.vectors.csv"
    with open(vec, newline="") as fh:
        rows = list(csv.reader(fh))
    x = [float(v) for v in rows[3][2].split()]
    x[1] += 0.1
    rows[3][2] = " ".join(repr(v) for v in x)
    with open(vec, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    assert cli.main(["verify", str(tmp_path / "trace_000.csv")]) == 1


def test_cli_params_file(tmp_path, capsys):
    from epsolve.problems import NashCournotParams, dump_params
    params = tmp_path / "market.txt"
    dump_params(NashCournotParams(), params)
    code = cli.main(["solve", "--problem", "nash-cournot", "--params", str(params),
                     "--theta", "0.99", "--out", str(tmp_path / "o")])
    assert code == 0
    assert cli.main(["verify", str(tmp_path / "o" / "trace_000.csv")]) == 0
    assert cli.main(["solve", "--problem", "quasimonotone-vi", "--params", str(params),
                     "--theta", "0.5"]) == 2
