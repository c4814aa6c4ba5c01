import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltsac.report import (
    EmptyWindowError,
    MetricsReport,
    TraceIOError,
    compute_metrics,
    emit_plotdata,
    emit_tables,
    emit_trace,
    format_table,
    improvement_ratio,
    max_rms,
    read_trace,
    settling_time,
    window_mask,
)
from tiltsac.simkernel import PhaseWindows, ScenarioConfig, SimTrace, run

WINDOWS = PhaseWindows((0.0, 0.5), (0.5, 1.0))


def trace_from(errors_rad, controller="sac"):
    errors_rad = np.asarray(errors_rad, dtype=float)
    n = len(errors_rad)
    cols = {"t": np.linspace(0.0, 1.0, n)}
    for i, axis in enumerate(("roll", "pitch", "yaw")):
        cols[f"e_{axis}"] = errors_rad[:, i]
    return SimTrace(cols, controller)


def test_max_rms_examples():
    assert max_rms([1.0, -2.0, 3.0]) == (3.0, pytest.approx(math.sqrt(14.0 / 3.0)))
    assert max_rms([-0.25] * 7) == (0.25, 0.25)
    with pytest.raises(EmptyWindowError):
        max_rms([])


@settings(max_examples=200)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
def test_max_bounds_rms(values):
    mx, rms = max_rms(values)
    assert mx >= rms * (1 - 1e-15)


def test_metrics_are_reported_in_degrees():
    errors = np.tile(np.radians([1.0, -2.0, 3.0]), (11, 1))
    report = compute_metrics(trace_from(errors), WINDOWS)
    assert report.get("sac", "full", "yaw") == pytest.approx((3.0, 3.0))
    assert report.get("sac", "conversion", "pitch") == pytest.approx((2.0, 2.0))


def test_window_edges_are_inclusive():
    t = np.array([0.0, 0.1, 0.2, 0.30000000000000004, 0.4])
    assert window_mask(t, (0.1, 0.3)).tolist() == [False, True, True, True, False]


def test_empty_window():
    with pytest.raises(EmptyWindowError):
        compute_metrics(trace_from(np.zeros((11, 3))), PhaseWindows((2.0, 3.0), (4.0, 5.0)))


def test_phase_subset():
    report = compute_metrics(trace_from(np.zeros((11, 3))), WINDOWS, phases=["full"])
    assert list(report.metrics["sac"]) == ["full"]


def test_improvement_ratio():
    assert improvement_ratio(0.029, 0.335) == pytest.approx(0.913, abs=1e-3)
    assert math.isnan(improvement_ratio(1.0, 0.0))


def test_settling_time():
    t = np.arange(6) * 0.5
    e = np.array([1.0, 0.5, 0.01, 0.2, 0.01, 0.01])
    assert settling_time(t, e, 0.05) == 2.0
    assert settling_time(t, e, 0.05, before=1.2) == 1.0
    assert math.isnan(settling_time(t, e, 0.05, before=1.6))
    assert math.isnan(settling_time(t, np.ones(6), 0.05))


def comparison_report():
    report = MetricsReport()
    for k, kind in enumerate(("ftsmc", "rsmc", "sac")):
        errors = np.full((11, 3), np.radians(0.3 - 0.1 * k))
        report = report.merge(compute_metrics(trace_from(errors, kind), WINDOWS))
    return report


def test_table_layout():
    text = format_table(comparison_report(), "conversion")
    lines = text.splitlines()
    assert lines[0].split() == ["Channel", "Metric", "FTSMC", "RSMC", "SAC", "I1", "I2"]
    rows = [line.split()[:2] for line in lines[2:]]
    assert rows == [
        ["Roll", "MAX_e"], ["Roll", "RMS_e"],
        ["Pitch", "MAX_e"], ["Pitch", "RMS_e"],
        ["Yaw", "MAX_e"], ["Yaw", "RMS_e"],
    ]
    # SAC at 0.1 deg against 0.3 and 0.2
    assert [float(v) for v in lines[2].split()[2:]] == pytest.approx([0.3, 0.2, 0.1, 2 / 3, 0.5], abs=1e-4)


def test_emit_tables_has_both_phases():
    text = emit_tables({"without disturbance": comparison_report()})
    assert "Conversion phase, without disturbance" in text
    assert "Reconversion phase, without disturbance" in text


def test_trace_round_trip_is_exact(tmp_path):
    trace = run(ScenarioConfig(duration=0.05, windows=PhaseWindows((0.0, 0.02), (0.03, 0.05))))
    path = tmp_path / "trace.csv"
    emit_trace(trace, path)
    back = read_trace(path)
    assert back.names == trace.names
    assert back.as_array().tobytes() == trace.as_array().tobytes()


def test_plotdata(tmp_path):
    trace = trace_from(np.zeros((5, 3)))
    empty = tmp_path / "empty.csv"
    emit_plotdata(trace, [], empty)
    assert empty.read_text() == "t\n"
    some = tmp_path / "some.csv"
    emit_plotdata(trace, ["e_roll"], some)
    lines = some.read_text().splitlines()
    assert lines[0] == "t,e_roll"
    assert len(lines) == 6
    with pytest.raises(KeyError):
        emit_plotdata(trace, ["nope"], some)


def test_io_errors(tmp_path):
    trace = trace_from(np.zeros((3, 3)))
    with pytest.raises(TraceIOError):
        emit_trace(trace, tmp_path / "missing" / "trace.csv")
    with pytest.raises(TraceIOError):
        read_trace(tmp_path / "absent.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("t,a\n1,2,3\n")
    with pytest.raises(TraceIOError):
        read_trace(bad)
