"""Tracking metrics, comparison tables and trace files.

Errors are stored in radians and reported in degrees. A metric is the pair
``(MAX_e, RMS_e)`` of one error channel over the samples of a phase window,
both ends inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arsmc import AXES
from .simkernel import PhaseWindows, SimTrace

CONTROLLERS = ("ftsmc", "rsmc", "sac")
CHANNEL_LABELS = {"roll": "Roll", "pitch": "Pitch", "yaw": "Yaw"}
_GRID_TOL = 1e-9


class EmptyWindowError(ValueError):
    """A phase window holds no trace samples."""


class TraceIOError(OSError):
    """Reading or writing a trace or table file failed."""


def window_mask(time, window):
    lo, hi = window
    time = np.asarray(time)
    return (time >= lo - _GRID_TOL) & (time <= hi + _GRID_TOL)


def max_rms(values):
    """``(max |x|, sqrt(mean x^2))`` of a non-empty sequence."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyWindowError("no samples")
    return float(np.max(np.abs(values))), float(np.sqrt(np.mean(values * values)))


@dataclass
class MetricsReport:
    """``metrics[controller][phase][channel] = (MAX_e, RMS_e)`` in degrees."""

    metrics: dict = field(default_factory=dict)

    def get(self, controller, phase, channel):
        return self.metrics[controller][phase][channel]

    @property
    def controllers(self):
        return list(self.metrics)

    def merge(self, other):
        merged = {k: v for k, v in self.metrics.items()}
        merged.update(other.metrics)
        return MetricsReport(merged)

    def improvement(self, baseline, phase, channel, which=0):
        """``1 - SAC/baseline`` for MAX_e (``which=0``) or RMS_e (``which=1``)."""
        return improvement_ratio(
            self.get("sac", phase, channel)[which],
            self.get(baseline, phase, channel)[which],
        )


def improvement_ratio(sac_value, baseline_value):
    """``1 - sac/baseline``; nan when the baseline metric is zero."""
    if baseline_value == 0.0:
        return math.nan
    return 1.0 - sac_value / baseline_value


def compute_metrics(trace, windows=None, phases=None):
    """Per-channel MAX_e and RMS_e of ``trace`` in each phase window.

    Parameters
    ----------
    trace : SimTrace
    windows : PhaseWindows, optional
        Defaults to the standard conversion and reconversion windows.
    phases : iterable of str, optional
        Subset of ``"conversion"``, ``"reconversion"``, ``"full"``.

    Raises
    ------
    EmptyWindowError
        When a window contains no samples of the trace.
    """
    windows = windows or PhaseWindows()
    time = trace.time
    duration = float(time[-1]) if len(time) else 0.0
    spans = windows.as_dict(duration)
    phases = tuple(phases) if phases is not None else tuple(spans)
    errors = np.degrees(trace.errors())
    out = {}
    for phase in phases:
        mask = window_mask(time, spans[phase])
        if not mask.any():
            raise EmptyWindowError(f"{phase} window {spans[phase]} holds no samples")
        out[phase] = {axis: max_rms(errors[mask, i]) for i, axis in enumerate(AXES)}
    return MetricsReport({trace.controller: out})


def settling_time(time, error, threshold, before=None):
    """First time after which ``|error| < threshold`` for good.

    Only samples with ``t < before`` are considered when ``before`` is set.
    Returns ``nan`` if the error never settles in the range.
    """
    time = np.asarray(time)
    error = np.abs(np.asarray(error))
    if before is not None:
        keep = time < before
        time, error = time[keep], error[keep]
    over = np.nonzero(error >= threshold)[0]
    if over.size == 0:
        return float(time[0]) if time.size else math.nan
    last = over[-1]
    return float(time[last + 1]) if last + 1 < time.size else math.nan


# -- text tables ----------------------------------------------------------------


def format_table(report, phase, title=None, digits=4):
    """One comparison table: rows channel x {MAX_e, RMS_e}, columns FTSMC,
    RSMC, SAC and the improvement ratios I1 (vs FTSMC) and I2 (vs RSMC)."""
    width = digits + 5
    head = f"{'Channel':<8}{'Metric':<8}" + "".join(
        f"{c:>{width}}" for c in ("FTSMC", "RSMC", "SAC", "I1", "I2")
    )
    lines = [title] if title else []
    lines += [head, "-" * len(head)]
    for axis in AXES:
        for which, label in enumerate(("MAX_e", "RMS_e")):
            values = [report.get(c, phase, axis)[which] for c in CONTROLLERS]
            ratios = [report.improvement(b, phase, axis, which) for b in ("ftsmc", "rsmc")]
            cells = "".join(f"{v:>{width}.{digits}f}" for v in values + ratios)
            lines.append(f"{CHANNEL_LABELS[axis]:<8}{label:<8}{cells}")
    return "\n".join(lines)


def emit_tables(reports, digits=4):
    """Text tables for ``{label: MetricsReport}``, one per label and phase."""
    blocks = []
    for label, report in reports.items():
        for phase in ("conversion", "reconversion"):
            title = f"{phase.capitalize()} phase, {label} (errors in deg)"
            blocks.append(format_table(report, phase, title, digits))
    return "\n\n".join(blocks) + "\n"


# -- files ----------------------------------------------------------------------


def _write_columns(path, names, columns):
    data = np.column_stack(columns) if columns else np.empty((0, 0))
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            if data.size:
                np.savetxt(fh, data, fmt="%.17g", delimiter=",")
    except OSError as exc:
        raise TraceIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_trace(trace, path):
    """Write ``trace`` as CSV: a header row, then one row per sample in
    :data:`~tiltsac.simkernel.TRACE_COLUMNS` order, 17 significant digits."""
    _write_columns(path, trace.names, [trace[n] for n in trace.names])


def read_trace(path, controller="sac"):
    """Parse a file written by :func:`emit_trace`."""
    try:
        with open(path, encoding="ascii") as fh:
            names = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise TraceIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise TraceIOError(f"malformed trace file {path}: {exc}") from exc
    if data.size == 0:
        data = np.empty((0, len(names)))
    if data.shape[1] != len(names):
        raise TraceIOError(f"malformed trace file {path}: {data.shape[1]} values for {len(names)} columns")
    return SimTrace({n: data[:, i].copy() for i, n in enumerate(names)}, controller)


def emit_plotdata(trace, signals, path):
    """Time column plus the requested signals; no signals gives a header-only file."""
    signals = list(signals)
    missing = [s for s in signals if s not in trace.columns]
    if missing:
        raise KeyError(f"unknown signals {missing}")
    if not signals:
        _write_columns(path, ["t"], [])
        return
    _write_columns(path, ["t"] + signals, [trace.time] + [trace[s] for s in signals])


def write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise TraceIOError(f"cannot write {path}: {exc.strerror or exc}") from exc
