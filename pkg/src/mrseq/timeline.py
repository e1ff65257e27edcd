"""Flattening of sequence documents into numeric event timelines.

A timeline is a contiguous list of events.  Each event carries a linear
gradient segment per axis (start/end values in T/m), an optional RF segment
(peak amplitude, shape, phase, frequency offset) and an optional ADC window.
Trapezoidal gradients expand into rise/flat/fall events so that every
segment respects the piecewise-linear contract; groups and expressions are
fully resolved, no expression strings remain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mrseq import expr as ex
from mrseq import model
from mrseq.constants import GAMMA_BAR, GAMMA_RAD

__all__ = [
    "RfSegment",
    "AdcWindow",
    "Event",
    "EventTimeline",
    "PlotSeries",
    "Violation",
    "FlattenError",
    "LimitViolationError",
    "flatten",
    "validate",
    "expand_epi",
    "diagram_series",
    "rf_envelope",
    "rf_bandwidth",
]

# ADC dwell time used inside the EPI macro [s].
EPI_DWELL = 10e-6

# Headroom factor applied to scanner limits when the EPI macro designs its
# own prephaser (keeps user-visible blocks clear of the hard limit).
EPI_GRAD_HEADROOM = 0.8

_ENVELOPE_QUAD_N = 4096


class FlattenError(Exception):
    """Expression or structural failure while flattening; names the block path."""

    def __init__(self, path: str, message: str, cause: Exception | None = None):
        self.path = path
        self.cause = cause
        super().__init__(f"{path}: {message}")


class LimitViolationError(FlattenError):
    """A derived gradient cannot be realized under the scanner limits."""


@dataclass(frozen=True)
class Violation:
    path: str
    kind: str  # "limit" | "slew" | "rf_amp" | "duration" | "eval" | "adc"
    message: str
    axis: str | None = None

    def to_dict(self) -> dict:
        return {"path": self.path, "kind": self.kind, "message": self.message, "axis": self.axis}


@dataclass(frozen=True)
class RfSegment:
    """RF over one event: B1(t) = amp * envelope(t) * exp(i*(2*pi*freq_offset*(t-t_mid) + phase))."""

    shape: str  # "hard" | "sinc"
    amp: float  # peak B1 [T]; sign folds a 180 deg phase
    phase: float  # [rad]
    freq_offset: float  # [Hz]
    lobes: int = 0


@dataclass(frozen=True)
class AdcWindow:
    """ADC over one event; samples at t = (k + 1/2) * duration / n_samples."""

    n_samples: int
    line_tag: int
    reverse: bool  # acquired under a negative read gradient


@dataclass(frozen=True)
class Event:
    t_start: float
    t_end: float
    g_start: tuple[float, float, float]  # T/m at t_start
    g_end: tuple[float, float, float]  # T/m at t_end
    rf: RfSegment | None = None
    adc: AdcWindow | None = None
    label: str = ""

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def grad_at(self, t: float) -> tuple[float, float, float]:
        if self.t_end == self.t_start:
            return self.g_start
        f = (t - self.t_start) / (self.t_end - self.t_start)
        return tuple(a + (b - a) * f for a, b in zip(self.g_start, self.g_end))


@dataclass
class EventTimeline:
    events: list[Event]
    total_duration: float
    fov: float | None = None  # set by the EPI macro; reconstruction extent metadata

    def adc_events(self) -> list[Event]:
        return [e for e in self.events if e.adc is not None]


@dataclass
class PlotSeries:
    """Diagram channels sampled at shared time points (event boundaries exact)."""

    t: list[float]
    rf_mag: list[float]
    rf_phase: list[float]
    gx: list[float]
    gy: list[float]
    gz: list[float]
    adc_mask: list[float]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "rf_mag": self.rf_mag,
            "rf_phase": self.rf_phase,
            "gx": self.gx,
            "gy": self.gy,
            "gz": self.gz,
            "adc_mask": self.adc_mask,
        }


# ---------------------------------------------------------------------------
# RF envelope


def rf_envelope(shape: str, lobes: int, duration: float, t):
    """Unit-peak RF envelope at time ``t`` (seconds from event start).

    Hard pulses are constant 1.  Sinc pulses have ``lobes`` side lobes, zero
    crossings every duration/(lobes+1), and a Hann window so the envelope
    vanishes at both ends.  Accepts scalars or numpy arrays.
    """
    t = np.asarray(t, dtype=float)
    if shape == "hard":
        return np.ones_like(t)
    if shape != "sinc":
        raise ValueError(f"unknown RF shape {shape!r}")
    tau = t - duration / 2.0
    t0 = duration / (lobes + 1)
    hann = 0.5 * (1.0 + np.cos(2.0 * math.pi * tau / duration))
    return hann * np.sinc(tau / t0)


def rf_envelope_integral(shape: str, lobes: int, duration: float) -> float:
    """Integral of the unit-peak envelope over the pulse [s]; fixed-grid Simpson."""
    if shape == "hard":
        return duration
    n = _ENVELOPE_QUAD_N
    t = np.linspace(0.0, duration, n + 1)
    y = rf_envelope(shape, lobes, duration, t)
    h = duration / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum()))


def rf_bandwidth(shape: str, lobes: int, duration: float) -> float:
    """First-order pulse bandwidth [Hz]: 1/T for hard, (lobes+1)/T for sinc."""
    if shape == "hard":
        return 1.0 / duration
    return (lobes + 1) / duration


def rf_peak_amplitude(flip_deg: float, shape: str, lobes: int, duration: float) -> float:
    """Peak B1 [T] so the on-resonance flip equals ``flip_deg`` degrees."""
    integral = rf_envelope_integral(shape, lobes, duration)
    return math.radians(flip_deg) / (GAMMA_RAD * integral)


# ---------------------------------------------------------------------------
# Flattening


class _Emitter:
    def __init__(self, strict: bool):
        self.strict = strict
        self.events: list[Event] = []
        self.cursor = 0.0
        self.violations: list[Violation] = []
        self.fov: float | None = None

    def issue(self, v: Violation, cause: Exception | None = None) -> None:
        if self.strict and v.kind in ("eval", "duration"):
            raise FlattenError(v.path, v.message, cause)
        self.violations.append(v)

    def emit(self, duration: float, g0, g1, rf, adc, label: str) -> None:
        if duration <= 0.0:
            return
        self.events.append(
            Event(self.cursor, self.cursor + duration, tuple(g0), tuple(g1), rf, adc, label)
        )
        self.cursor += duration


_ZERO3 = (0.0, 0.0, 0.0)


def _axis_vec(axis: str, value: float) -> tuple[float, float, float]:
    return tuple(value if a == axis else 0.0 for a in model.AXES)


class _Walker:
    def __init__(self, doc: model.SequenceDoc, emitter: _Emitter):
        self.doc = doc
        self.scanner = doc.scanner
        self.gmap = doc.group_map()
        self.em = emitter

    # -- expression helpers

    def _eval(self, src: str, scope: ex.VariableScope, path: str) -> float | None:
        try:
            return ex.evaluate(src, scope)
        except ex.ExprError as e:
            self.em.issue(Violation(path, "eval", str(e)), e)
            return None

    def _eval_int(self, src: str, scope: ex.VariableScope, path: str) -> int | None:
        v = self._eval(src, scope, path)
        if v is None:
            return None
        i = round(v)
        if abs(v - i) > 1e-6 * max(1.0, abs(v)):
            self.em.issue(Violation(path, "eval", f"expected an integer, got {v}"))
            return None
        return int(i)

    def _duration(self, src: str, scope: ex.VariableScope, path: str) -> float | None:
        v = self._eval(src, scope, path)
        if v is None:
            return None
        if v < 0:
            self.em.issue(Violation(path, "duration", f"negative duration {v}"))
            return None
        return v

    # -- emission helpers

    def _trapezoid(self, g: tuple[float, float, float], flat: float, rise: float,
                   path: str, adc: AdcWindow | None = None) -> None:
        peak = max(abs(v) for v in g)
        if rise <= 0.0:
            rise = peak / self.scanner.max_slew if peak > 0 else 0.0
        self.em.emit(rise, _ZERO3, g, None, None, path)
        self.em.emit(flat, g, g, None, adc, path)
        self.em.emit(rise, g, _ZERO3, None, None, path)

    # -- block visitors

    def walk(self, blocks, scope: ex.VariableScope, path: str) -> None:
        for i, block in enumerate(blocks):
            bpath = f"{path}[{i}]"
            if isinstance(block, model.Delay):
                d = self._duration(block.duration, scope, bpath)
                if d is not None:
                    self.em.emit(d, _ZERO3, _ZERO3, None, None, bpath)
            elif isinstance(block, model.Gradient):
                self._visit_gradient(block, scope, bpath)
            elif isinstance(block, model.RfPulse):
                self._visit_rf(block, scope, bpath)
            elif isinstance(block, model.Readout):
                self._visit_readout(block, scope, bpath)
            elif isinstance(block, model.EpiAcq):
                self._visit_epi(block, scope, bpath)
            elif isinstance(block, model.GroupRef):
                self._visit_group(block, scope, bpath)
            else:
                raise TypeError(f"unknown block type {type(block).__name__}")

    def _visit_gradient(self, block: model.Gradient, scope, path: str) -> None:
        g = tuple(self._eval(getattr(block, f"g{a}"), scope, f"{path}.g{a}") for a in model.AXES)
        flat = self._duration(block.flat_duration, scope, f"{path}.flat_duration")
        rise = self._duration(block.rise_time, scope, f"{path}.rise_time")
        if any(v is None for v in g) or flat is None or rise is None:
            return
        self._trapezoid(g, flat, rise, path)

    def _visit_rf(self, block: model.RfPulse, scope, path: str) -> None:
        flip = self._eval(block.flip_angle, scope, f"{path}.flip_angle")
        dur = self._duration(block.duration, scope, f"{path}.duration")
        freq = self._eval(block.freq_offset, scope, f"{path}.freq_offset")
        phase = self._eval(block.phase, scope, f"{path}.phase")
        lobes = self._eval_int(block.sinc_lobes, scope, f"{path}.sinc_lobes")
        g_amp = self._eval(block.slice_grad_amp, scope, f"{path}.slice_grad_amp")
        if None in (flip, dur, freq, phase, lobes, g_amp):
            return
        if dur == 0.0:
            if flip != 0.0:
                self.em.issue(Violation(f"{path}.duration", "duration",
                                        "RF pulse with nonzero flip needs a positive duration"))
            return
        if block.shape == "sinc" and lobes < 0:
            self.em.issue(Violation(f"{path}.sinc_lobes", "eval", "sinc_lobes must be >= 0"))
            return
        amp = rf_peak_amplitude(flip, block.shape, lobes, dur)
        rf = RfSegment(block.shape, amp, math.radians(phase), freq, lobes)
        if block.slice_grad_axis != "none" and g_amp != 0.0:
            g = _axis_vec(block.slice_grad_axis, g_amp)
            rise = abs(g_amp) / self.scanner.max_slew
            self.em.emit(rise, _ZERO3, g, None, None, path)
            self.em.emit(dur, g, g, rf, None, path)
            self.em.emit(rise, g, _ZERO3, None, None, path)
        else:
            self.em.emit(dur, _ZERO3, _ZERO3, rf, None, path)

    def _visit_readout(self, block: model.Readout, scope, path: str) -> None:
        n = self._eval_int(block.samples, scope, f"{path}.samples")
        dur = self._duration(block.duration, scope, f"{path}.duration")
        amp = self._eval(block.read_grad_amp, scope, f"{path}.read_grad_amp")
        tag = self._eval_int(block.line_tag, scope, f"{path}.line_tag")
        if None in (n, dur, amp, tag):
            return
        if n < 1:
            self.em.issue(Violation(f"{path}.samples", "eval", f"samples must be >= 1, got {n}"))
            return
        if dur <= 0.0:
            self.em.issue(Violation(f"{path}.duration", "duration",
                                    "readout needs a positive duration"))
            return
        adc = AdcWindow(n, tag, reverse=amp < 0)
        g = _axis_vec(block.read_grad_axis, amp)
        self._trapezoid(g, dur, 0.0, path, adc=adc)

    def _visit_epi(self, block: model.EpiAcq, scope, path: str) -> None:
        n_lines = self._eval_int(block.n_lines, scope, f"{path}.n_lines")
        samples = self._eval_int(block.samples_per_line, scope, f"{path}.samples_per_line")
        fov = self._eval(block.fov, scope, f"{path}.fov")
        if None in (n_lines, samples, fov):
            return
        try:
            blocks = _expand_epi_numeric(
                n_lines, samples, fov, block.read_axis, block.phase_axis, self.scanner, path
            )
        except LimitViolationError as e:
            if self.em.strict:
                raise
            self.em.issue(Violation(path, "limit", str(e)))
            return
        self.em.fov = fov
        self.walk(blocks, scope, f"{path}/epi")

    def _visit_group(self, block: model.GroupRef, scope, path: str) -> None:
        reps = self._eval_int(block.repetitions, scope, f"{path}.repetitions")
        if reps is None:
            return
        if reps < 1:
            self.em.issue(Violation(f"{path}.repetitions", "eval",
                                    f"repetitions must be >= 1, got {reps}"))
            return
        group = self.gmap[block.group]
        for i in range(reps):
            rep_scope = scope.with_bindings({"rep": float(i), f"rep_{group.name}": float(i)})
            self.walk(group.blocks, rep_scope, f"{path}/{group.name}({i})")


def flatten(doc: model.SequenceDoc) -> EventTimeline:
    """Expand groups, evaluate expressions and emit the numeric event timeline.

    Raises FlattenError (with the block path) on evaluation failures, negative
    durations, or EPI gradients unreachable under the scanner limits.
    """
    doc.check_invariants()
    emitter = _Emitter(strict=True)
    _Walker(doc, emitter).walk(doc.blocks, doc.scope(), "blocks")
    return EventTimeline(emitter.events, emitter.cursor, emitter.fov)


def validate(doc: model.SequenceDoc) -> list[Violation]:
    """All scanner-limit and evaluation violations of a document (empty = valid)."""
    doc.check_invariants()
    emitter = _Emitter(strict=False)
    _Walker(doc, emitter).walk(doc.blocks, doc.scope(), "blocks")
    violations = list(emitter.violations)
    sc = doc.scanner
    prev_g = _ZERO3
    prev_adc_end: float | None = None
    for ev in emitter.events:
        for ai, axis in enumerate(model.AXES):
            hi = max(abs(ev.g_start[ai]), abs(ev.g_end[ai]))
            if hi > sc.max_grad * (1 + 1e-9):
                violations.append(Violation(
                    ev.label, "limit",
                    f"gradient {hi:.6g} T/m exceeds limit {sc.max_grad:.6g} T/m", axis))
            dur = ev.duration
            if dur > 0:
                slew = abs(ev.g_end[ai] - ev.g_start[ai]) / dur
                if slew > sc.max_slew * (1 + 1e-9):
                    violations.append(Violation(
                        ev.label, "slew",
                        f"slew rate {slew:.6g} T/m/s exceeds limit {sc.max_slew:.6g} T/m/s", axis))
            if abs(prev_g[ai] - ev.g_start[ai]) > 1e-12:
                violations.append(Violation(
                    ev.label, "slew", "gradient steps discontinuously between events", axis))
        prev_g = ev.g_end
        if ev.rf is not None:
            if abs(ev.rf.amp) > sc.max_rf_amp * (1 + 1e-9):
                violations.append(Violation(
                    ev.label, "rf_amp",
                    f"peak B1 {abs(ev.rf.amp):.6g} T exceeds limit {sc.max_rf_amp:.6g} T"))
            if ev.adc is not None:
                violations.append(Violation(ev.label, "adc", "ADC window inside an RF event"))
        if ev.adc is not None:
            if prev_adc_end is not None and ev.t_start - prev_adc_end < sc.adc_dead_time:
                violations.append(Violation(
                    ev.label, "adc",
                    f"ADC windows closer than the dead time {sc.adc_dead_time:.6g} s"))
            prev_adc_end = ev.t_end
    return violations


# ---------------------------------------------------------------------------
# EPI expansion


def _min_time_trapezoid(areas: dict[str, float], scanner: model.Scanner, path: str):
    """Shared-timing trapezoid reaching the given per-axis areas [T/m*s]."""
    a_max = max(abs(a) for a in areas.values())
    if a_max == 0.0:
        return None
    slew = scanner.max_slew * EPI_GRAD_HEADROOM
    g_cap = scanner.max_grad * EPI_GRAD_HEADROOM
    g_tri = math.sqrt(a_max * slew)
    if g_tri <= g_cap:
        rise = g_tri / slew
        flat = 0.0
    else:
        rise = g_cap / slew
        flat = a_max / g_cap - rise
    denom = flat + rise
    amps = {axis: area / denom for axis, area in areas.items()}
    kwargs = {f"g{axis}": repr(amp) for axis, amp in amps.items()}
    return model.Gradient(flat_duration=repr(flat), rise_time=repr(rise), **kwargs)


def _expand_epi_numeric(n_lines: int, samples: int, fov: float, read_axis: str,
                        phase_axis: str, scanner: model.Scanner, path: str) -> list[model.Block]:
    if read_axis == phase_axis:
        raise FlattenError(path, "EPI read_axis and phase_axis must differ")
    if n_lines < 2 or samples < 2:
        raise FlattenError(path, "EPI needs n_lines >= 2 and samples_per_line >= 2")
    if fov <= 0:
        raise FlattenError(path, "EPI fov must be positive")
    dk = 1.0 / fov
    g_read = dk / (GAMMA_BAR * EPI_DWELL)
    if g_read > scanner.max_grad:
        raise LimitViolationError(
            path, f"EPI read gradient {g_read:.6g} T/m exceeds max_grad {scanner.max_grad:.6g} T/m")
    t_rise = g_read / scanner.max_slew
    t_flat = samples * EPI_DWELL

    # Prephase to the k-space corner: read to -samples/2*dk (including the half
    # ramp), phase to -n_lines/2*dk.  Samples land at k = (j + 1/2 - N/2)*dk.
    areas = {
        read_axis: -g_read * (t_flat + t_rise) / 2.0,
        phase_axis: -(n_lines / 2.0) * dk / GAMMA_BAR,
    }
    blocks: list[model.Block] = []
    pre = _min_time_trapezoid(areas, scanner, path)
    if pre is not None:
        blocks.append(pre)

    # Phase blip: triangle of duration 2*t_rise (the read gradient's rise time).
    blip_amp = (dk / GAMMA_BAR) / t_rise
    if blip_amp > scanner.max_grad:
        raise LimitViolationError(
            path, f"EPI phase blip {blip_amp:.6g} T/m exceeds max_grad {scanner.max_grad:.6g} T/m")
    if blip_amp / t_rise > scanner.max_slew:
        raise LimitViolationError(
            path, f"EPI phase blip slew {blip_amp / t_rise:.6g} exceeds max_slew {scanner.max_slew:.6g}")

    for i in range(n_lines):
        sign = 1.0 if i % 2 == 0 else -1.0
        blocks.append(model.Readout(
            samples=str(samples),
            duration=repr(t_flat),
            read_grad_axis=read_axis,
            read_grad_amp=repr(sign * g_read),
            line_tag=str(i),
        ))
        if i < n_lines - 1:
            blocks.append(model.Gradient(
                flat_duration="0.0",
                rise_time=repr(t_rise),
                **{f"g{phase_axis}": repr(blip_amp)},
            ))
    return blocks


def expand_epi(block: model.EpiAcq, scanner: model.Scanner,
               scope: ex.VariableScope | None = None) -> list[model.Block]:
    """Expand an EPI macro block into plain readout/gradient blocks."""
    scope = scope or ex.VariableScope()
    n_lines = int(ex.evaluate(block.n_lines, scope))
    samples = int(ex.evaluate(block.samples_per_line, scope))
    fov = ex.evaluate(block.fov, scope)
    return _expand_epi_numeric(n_lines, samples, fov, block.read_axis, block.phase_axis,
                               scanner, "epi")


# ---------------------------------------------------------------------------
# Diagram sampling


def _rf_series_at(ev: Event, t_abs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rf = ev.rf
    t_rel = t_abs - ev.t_start
    env = rf.amp * rf_envelope(rf.shape, rf.lobes, ev.duration, t_rel)
    phase = rf.phase + 2.0 * math.pi * rf.freq_offset * (t_rel - ev.duration / 2.0)
    phase = np.where(env < 0, phase + math.pi, phase)
    phase = np.mod(phase + math.pi, 2.0 * math.pi) - math.pi
    return np.abs(env), phase


def auto_plot_dt(tl: EventTimeline, dt_min: float = 1e-5,
                 max_points: float = 200_000) -> float:
    """A sampling step that keeps the series near ``max_points`` for long timelines."""
    return max(dt_min, tl.total_duration / max_points)


def diagram_series(tl: EventTimeline, dt_plot: float) -> PlotSeries:
    """Sample timeline channels for rendering; event boundary values are exact.

    Within each event, points are spaced at most ``dt_plot`` apart and include
    both boundaries, so consecutive events repeat the shared time stamp with
    their own channel values (step transitions render exactly).
    """
    if dt_plot <= 0:
        raise ValueError("dt_plot must be positive")
    n_points = sum(max(1, math.ceil(ev.duration / dt_plot)) + 1 for ev in tl.events)
    if n_points > 2_000_000:
        raise ValueError(f"diagram would need {n_points} points; increase dt_plot")
    t_all, mag_all, ph_all = [], [], []
    g_all = [[], [], []]
    adc_all = []
    for ev in tl.events:
        n = max(1, math.ceil(ev.duration / dt_plot))
        ts = np.linspace(ev.t_start, ev.t_end, n + 1)
        frac = (ts - ev.t_start) / ev.duration if ev.duration > 0 else np.zeros_like(ts)
        for ai in range(3):
            g_all[ai].append(ev.g_start[ai] + (ev.g_end[ai] - ev.g_start[ai]) * frac)
        if ev.rf is not None:
            mag, ph = _rf_series_at(ev, ts)
        else:
            mag = np.zeros_like(ts)
            ph = np.zeros_like(ts)
        t_all.append(ts)
        mag_all.append(mag)
        ph_all.append(ph)
        adc_all.append(np.full_like(ts, 1.0 if ev.adc is not None else 0.0))
    if not t_all:
        return PlotSeries([], [], [], [], [], [], [])
    return PlotSeries(
        t=np.concatenate(t_all).tolist(),
        rf_mag=np.concatenate(mag_all).tolist(),
        rf_phase=np.concatenate(ph_all).tolist(),
        gx=np.concatenate(g_all[0]).tolist(),
        gy=np.concatenate(g_all[1]).tolist(),
        gz=np.concatenate(g_all[2]).tolist(),
        adc_mask=np.concatenate(adc_all).tolist(),
    )
