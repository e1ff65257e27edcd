"""Bloch-equation time stepping over an event timeline.

Each spin evolves independently: every event is subdivided into steps no
longer than ``dt_rf`` (while RF is active) or ``dt_grad`` (while gradients or
ADC are active); events with neither are integrated in a single exact step.
Per step the magnetization is rotated about the effective field evaluated at
the step midpoint (exact axis-angle rotation), then relaxed
(mx,my *= exp(-dt/T2); mz -> 1 + (mz-1)*exp(-dt/T1)).  Spins are processed
in fixed-size chunks distributed over a thread pool; partial signals merge
in chunk order, so results are bit-identical for any thread count.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from mrseq import model
from mrseq.constants import GAMMA_RAD
from mrseq.phantom import Phantom
from mrseq.timeline import EventTimeline, rf_envelope

__all__ = [
    "SimConfig",
    "MagState",
    "AcqLayout",
    "RawAcquisition",
    "SimCancelled",
    "NonFiniteStateError",
    "simulate",
    "run",
    "steady_state_prepare",
]

# Spins per work unit.  Fixed (not configurable) so that chunk boundaries,
# and therefore floating-point reduction order, never depend on thread count.
CHUNK_SIZE = 4096


class SimCancelled(Exception):
    """Simulation stopped by a cooperative cancellation flag."""


class NonFiniteStateError(Exception):
    def __init__(self, spin_index: int, t: float):
        self.spin_index = spin_index
        self.t = t
        super().__init__(f"non-finite magnetization at spin {spin_index}, t={t:.6g} s")


@dataclass
class SimConfig:
    """Step-size caps [s] and worker count (0 = auto)."""

    dt_rf: float = 1e-6
    dt_grad: float = 10e-6
    threads: int = 0

    def __post_init__(self):
        if not (0 < self.dt_rf <= self.dt_grad):
            raise ValueError("need 0 < dt_rf <= dt_grad")

    def resolve_threads(self) -> int:
        if self.threads and self.threads > 0:
            return self.threads
        import os

        return min(8, os.cpu_count() or 1)


@dataclass
class MagState:
    """Per-spin magnetization; equilibrium is (0, 0, 1)."""

    mx: np.ndarray
    my: np.ndarray
    mz: np.ndarray

    @classmethod
    def equilibrium(cls, n: int) -> "MagState":
        return cls(np.zeros(n), np.zeros(n), np.ones(n))

    def copy(self) -> "MagState":
        return MagState(self.mx.copy(), self.my.copy(), self.mz.copy())


@dataclass
class AcqLayout:
    n_lines: int
    samples_per_line: int
    reversed_lines: np.ndarray  # bool per acquired line, in acquisition order
    fov: float | None = None
    uniform: bool = True

    def to_dict(self) -> dict:
        return {
            "n_lines": self.n_lines,
            "samples_per_line": self.samples_per_line,
            "reversed_lines": [bool(b) for b in self.reversed_lines],
            "fov": self.fov,
            "uniform": self.uniform,
        }


@dataclass
class RawAcquisition:
    """Complex ADC samples in acquisition order plus the k-space layout."""

    samples: np.ndarray  # complex128
    sample_times: np.ndarray  # timeline-relative seconds, strictly increasing
    line_tags: np.ndarray  # int per ADC event
    layout: AcqLayout


# ---------------------------------------------------------------------------
# Step plan (shared across chunks)


@dataclass
class _EventPlan:
    t0: np.ndarray  # absolute step start times (includes t_offset)
    dt: np.ndarray
    t_mid: np.ndarray
    b1: np.ndarray | None  # complex B1 at step midpoints, None when no RF
    g_mid: np.ndarray | None  # (n_steps, 3) gradients at midpoints, None when zero
    sample_idx: np.ndarray  # global sample index recorded at step end, -1 = none
    t_end: float  # absolute event end


@dataclass
class _Plan:
    events: list[_EventPlan]
    n_samples: int
    sample_times: np.ndarray
    line_tags: np.ndarray
    layout: AcqLayout
    has_movers: bool


def _build_plan(tl: EventTimeline, cfg: SimConfig, t_offset: float, phantom: Phantom) -> _Plan:
    plans: list[_EventPlan] = []
    sample_times: list[float] = []
    line_tags: list[int] = []
    reversed_flags: list[bool] = []
    samples_per_line: list[int] = []
    counter = 0
    for ev in tl.events:
        dur = ev.duration
        offsets: list[float] = []
        if ev.adc is not None:
            dwell = dur / ev.adc.n_samples
            offsets = [(k + 0.5) * dwell for k in range(ev.adc.n_samples)]
            line_tags.append(ev.adc.line_tag)
            reversed_flags.append(ev.adc.reverse)
            samples_per_line.append(ev.adc.n_samples)
        grad_on = any(v != 0.0 for v in ev.g_start + ev.g_end)
        if ev.rf is not None:
            cap = cfg.dt_rf
        elif grad_on or ev.adc is not None:
            cap = cfg.dt_grad
        else:
            cap = None
        bounds = sorted({0.0, dur, *offsets})
        sample_of = {t: counter + k for k, t in enumerate(offsets)}
        counter += len(offsets)
        edges_parts = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            nsub = 1 if cap is None else max(1, math.ceil((b - a) / cap - 1e-9))
            edges_parts.append(np.linspace(a, b, nsub + 1)[:-1])
        edges_parts.append(np.array([dur]))
        edges = np.concatenate(edges_parts)
        t0_rel = edges[:-1]
        t1_rel = edges[1:]
        dt = t1_rel - t0_rel
        t_mid_rel = t0_rel + dt / 2
        sample_idx = np.array([sample_of.get(t, -1) for t in t1_rel], dtype=np.int64)
        b1 = None
        if ev.rf is not None:
            rf = ev.rf
            env = rf.amp * rf_envelope(rf.shape, rf.lobes, dur, t_mid_rel)
            carrier = 2.0 * math.pi * rf.freq_offset * (t_mid_rel - dur / 2.0) + rf.phase
            b1 = env * np.exp(1j * carrier)
        g_mid = None
        if grad_on:
            frac = t_mid_rel / dur
            g0 = np.array(ev.g_start)
            g1 = np.array(ev.g_end)
            g_mid = g0[None, :] + (g1 - g0)[None, :] * frac[:, None]
        plans.append(_EventPlan(
            t0=t_offset + ev.t_start + t0_rel,
            dt=dt,
            t_mid=t_offset + ev.t_start + t_mid_rel,
            b1=b1,
            g_mid=g_mid,
            sample_idx=sample_idx,
            t_end=t_offset + ev.t_end,
        ))
        sample_times.extend(ev.t_start + o for o in offsets)
    uniform = len(set(samples_per_line)) <= 1
    layout = AcqLayout(
        n_lines=len(line_tags),
        samples_per_line=samples_per_line[0] if samples_per_line else 0,
        reversed_lines=np.array(reversed_flags, dtype=bool),
        fov=tl.fov,
        uniform=uniform,
    )
    has_movers = any(phantom.columns["motion_id"] >= 0) and len(phantom.motion) > 0
    return _Plan(plans, counter, np.array(sample_times), np.array(line_tags, dtype=np.int64),
                 layout, has_movers)


# ---------------------------------------------------------------------------
# Per-chunk execution


class _Movers:
    """Moving-spin bookkeeping local to one chunk."""

    def __init__(self, phantom: Phantom, lo: int, hi: int):
        ids = phantom.columns["motion_id"][lo:hi].astype(np.int64)
        self.groups = []
        for mid, path in enumerate(phantom.motion):
            idx = np.nonzero(ids == mid)[0]
            if idx.size == 0:
                continue
            self.groups.append((idx, path))

    def any(self) -> bool:
        return bool(self.groups)

    def update_positions(self, r0, r, t_mid: float) -> None:
        for idx, path in self.groups:
            for ax in range(3):
                if path.v[ax] == 0.0:
                    continue
                lo, hi = path.region_min[ax], path.region_max[ax]
                p = r0[ax][idx] + path.v[ax] * t_mid
                r[ax][idx] = lo + np.mod(p - lo, hi - lo)

    def wrapped(self, r0, t0: float, t1: float):
        """(indices, mask) of spins that wrapped within [t0, t1] and want a reset."""
        out = []
        for idx, path in self.groups:
            if not path.reset_on_wrap:
                continue
            hit = np.zeros(idx.size, dtype=bool)
            for ax in range(3):
                v = path.v[ax]
                if v == 0.0:
                    continue
                lo, hi = path.region_min[ax], path.region_max[ax]
                span = hi - lo
                u0 = (r0[ax][idx] + v * t0 - lo) / span
                u1 = (r0[ax][idx] + v * t1 - lo) / span
                hit |= np.floor(u1) != np.floor(u0)
            if hit.any():
                out.append(idx[hit])
        return out


def _simulate_chunk(plan: _Plan, phantom: Phantom, lo: int, hi: int,
                    init: MagState | None, cancel: threading.Event | None):
    cols = phantom.columns
    x0 = cols["x"][lo:hi].astype(np.float64)
    y0 = cols["y"][lo:hi].astype(np.float64)
    z0 = cols["z"][lo:hi].astype(np.float64)
    t1c = cols["t1"][lo:hi].astype(np.float64)
    t2c = cols["t2"][lo:hi].astype(np.float64)
    pd = cols["pd"][lo:hi].astype(np.float64)
    dwg = cols["delta_omega"][lo:hi].astype(np.float64) / GAMMA_RAD
    n = hi - lo
    if init is not None:
        mx = init.mx[lo:hi].copy()
        my = init.my[lo:hi].copy()
        mz = init.mz[lo:hi].copy()
    else:
        mx = np.zeros(n)
        my = np.zeros(n)
        mz = np.ones(n)

    movers = _Movers(phantom, lo, hi)
    r0 = (x0, y0, z0)
    r = [x0.copy(), y0.copy(), z0.copy()]

    sig = np.zeros(plan.n_samples, dtype=np.complex128)
    relax_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def relax_factors(dt: float):
        f = relax_cache.get(dt)
        if f is None:
            f = (np.exp(-dt / t1c), np.exp(-dt / t2c))
            relax_cache[dt] = f
        return f

    for ep in plan.events:
        if cancel is not None and cancel.is_set():
            raise SimCancelled()
        nsteps = ep.dt.shape[0]
        for i in range(nsteps):
            dt = float(ep.dt[i])
            if dt <= 0.0:
                continue
            t_mid = float(ep.t_mid[i])
            if ep.g_mid is not None:
                if movers.any():
                    movers.update_positions(r0, r, t_mid)
                gx, gy, gz = ep.g_mid[i]
                bz = gx * r[0] + gy * r[1] + gz * r[2] + dwg
            else:
                bz = dwg
            if ep.b1 is not None:
                bx = float(ep.b1[i].real)
                by = float(ep.b1[i].imag)
                bn = np.sqrt(bx * bx + by * by + bz * bz)
                theta = (-GAMMA_RAD * dt) * bn
                c = np.cos(theta)
                s = np.sin(theta)
                one_c = 1.0 - c
                inv = np.divide(1.0, bn, out=np.zeros_like(bn), where=bn > 0)
                kx = bx * inv
                ky = by * inv
                kz = bz * inv
                kdotm = kx * mx + ky * my + kz * mz
                cx = ky * mz - kz * my
                cy = kz * mx - kx * mz
                cz = kx * my - ky * mx
                mx, my, mz = (
                    mx * c + cx * s + kx * kdotm * one_c,
                    my * c + cy * s + ky * kdotm * one_c,
                    mz * c + cz * s + kz * kdotm * one_c,
                )
            else:
                theta = (-GAMMA_RAD * dt) * bz
                c = np.cos(theta)
                s = np.sin(theta)
                mx, my = mx * c - my * s, mx * s + my * c
            e1, e2 = relax_factors(dt)
            mx *= e2
            my *= e2
            mz = 1.0 + (mz - 1.0) * e1
            if movers.any():
                t0 = float(ep.t0[i])
                for idx in movers.wrapped(r0, t0, t0 + dt):
                    mx[idx] = 0.0
                    my[idx] = 0.0
                    mz[idx] = 1.0
            k = int(ep.sample_idx[i])
            if k >= 0:
                sig[k] = np.dot(pd, mx) + 1j * np.dot(pd, my)
        if not np.isfinite(mz).all():
            bad = int(np.nonzero(~np.isfinite(mz))[0][0])
            raise NonFiniteStateError(lo + bad, ep.t_end)
    return sig, mx, my, mz


# ---------------------------------------------------------------------------
# Public API


def run(tl: EventTimeline, phantom: Phantom, scanner: model.Scanner | None = None,
        config: SimConfig | None = None, progress=None, *,
        initial_state: MagState | None = None, t_offset: float = 0.0,
        cancel: threading.Event | None = None) -> tuple[RawAcquisition, MagState]:
    """Simulate a timeline and return both the acquisition and the final state.

    ``progress`` is called with a monotone fraction in [0, 1]; ``cancel`` is a
    cooperative flag checked between events (raises SimCancelled).
    """
    cfg = config or SimConfig()
    n = phantom.n_spins
    if n == 0:
        raise ValueError("phantom has no spins")
    if initial_state is not None and initial_state.mx.shape[0] != n:
        raise ValueError("initial state size does not match phantom")
    plan = _build_plan(tl, cfg, t_offset, phantom)

    chunks = [(lo, min(lo + CHUNK_SIZE, n)) for lo in range(0, n, CHUNK_SIZE)]
    n_chunks = len(chunks)
    threads = min(cfg.resolve_threads(), n_chunks)

    results: list = [None] * n_chunks
    done_lock = threading.Lock()
    done_count = 0

    def work(ci: int):
        nonlocal done_count
        lo, hi = chunks[ci]
        out = _simulate_chunk(plan, phantom, lo, hi, initial_state, cancel)
        with done_lock:
            done_count += 1
            if progress is not None:
                progress(done_count / n_chunks)
        return out

    if threads <= 1:
        for ci in range(n_chunks):
            results[ci] = work(ci)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(work, ci): ci for ci in range(n_chunks)}
            try:
                for fut, ci in futures.items():
                    results[ci] = fut.result()
            except BaseException:
                # stop remaining chunks cooperatively before re-raising
                if cancel is not None:
                    cancel.set()
                raise

    sig = np.zeros(plan.n_samples, dtype=np.complex128)
    mx = np.empty(n)
    my = np.empty(n)
    mz = np.empty(n)
    for ci, (lo, hi) in enumerate(chunks):
        csig, cmx, cmy, cmz = results[ci]
        sig += csig
        mx[lo:hi] = cmx
        my[lo:hi] = cmy
        mz[lo:hi] = cmz
    if progress is not None:
        progress(1.0)
    raw = RawAcquisition(sig, plan.sample_times, plan.line_tags, plan.layout)
    return raw, MagState(mx, my, mz)


def simulate(tl: EventTimeline, phantom: Phantom, scanner: model.Scanner | None = None,
             config: SimConfig | None = None, progress=None, *,
             initial_state: MagState | None = None, t_offset: float = 0.0,
             cancel: threading.Event | None = None) -> RawAcquisition:
    """Simulate a timeline and return the accumulated complex ADC signal."""
    raw, _ = run(tl, phantom, scanner, config, progress,
                 initial_state=initial_state, t_offset=t_offset, cancel=cancel)
    return raw


def steady_state_prepare(tl: EventTimeline, phantom: Phantom, n_dummy: int,
                         scanner: model.Scanner | None = None,
                         config: SimConfig | None = None,
                         initial_state: MagState | None = None) -> MagState:
    """Run ``n_dummy`` repetitions of a TR sub-timeline without keeping samples.

    Returns the magnetization state to pass to :func:`run` as the initial
    state; flow positions stay continuous via the accumulated time offset.
    """
    state = initial_state or MagState.equilibrium(phantom.n_spins)
    for i in range(n_dummy):
        _, state = run(tl, phantom, scanner, config,
                       initial_state=state, t_offset=i * tl.total_duration)
    return state
