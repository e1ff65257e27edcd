import math

import numpy as np
import pytest

from mrseq import model, timeline
from mrseq.constants import GAMMA_BAR
from mrseq.examples import ge_epi_doc, spin_echo_doc
from mrseq.model import (
    Delay, EpiAcq, Gradient, GroupDef, GroupRef, Readout, RfPulse, Scanner, SequenceDoc,
)

SC = Scanner(b0=3.0, max_rf_amp=2e-4, max_grad=0.045, max_slew=200.0)


def doc_of(*blocks, groups=(), variables=None, scanner=SC):
    return SequenceDoc(blocks=list(blocks), groups=list(groups),
                       variables=dict(variables or {}), scanner=scanner)


class TestFlatten:
    def test_repeated_delay(self):
        doc = doc_of(GroupRef(group="g", repetitions="3"),
                     groups=[GroupDef("g", (Delay(duration="0.001"),))])
        tl = timeline.flatten(doc)
        assert len(tl.events) == 3
        assert tl.total_duration == pytest.approx(0.003, abs=1e-12)
        for ev, t0 in zip(tl.events, (0.0, 0.001, 0.002)):
            assert ev.t_start == pytest.approx(t0, abs=1e-12)

    def test_se_matrix_sized_by_variable(self):
        doc = doc_of(
            GroupRef(group="TR", repetitions="N_matrix"),
            groups=[GroupDef("TR", (
                Readout(samples="N_matrix", duration="1e-3", read_grad_axis="x",
                        read_grad_amp="0.01", line_tag="rep"),
                Delay(duration="0.005"),
            ))],
            variables={"N_matrix": "100"},
        )
        tl = timeline.flatten(doc)
        adc = tl.adc_events()
        assert len(adc) == 100
        assert all(ev.adc.n_samples == 100 for ev in adc)

    def test_nested_groups_multiply(self):
        doc = doc_of(
            GroupRef(group="outer", repetitions="2"),
            groups=[
                GroupDef("inner", (Delay(duration="0.001"),)),
                GroupDef("outer", (GroupRef(group="inner", repetitions="2"),)),
            ],
        )
        tl = timeline.flatten(doc)
        assert len(tl.events) == 4

    def test_rep_counters_step_phase_encode(self):
        n = 8
        doc = doc_of(
            GroupRef(group="TR", repetitions="N"),
            groups=[GroupDef("TR", (
                Gradient(gy="(rep - N/2) * dky / (gamma * tau)", flat_duration="tau",
                         rise_time="1e-4"),
                Delay(duration="2e-3"),
            ))],
            variables={"N": str(n), "dky": "5.0", "tau": "1e-3"},
        )
        tl = timeline.flatten(doc)
        amps = [ev.g_end[1] for ev in tl.events
                if ev.duration == pytest.approx(1e-3) and ev.g_start == ev.g_end]
        assert len(amps) == n
        expected = [(k - n / 2) * 5.0 / (GAMMA_BAR * 1e-3) for k in range(n)]
        assert amps == pytest.approx(expected, rel=1e-12)
        steps = np.diff(amps)
        assert steps == pytest.approx([steps[0]] * (n - 1), rel=1e-9)

    def test_nested_counters_visible(self):
        doc = doc_of(
            GroupRef(group="outer", repetitions="2"),
            groups=[
                GroupDef("inner", (Delay(duration="(1 + rep_outer*2 + rep) * 1e-3"),)),
                GroupDef("outer", (GroupRef(group="inner", repetitions="2"),)),
            ],
        )
        tl = timeline.flatten(doc)
        durs = [round(ev.duration * 1e3) for ev in tl.events]
        assert durs == [1, 2, 3, 4]

    def test_innermost_rep_shadows(self):
        doc = doc_of(
            GroupRef(group="o", repetitions="2"),
            groups=[
                GroupDef("i", (Delay(duration="(1 + rep) * 1e-3"),)),
                GroupDef("o", (GroupRef(group="i", repetitions="3"),)),
            ],
        )
        tl = timeline.flatten(doc)
        durs = [round(ev.duration * 1e3) for ev in tl.events]
        assert durs == [1, 2, 3, 1, 2, 3]

    def test_eval_error_carries_block_path(self):
        doc = doc_of(Delay(duration="nope"))
        with pytest.raises(timeline.FlattenError) as err:
            timeline.flatten(doc)
        assert "blocks[0]" in err.value.path

    def test_negative_duration_fatal(self):
        with pytest.raises(timeline.FlattenError):
            timeline.flatten(doc_of(Delay(duration="-1")))

    def test_no_expressions_left(self):
        tl = timeline.flatten(ge_epi_doc(n=8, fov=0.2))
        for ev in tl.events:
            assert all(isinstance(v, float) for v in ev.g_start + ev.g_end)

    def test_contiguous_events(self):
        tl = timeline.flatten(spin_echo_doc(n=8, readout_duration=2.56e-4))
        for a, b in zip(tl.events[:-1], tl.events[1:]):
            assert a.t_end == b.t_start
        assert tl.events[-1].t_end == tl.total_duration

    def test_total_duration_matches_block_sum(self):
        # one trapezoid with derived ramps: flat + 2*|g|/slew, to 1 ns
        doc = doc_of(Gradient(gx="0.02", flat_duration="0.001"))
        tl = timeline.flatten(doc)
        assert tl.total_duration == pytest.approx(0.001 + 2 * 0.02 / 200.0, abs=1e-9)

    def test_determinism(self):
        doc = spin_echo_doc(n=16, readout_duration=2.56e-4)
        t1 = timeline.flatten(doc)
        t2 = timeline.flatten(doc)
        assert t1.events == t2.events

    def test_rf_amp_calibration(self):
        doc = doc_of(RfPulse(flip_angle="90", duration="0.001"))
        tl = timeline.flatten(doc)
        rf = tl.events[0].rf
        from mrseq.constants import GAMMA_RAD
        assert rf.amp * GAMMA_RAD * 0.001 == pytest.approx(math.pi / 2, rel=1e-12)

    def test_propagation_changes_only_dependent_events(self):
        variables = {"TE_pad": "0.002", "g_amp": "0.01"}
        def build():
            return doc_of(
                RfPulse(flip_angle="90", duration="1e-4"),
                Delay(duration="TE_pad"),
                Gradient(gx="g_amp", flat_duration="1e-3", rise_time="1e-4"),
                variables=dict(variables),
            )
        base = timeline.flatten(build())
        variables["g_amp"] = "0.02"
        changed = timeline.flatten(build())
        # same number of events; only gradient-block events differ, and only in amplitude
        assert len(base.events) == len(changed.events)
        diffs = [i for i, (a, b) in enumerate(zip(base.events, changed.events)) if a != b]
        assert diffs == [2, 3, 4]  # rise, flat, fall of the gradient block
        for i in diffs:
            assert changed.events[i].label == base.events[i].label


class TestValidate:
    def test_over_limit_gradient_names_block_and_axis(self):
        doc = doc_of(Gradient(gy="0.09", flat_duration="1e-3", rise_time="1e-3"))
        violations = timeline.validate(doc)
        kinds = {(v.kind, v.axis) for v in violations}
        assert ("limit", "y") in kinds
        assert all("blocks[0]" in v.path for v in violations)

    def test_derived_rise_never_breaks_slew(self):
        doc = doc_of(Gradient(gx="0.04", flat_duration="1e-3"))  # rise_time 0 -> derived
        assert timeline.validate(doc) == []
        tl = timeline.flatten(doc)
        assert tl.events[0].duration == pytest.approx(0.04 / 200.0)

    def test_explicit_rise_can_break_slew(self):
        doc = doc_of(Gradient(gx="0.04", flat_duration="1e-3", rise_time="1e-5"))
        assert any(v.kind == "slew" for v in timeline.validate(doc))

    def test_rf_peak_limit(self):
        doc = doc_of(RfPulse(flip_angle="90", duration="1e-5"))  # very strong pulse
        assert any(v.kind == "rf_amp" for v in timeline.validate(doc))

    def test_negative_duration_reported_not_raised(self):
        doc = doc_of(Delay(duration="-1"))
        violations = timeline.validate(doc)
        assert any(v.kind == "duration" for v in violations)

    def test_eval_errors_reported(self):
        doc = doc_of(Delay(duration="missing_var"))
        assert any(v.kind == "eval" for v in timeline.validate(doc))

    def test_compliant_epi_is_clean(self):
        assert timeline.validate(ge_epi_doc()) == []


class TestEpiExpansion:
    def test_smallest_epi(self):
        blocks = timeline.expand_epi(
            EpiAcq(n_lines="2", samples_per_line="2", fov="0.2"), SC)
        readouts = [b for b in blocks if isinstance(b, Readout)]
        blips = [b for b in blocks if isinstance(b, Gradient) and b.gy != "0"]
        assert len(readouts) == 2
        amps = [float(r.read_grad_amp) for r in readouts]
        assert amps[0] > 0 > amps[1] and amps[0] == -amps[1]
        assert len(blips) == 2  # corner prephaser + one inter-line blip

    def test_delta_k_is_one_over_fov(self):
        fov = 0.24
        blocks = timeline.expand_epi(
            EpiAcq(n_lines="100", samples_per_line="100", fov=repr(fov)), SC)
        ro = next(b for b in blocks if isinstance(b, Readout))
        g = float(ro.read_grad_amp)
        dwell = float(ro.duration) / 100
        assert GAMMA_BAR * g * dwell == pytest.approx(1.0 / fov, rel=1e-12)
        blip = next(b for b in blocks[1:] if isinstance(b, Gradient) and b.gy != "0.0"
                    and float(b.gy) != 0.0 and b is not blocks[0])
        area = float(blip.gy) * float(blip.rise_time)
        assert GAMMA_BAR * area == pytest.approx(1.0 / fov, rel=1e-12)

    def test_same_axes_rejected(self):
        with pytest.raises(timeline.FlattenError):
            timeline.expand_epi(
                EpiAcq(n_lines="4", samples_per_line="4", fov="0.2",
                       read_axis="x", phase_axis="x"), SC)

    def test_unreachable_gradient_is_limit_violation(self):
        tiny_fov = EpiAcq(n_lines="4", samples_per_line="4", fov="0.005")
        with pytest.raises(timeline.LimitViolationError):
            timeline.expand_epi(tiny_fov, SC)

    def test_kspace_extent_covers_grid(self):
        # accumulated k on both axes must sweep +-N/(2 fov)
        n, fov = 8, 0.2
        doc = doc_of(EpiAcq(n_lines=str(n), samples_per_line=str(n), fov=repr(fov)))
        tl = timeline.flatten(doc)
        dk = 1.0 / fov
        kx = ky = 0.0
        kx_at_samples = []
        ky_at_lines = []
        for ev in tl.events:
            if ev.adc is not None:
                g = ev.g_start[0]
                dwell = ev.duration / ev.adc.n_samples
                base = kx + GAMMA_BAR * g * 0.5 * dwell
                kx_at_samples.extend(base + GAMMA_BAR * g * dwell * k
                                     for k in range(ev.adc.n_samples))
                ky_at_lines.append(ky)
            kx += GAMMA_BAR * (ev.g_start[0] + ev.g_end[0]) / 2 * ev.duration
            ky += GAMMA_BAR * (ev.g_start[1] + ev.g_end[1]) / 2 * ev.duration
        assert min(kx_at_samples) == pytest.approx((0.5 - n / 2) * dk, rel=1e-9)
        assert max(kx_at_samples) == pytest.approx((n / 2 - 0.5) * dk, rel=1e-9)
        assert ky_at_lines == pytest.approx([(i - n / 2) * dk for i in range(n)], rel=1e-9)

    def test_line_tags_and_reversal(self):
        tl = timeline.flatten(doc_of(EpiAcq(n_lines="4", samples_per_line="4", fov="0.2")))
        adc = tl.adc_events()
        assert [e.adc.line_tag for e in adc] == [0, 1, 2, 3]
        assert [e.adc.reverse for e in adc] == [False, True, False, True]


class TestDiagramSeries:
    def test_hard_pulse_constant(self):
        doc = doc_of(RfPulse(flip_angle="90", duration="0.001"))
        tl = timeline.flatten(doc)
        s = timeline.diagram_series(tl, 1e-4)
        assert len(s.t) == 11
        assert len(set(round(v, 12) for v in s.rf_mag)) == 1
        assert all(v == 0 for v in s.gx + s.gy + s.gz)

    def test_trapezoid_boundary_values_exact(self):
        doc = doc_of(Gradient(gx="0.02", flat_duration="1e-3", rise_time="2e-4"))
        tl = timeline.flatten(doc)
        s = timeline.diagram_series(tl, 5e-5)
        # linear interpolation oracle at every sampled time
        for t, g in zip(s.t, s.gx):
            if t <= 2e-4:
                expect = 0.02 * t / 2e-4
            elif t <= 1.2e-3:
                expect = 0.02
            else:
                expect = 0.02 * (1.4e-3 - t) / 2e-4
            assert g == pytest.approx(expect, abs=1e-15)
        assert 0.0 in s.gx and any(abs(v - 0.02) < 1e-15 for v in s.gx)

    def test_empty_timeline(self):
        s = timeline.diagram_series(timeline.EventTimeline([], 0.0), 1e-4)
        assert s.t == [] and s.rf_mag == [] and s.adc_mask == []

    def test_channels_equal_length(self):
        tl = timeline.flatten(ge_epi_doc(n=8, fov=0.2))
        s = timeline.diagram_series(tl, 1e-5)
        n = len(s.t)
        assert all(len(c) == n for c in
                   (s.rf_mag, s.rf_phase, s.gx, s.gy, s.gz, s.adc_mask))

    def test_adc_mask_marks_readouts(self):
        doc = doc_of(Readout(samples="4", duration="4e-4", read_grad_axis="x",
                             read_grad_amp="0.01"))
        tl = timeline.flatten(doc)
        s = timeline.diagram_series(tl, 1e-4)
        assert set(s.adc_mask) == {0.0, 1.0}
