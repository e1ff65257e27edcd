import math

import numpy as np
import pytest

from mrseq import phantom as ph
from mrseq import timeline
from mrseq.constants import GAMMA_BAR
from mrseq.examples import ge_epi_doc
from mrseq.timeline import Event, EventTimeline, RfSegment


def flow_path(v=(0.0, 0.0, 0.1), lo=(-1, -1, 0.0), hi=(1, 1, 0.1), reset=True):
    return ph.MotionPath(v=v, region_min=lo, region_max=hi, reset_on_wrap=reset)


class TestMotion:
    def test_static_spin_fixed(self):
        s = ph.Spin((0.01, 0.0, 0.0), 1.0, 0.1)
        for t in (0.0, 0.5, 123.0):
            assert ph.position_at(s, [], t) == (0.01, 0.0, 0.0)

    def test_full_wrap_returns_home(self):
        s = ph.Spin((0.0, 0.0, 0.05), 1.0, 0.1, motion_id=0)
        p = ph.position_at(s, [flow_path()], 1.0)  # v=0.1, region length 0.1
        assert p[2] == pytest.approx(0.05, abs=1e-12)

    def test_identity_at_t0(self):
        s = ph.Spin((0.02, -0.01, 0.03), 1.0, 0.1, motion_id=0)
        assert ph.position_at(s, [flow_path()], 0.0) == pytest.approx((0.02, -0.01, 0.03))

    def test_position_continuous_and_jumps_by_region_length(self):
        s = ph.Spin((0.0, 0.0, 0.09), 1.0, 0.1, motion_id=0)
        path = flow_path()
        eps = 1e-6
        t_wrap = ph.wrap_events(s, [path], (0.0, 1.0))[0]
        before = ph.position_at(s, [path], t_wrap - eps)[2]
        after = ph.position_at(s, [path], t_wrap + eps)[2]
        assert before == pytest.approx(0.1, abs=1e-5)
        assert after == pytest.approx(0.0, abs=1e-5)
        assert before - after == pytest.approx(0.1, abs=2e-5)

    def test_wrap_events_static_empty(self):
        s = ph.Spin((0.0, 0.0, 0.0), 1.0, 0.1)
        assert ph.wrap_events(s, [], (0.0, 10.0)) == []

    def test_wrap_events_from_region_edge(self):
        s = ph.Spin((0.0, 0.0, 0.0), 1.0, 0.1, motion_id=0)
        times = ph.wrap_events(s, [flow_path()], (0.0, 2.05))
        assert times == pytest.approx([1.0, 2.0], abs=1e-12)

    def test_wrap_events_zero_interval(self):
        s = ph.Spin((0.0, 0.0, 0.0), 1.0, 0.1, motion_id=0)
        assert ph.wrap_events(s, [flow_path()], (0.5, 0.5)) == []

    def test_wrap_events_negative_velocity(self):
        s = ph.Spin((0.0, 0.0, 0.05), 1.0, 0.1, motion_id=0)
        path = flow_path(v=(0.0, 0.0, -0.1))
        times = ph.wrap_events(s, [path], (0.0, 1.0))
        assert times == pytest.approx([0.5], abs=1e-12)

    def test_positions_at_vectorized_matches_scalar(self):
        p = ph.make_flow_cylinder()
        t = 0.37
        r = ph.positions_at(p, t)
        for i in (0, 100, p.n_spins - 1):
            assert r[i] == pytest.approx(ph.position_at(p.spin(i), p.motion, t), abs=1e-6)


class TestSliceGeometry:
    def make_tl(self, freq_offset, g, axis=2, shape="sinc", lobes=3, dur=1e-3):
        gvec = tuple(g if i == axis else 0.0 for i in range(3))
        rf = RfSegment(shape, 1e-6, 0.0, freq_offset, lobes)
        return EventTimeline([Event(0.0, dur, gvec, gvec, rf)], dur)

    def test_paper_offset_value(self):
        # gamma_bar * G = 1 MHz/m  ->  -20 kHz shifts the slice to -0.02 m
        g = 1e6 / GAMMA_BAR
        plane = ph.slice_from_sequence(self.make_tl(-20e3, g))
        assert plane.axis == "z"
        assert plane.center_offset == pytest.approx(-0.02, rel=1e-12)

    def test_zero_offset_isocenter(self):
        plane = ph.slice_from_sequence(self.make_tl(0.0, 0.01))
        assert plane.center_offset == 0.0

    def test_x_gradient_is_sagittal(self):
        plane = ph.slice_from_sequence(self.make_tl(0.0, 0.01, axis=0))
        assert plane.axis == "x"

    def test_no_rf_returns_none(self):
        tl = EventTimeline([Event(0.0, 1e-3, (0.01, 0, 0), (0.01, 0, 0))], 1e-3)
        assert ph.slice_from_sequence(tl) is None

    def test_scaling_invariance(self):
        # scaling freq_offset and G together leaves the center untouched;
        # powers of two keep the IEEE ratio exact, so compare bit-for-bit
        a = ph.slice_from_sequence(self.make_tl(-5e3, 0.01))
        for factor in (2.0, 8.0, 0.25):
            b = ph.slice_from_sequence(self.make_tl(-5e3 * factor, 0.01 * factor))
            assert a.center_offset == b.center_offset

    def test_thickness_conventions(self):
        g = 0.01
        hard = ph.slice_from_sequence(self.make_tl(0.0, g, shape="hard", dur=1e-3))
        assert hard.thickness == pytest.approx(1e3 / (GAMMA_BAR * g))
        sinc = ph.slice_from_sequence(self.make_tl(0.0, g, shape="sinc", lobes=3, dur=1e-3))
        assert sinc.thickness == pytest.approx(4e3 / (GAMMA_BAR * g))

    def test_example_doc_slice(self):
        tl = timeline.flatten(ge_epi_doc())
        plane = ph.slice_from_sequence(tl)
        assert plane.axis == "z"
        assert plane.center_offset < 0
        assert plane.thickness == pytest.approx(5e-3, rel=1e-9)


class TestGridSlices:
    def test_uniform_grid_constant_image(self):
        grid = ph.VoxelGrid((0, 0, 0), (1e-3, 1e-3, 1e-3), (4, 5, 6),
                            np.full((4, 5, 6), 2.0, np.float32),
                            np.ones((4, 5, 6), np.float32),
                            np.ones((4, 5, 6), np.float32))
        p = ph.make_phantom("u", x=[0], y=[0], z=[0], t1=[1], t2=[0.1], pd=[1], grid=grid)
        img, extent = ph.orthogonal_slices(p, "axial", 3)
        assert img.shape == (5, 4)
        assert np.all(img == 2.0)
        assert extent["plane"] == "axial"

    def test_delta_voxel_centered(self):
        pd = np.zeros((5, 5, 5), np.float32)
        pd[2, 2, 2] = 1.0
        grid = ph.VoxelGrid((-2e-3,) * 3, (1e-3,) * 3, (5, 5, 5), pd,
                            np.ones_like(pd), np.ones_like(pd))
        p = ph.make_phantom("d", x=[0], y=[0], z=[0], t1=[1], t2=[0.1], pd=[1], grid=grid)
        for plane in ("axial", "coronal", "sagittal"):
            img, _ = ph.orthogonal_slices(p, plane, 2)
            assert img[2, 2] == 1.0 and img.sum() == 1.0

    def test_out_of_range_index(self):
        p = ph.make_disc(spacing=4e-3)
        with pytest.raises(IndexError):
            ph.orthogonal_slices(p, "axial", 99)

    def test_no_grid_error(self):
        p = ph.make_phantom("bare", x=[0], y=[0], z=[0], t1=[1], t2=[0.1], pd=[1])
        with pytest.raises(ph.PhantomFormatError):
            ph.orthogonal_slices(p, "axial", 0)

    def test_bad_plane(self):
        p = ph.make_disc(spacing=4e-3)
        with pytest.raises(ValueError):
            ph.orthogonal_slices(p, "oblique", 0)


class TestFileFormat:
    def test_round_trip_1000_spins(self):
        rng = np.random.default_rng(3)
        n = 1000
        p = ph.make_phantom(
            "rand",
            x=rng.uniform(-0.1, 0.1, n), y=rng.uniform(-0.1, 0.1, n),
            z=rng.uniform(-0.1, 0.1, n),
            t1=rng.uniform(0.5, 2.0, n), t2=rng.uniform(0.02, 0.3, n),
            pd=rng.uniform(0, 1, n), delta_omega=rng.normal(0, 100, n),
            motion_id=np.full(n, -1),
        )
        q = ph.load_phantom(ph.save_phantom(p))
        for key in p.columns:
            assert np.array_equal(p.columns[key], q.columns[key]), key

    def test_pd_sum_bit_identical(self):
        p = ph.make_disc(spacing=2e-3)
        q = ph.load_phantom(ph.save_phantom(p))
        assert float(np.sum(p.columns["pd"], dtype=np.float64)) == \
               float(np.sum(q.columns["pd"], dtype=np.float64))

    def test_motion_and_grid_survive(self):
        p = ph.make_flow_cylinder()
        q = ph.load_phantom(ph.save_phantom(p))
        assert q.motion == p.motion
        assert q.grid.dims == p.grid.dims
        assert np.array_equal(q.grid.pd, p.grid.pd)

    def test_truncated_payload(self):
        data = ph.save_phantom(ph.make_disc(spacing=4e-3))
        with pytest.raises(ph.PhantomFormatError) as err:
            ph.load_phantom(data[:-8])
        assert "truncated" in str(err.value)

    def test_bad_header(self):
        with pytest.raises(ph.PhantomFormatError):
            ph.load_phantom(b"not json\n1234")

    def test_version_checked(self):
        data = ph.save_phantom(ph.make_disc(spacing=4e-3))
        head, _, tail = data.partition(b"\n")
        head = head.replace(b'"mrphantom_version": 1', b'"mrphantom_version": 9')
        with pytest.raises(ph.PhantomFormatError):
            ph.load_phantom(head + b"\n" + tail)


class TestBuilders:
    def test_disc_spin_count_and_tissues(self):
        p = ph.make_disc()
        assert p.n_spins >= 20000
        t2 = p.columns["t2"]
        assert set(np.unique(t2)) == {np.float32(0.04), np.float32(0.08)}

    def test_cylinder_geometry_by_counting(self):
        lumen_r, wall_r, spacing = 0.015, 0.025, 1.75e-3
        p = ph.make_flow_cylinder(lumen_radius=lumen_r, wall_radius=wall_r, spacing=spacing)
        x, y = p.columns["x"].astype(float), p.columns["y"].astype(float)
        rr = np.hypot(x, y)
        moving = p.columns["motion_id"] >= 0
        # all moving spins inside the lumen, all static ones in the wall annulus
        assert np.all(rr[moving] <= lumen_r + 1e-6)
        assert np.all(rr[~moving] > lumen_r - 1e-6)
        assert np.all(rr <= wall_r + 1e-6)
        # analytic area ratio: spins per slice scale with pi r^2
        z = p.columns["z"]
        one_plane = z == z[moving][0]
        count = int(np.sum(moving & one_plane))
        expect = math.pi * (lumen_r / spacing) ** 2
        assert count == pytest.approx(expect, rel=0.05)

    def test_cylinder_uniform_tissue(self):
        p = ph.make_flow_cylinder()
        for key in ("t1", "t2", "pd"):
            assert np.unique(p.columns[key]).size == 1

    def test_cylinder_flow_resets(self):
        p = ph.make_flow_cylinder()
        assert len(p.motion) == 1
        assert p.motion[0].reset_on_wrap
        assert p.motion[0].v[2] != 0.0

    def test_shepp_has_tissue_classes(self):
        p = ph.make_shepp()
        assert p.n_spins > 1000
        assert np.unique(p.columns["t1"]).size >= 3
        assert p.grid is not None

    def test_builtin_registry(self):
        assert set(ph.builtin_phantoms()) == {"disc2d", "shepp2d", "flow_cylinder"}
