import math

import numpy as np
import pytest

from mrseq import engine, recon, resultfile, timeline
from mrseq import phantom as ph
from mrseq.engine import AcqLayout, RawAcquisition
from mrseq.examples import ge_epi_doc


def raw_of(lines, tags=None, reversed_lines=None, fov=None):
    lines = np.asarray(lines, dtype=np.complex128)
    n, m = lines.shape
    tags = np.arange(n) if tags is None else np.asarray(tags)
    rev = np.zeros(n, bool) if reversed_lines is None else np.asarray(reversed_lines)
    return RawAcquisition(
        samples=lines.ravel(),
        sample_times=np.arange(n * m, dtype=float) * 1e-5,
        line_tags=tags,
        layout=AcqLayout(n_lines=n, samples_per_line=m, reversed_lines=rev, fov=fov),
    )


class TestSortKspace:
    def test_reversed_line_flipped(self):
        raw = raw_of([[1, 2], [10, 20]], reversed_lines=[False, True])
        k = recon.sort_kspace(raw)
        assert list(k.matrix[0]) == [1, 2]
        assert list(k.matrix[1]) == [20, 10]

    def test_duplicate_tag_named(self):
        raw = raw_of([[1, 2], [3, 4]], tags=[1, 1])
        with pytest.raises(recon.IncompleteKSpaceError) as err:
            recon.sort_kspace(raw)
        assert err.value.duplicate == [1]

    def test_missing_tag_named(self):
        raw = raw_of([[1, 2], [3, 4]], tags=[0, 3])
        with pytest.raises(recon.IncompleteKSpaceError) as err:
            recon.sort_kspace(raw)
        assert 1 in err.value.missing and 3 in err.value.missing

    def test_permuted_tags_sorted(self):
        rng = np.random.default_rng(5)
        n = 16
        perm = rng.permutation(n)
        lines = np.arange(n)[:, None] * np.ones((1, 4))
        # line with tag perm[i] acquired in slot i
        raw = raw_of(lines[perm], tags=perm)
        k = recon.sort_kspace(raw)
        assert np.array_equal(k.matrix.real, lines)

    def test_no_adc(self):
        raw = RawAcquisition(np.zeros(0, complex), np.zeros(0), np.zeros(0, int),
                             AcqLayout(0, 0, np.zeros(0, bool)))
        with pytest.raises(recon.IncompleteKSpaceError):
            recon.sort_kspace(raw)

    def test_fov_propagates(self):
        k = recon.sort_kspace(raw_of([[1, 2], [3, 4]], fov=0.24))
        assert k.fov == 0.24
        assert k.dk == pytest.approx(1 / 0.24)


class TestReconstruct:
    def test_dc_only_uniform(self):
        m = np.zeros((8, 8), complex)
        m[4, 4] = 1.0
        img = recon.reconstruct(recon.KSpace(m))
        assert np.allclose(img.magnitude, img.magnitude[0, 0])
        assert img.magnitude[0, 0] > 0

    def test_parseval(self):
        rng = np.random.default_rng(9)
        m = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        img = recon.reconstruct(recon.KSpace(m.copy()))
        complex_img = img.magnitude * np.exp(1j * img.phase)
        lhs = np.sum(np.abs(m) ** 2)
        rhs = m.size * np.sum(np.abs(complex_img) ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_phase_range(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        img = recon.reconstruct(recon.KSpace(m))
        assert np.all(img.phase > -math.pi - 1e-12)
        assert np.all(img.phase <= math.pi + 1e-12)
        assert np.all(img.magnitude >= 0)


class TestEndToEnd:
    def point_image(self, x0, y0, n=16, fov=0.16, undo_reversal=True):
        doc = ge_epi_doc(n=n, fov=fov, slab=False)
        tl = timeline.flatten(doc)
        pt = ph.make_phantom("pt", x=[x0], y=[y0], z=[0.0],
                             t1=[np.inf], t2=[np.inf], pd=[1.0])
        raw = engine.simulate(tl, pt)
        k = recon.sort_kspace(raw, undo_reversal=undo_reversal)
        return recon.reconstruct(k).magnitude

    def test_point_lands_on_expected_pixel(self):
        n, fov = 16, 0.16
        px = fov / n
        img = self.point_image(2 * px, 3 * px, n, fov)
        peak = np.unravel_index(np.argmax(img), img.shape)
        assert abs(peak[0] - (n // 2 + 3)) <= 1
        assert abs(peak[1] - (n // 2 + 2)) <= 1

    def test_translation_covariance(self):
        n, fov = 16, 0.16
        px = fov / n
        a = self.point_image(1 * px, 0.0, n, fov)
        b = self.point_image(2 * px, 0.0, n, fov)
        pa = np.unravel_index(np.argmax(a), a.shape)
        pb = np.unravel_index(np.argmax(b), b.shape)
        assert pb[1] - pa[1] == 1
        assert pb[0] == pa[0]

    def ghost_energy(self, img):
        n = img.shape[0]
        peak = np.unravel_index(np.argmax(img), img.shape)
        ghost_row = (peak[0] + n // 2) % n
        e = img ** 2
        main = e[peak[0] - 1:peak[0] + 2, peak[1] - 1:peak[1] + 2].sum()
        ghost = e[ghost_row - 1:ghost_row + 2, peak[1] - 1:peak[1] + 2].sum()
        return ghost / main

    def test_line_reversal_guards_even_odd(self):
        n, fov = 16, 0.16
        px = fov / n
        with_flip = self.point_image(2 * px, 1 * px, n, fov, undo_reversal=True)
        without = self.point_image(2 * px, 1 * px, n, fov, undo_reversal=False)
        assert self.ghost_energy(with_flip) < 0.01
        assert self.ghost_energy(without) > 0.1  # N/2 ghost appears


class TestResultFile:
    def make_result(self):
        doc = ge_epi_doc(n=8, fov=0.2, slab=False)
        tl = timeline.flatten(doc)
        pt = ph.make_phantom("pt", x=[0.01], y=[0.0], z=[0.0],
                             t1=[1.0], t2=[0.1], pd=[1.0])
        raw = engine.simulate(tl, pt)
        k = recon.sort_kspace(raw)
        img = recon.reconstruct(k)
        prov = {"sequence_sha256": "ab" * 32, "phantom": "pt", "dt_rf": 1e-6, "dt_grad": 1e-5}
        return raw, k, img, prov

    def test_round_trip(self):
        raw, k, img, prov = self.make_result()
        data = resultfile.write_result(raw, k, img, prov)
        out = resultfile.read_result(data)
        assert out["header"]["provenance"] == prov
        assert out["kspace"].shape == k.matrix.shape
        assert np.allclose(out["kspace"], k.matrix, atol=1e-5 * np.abs(k.matrix).max())
        assert np.allclose(out["magnitude"], img.magnitude,
                           atol=1e-6 * img.magnitude.max())
        assert out["raw"].shape == raw.samples.shape
        assert np.allclose(out["sample_times"], raw.sample_times)

    def test_deterministic_bytes(self):
        raw, k, img, prov = self.make_result()
        assert resultfile.write_result(raw, k, img, prov) == \
               resultfile.write_result(raw, k, img, prov)

    def test_truncation_detected(self):
        raw, k, img, prov = self.make_result()
        data = resultfile.write_result(raw, k, img, prov)
        with pytest.raises(resultfile.ResultFormatError):
            resultfile.read_result(data[:-4])

    def test_bad_version(self):
        raw, k, img, prov = self.make_result()
        data = resultfile.write_result(raw, k, img, prov)
        head, _, tail = data.partition(b"\n")
        head = head.replace(b'"mrresult_version": 1', b'"mrresult_version": 5')
        with pytest.raises(resultfile.ResultFormatError):
            resultfile.read_result(head + b"\n" + tail)
