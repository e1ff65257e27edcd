"""Cartesian/EPI k-space sorting and centered inverse-FFT reconstruction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mrseq.engine import RawAcquisition

__all__ = ["KSpace", "ImageResult", "IncompleteKSpaceError", "sort_kspace", "reconstruct"]


class IncompleteKSpaceError(Exception):
    def __init__(self, missing: list[int], duplicate: list[int], message: str = ""):
        self.missing = missing
        self.duplicate = duplicate
        parts = []
        if message:
            parts.append(message)
        if missing:
            parts.append(f"missing line tags {missing}")
        if duplicate:
            parts.append(f"duplicate line tags {duplicate}")
        super().__init__("; ".join(parts) or "incomplete k-space")


@dataclass
class KSpace:
    """Line-sorted k-space; row r holds line_tag r, reversed lines already flipped.

    Row r samples ky = (r - n/2)/fov; column c samples kx = (c + 1/2 - n/2)/fov.
    """

    matrix: np.ndarray  # complex128 (n_lines, samples_per_line)
    fov: float | None = None

    @property
    def dk(self) -> float | None:
        return 1.0 / self.fov if self.fov else None


@dataclass
class ImageResult:
    magnitude: np.ndarray  # float64 >= 0, rows = phase axis, cols = read axis
    phase: np.ndarray  # float64 in (-pi, pi]
    fov: float | None = None
    provenance: dict | None = None


def sort_kspace(raw: RawAcquisition, *, undo_reversal: bool = True) -> KSpace:
    """Place acquired lines into a k-space matrix by line tag.

    Lines flagged as reversed (acquired under a negative read gradient) are
    flipped back to ascending-k sample order unless ``undo_reversal`` is off.
    Raises IncompleteKSpaceError when tags do not form a permutation of
    0..n_lines-1 or line lengths differ.
    """
    layout = raw.layout
    n_lines = layout.n_lines
    if n_lines == 0:
        raise IncompleteKSpaceError([], [], "acquisition contains no ADC events")
    if not layout.uniform:
        raise IncompleteKSpaceError([], [], "ADC events have differing sample counts")
    n_samp = layout.samples_per_line
    tags = [int(t) for t in raw.line_tags]
    expected = set(range(n_lines))
    seen: set[int] = set()
    duplicate = sorted({t for t in tags if t in seen or seen.add(t)})
    missing = sorted(expected - set(tags))
    stray = sorted(set(tags) - expected)
    if duplicate or missing or stray:
        raise IncompleteKSpaceError(missing + stray, duplicate)
    matrix = np.zeros((n_lines, n_samp), dtype=np.complex128)
    for i, tag in enumerate(tags):
        line = raw.samples[i * n_samp:(i + 1) * n_samp]
        if undo_reversal and bool(layout.reversed_lines[i]):
            line = line[::-1]
        matrix[tag, :] = line
    return KSpace(matrix, fov=layout.fov)


def reconstruct(k: KSpace, provenance: dict | None = None) -> ImageResult:
    """Centered inverse 2D DFT; DC lands at the matrix center."""
    img = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k.matrix)))
    return ImageResult(
        magnitude=np.abs(img),
        phase=np.angle(img),
        fov=k.fov,
        provenance=provenance,
    )
