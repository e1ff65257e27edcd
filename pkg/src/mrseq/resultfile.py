"""Simulation result file: one JSON header line + little-endian float32 arrays.

Payload order: raw samples (re/im interleaved), sorted k-space (re/im
interleaved), magnitude image, phase image.  The header carries the
acquisition layout and provenance (sequence hash, phantom name, step sizes),
never timestamps, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import io
import json

import numpy as np

from mrseq.engine import RawAcquisition
from mrseq.recon import ImageResult, KSpace

__all__ = ["ResultFormatError", "write_result", "read_result", "sequence_hash"]

RESULT_VERSION = 1


class ResultFormatError(Exception):
    pass


def sequence_hash(doc_bytes: bytes) -> str:
    return hashlib.sha256(doc_bytes).hexdigest()


def _interleave(z: np.ndarray) -> np.ndarray:
    out = np.empty(z.size * 2, dtype="<f4")
    out[0::2] = z.real.ravel().astype("<f4")
    out[1::2] = z.imag.ravel().astype("<f4")
    return out


def _deinterleave(flat: np.ndarray, shape) -> np.ndarray:
    z = flat[0::2].astype(np.float64) + 1j * flat[1::2].astype(np.float64)
    return z.reshape(shape)


def write_result(raw: RawAcquisition, kspace: KSpace, image: ImageResult,
                 provenance: dict) -> bytes:
    n_lines, n_samp = kspace.matrix.shape
    header = {
        "mrresult_version": RESULT_VERSION,
        "layout": raw.layout.to_dict(),
        "n_raw_samples": int(raw.samples.size),
        "image_shape": [int(n_lines), int(n_samp)],
        "provenance": provenance,
    }
    buf = io.BytesIO()
    buf.write(json.dumps(header, sort_keys=True).encode("utf-8"))
    buf.write(b"\n")
    buf.write(_interleave(raw.samples).tobytes())
    buf.write(np.asarray(raw.sample_times, dtype="<f8").tobytes())
    buf.write(_interleave(kspace.matrix).tobytes())
    buf.write(np.ascontiguousarray(image.magnitude, dtype="<f4").tobytes())
    buf.write(np.ascontiguousarray(image.phase, dtype="<f4").tobytes())
    return buf.getvalue()


def read_result(data: bytes) -> dict:
    """Parse a result file into {header, raw, sample_times, kspace, magnitude, phase}."""
    nl = data.find(b"\n")
    if nl < 0:
        raise ResultFormatError("missing header line")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ResultFormatError(f"bad header: {e}") from e
    if header.get("mrresult_version") != RESULT_VERSION:
        raise ResultFormatError(f"unsupported version {header.get('mrresult_version')!r}")
    n_raw = int(header["n_raw_samples"])
    n_lines, n_samp = (int(v) for v in header["image_shape"])
    need = n_raw * 8 + n_raw * 8 + n_lines * n_samp * 8 + 2 * n_lines * n_samp * 4
    payload = data[nl + 1:]
    if len(payload) != need:
        raise ResultFormatError(f"truncated payload: expected {need} bytes, got {len(payload)}")
    off = 0

    def take(count: int, dtype: str) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr.copy()

    raw = _deinterleave(take(2 * n_raw, "<f4"), (n_raw,))
    times = take(n_raw, "<f8")
    kspace = _deinterleave(take(2 * n_lines * n_samp, "<f4"), (n_lines, n_samp))
    magnitude = take(n_lines * n_samp, "<f4").reshape((n_lines, n_samp)).astype(np.float64)
    phase = take(n_lines * n_samp, "<f4").reshape((n_lines, n_samp)).astype(np.float64)
    return {
        "header": header,
        "raw": raw,
        "sample_times": times,
        "kspace": kspace,
        "magnitude": magnitude,
        "phase": phase,
    }
