"""Spin-ensemble phantoms: static and flowing, with slice-viewer geometry.

A phantom stores its spins as float32 columns (x, y, z, t1, t2, pd,
delta_omega, motion_id) plus a table of motion paths and optional voxel-grid
metadata for the orthogonal slice viewer.  The file format is a one-line
JSON header followed by little-endian float32 columnar payloads, so round
trips are lossless.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from mrseq.constants import GAMMA_BAR
from mrseq.timeline import EventTimeline, rf_bandwidth

__all__ = [
    "Spin",
    "MotionPath",
    "VoxelGrid",
    "Phantom",
    "SlicePlane",
    "PhantomFormatError",
    "position_at",
    "wrap_events",
    "slice_from_sequence",
    "orthogonal_slices",
    "load_phantom",
    "save_phantom",
    "make_disc",
    "make_shepp",
    "make_flow_cylinder",
    "builtin_phantoms",
]

PHANTOM_VERSION = 1

_COLUMNS = ("x", "y", "z", "t1", "t2", "pd", "delta_omega", "motion_id")

PLANES = {"axial": 2, "coronal": 1, "sagittal": 0}  # slicing axis index


class PhantomFormatError(Exception):
    pass


@dataclass(frozen=True)
class Spin:
    """One spin: position [m], T1/T2 [s], proton density, off-resonance [rad/s]."""

    r0: tuple[float, float, float]
    t1: float
    t2: float
    pd: float = 1.0
    delta_omega: float = 0.0
    motion_id: int = -1  # index into the phantom's motion table; -1 = static

    def __post_init__(self):
        if not (self.t2 > 0 and self.t1 >= self.t2):
            raise ValueError("spin needs t1 >= t2 > 0")
        if self.pd < 0:
            raise ValueError("spin needs pd >= 0")


@dataclass(frozen=True)
class MotionPath:
    """Constant-velocity flow wrapped periodically into an axis-aligned box.

    When ``reset_on_wrap`` is set, the simulator resets the spin's
    magnetization to equilibrium whenever the spin re-enters the region
    (fresh fully-relaxed material flowing in).
    """

    v: tuple[float, float, float]  # m/s
    region_min: tuple[float, float, float]  # m
    region_max: tuple[float, float, float]  # m
    reset_on_wrap: bool = False
    kind: str = "constant_velocity"

    def __post_init__(self):
        for ax in range(3):
            if self.v[ax] != 0.0 and not self.region_max[ax] > self.region_min[ax]:
                raise ValueError(f"motion region needs positive extent on moving axis {ax}")


@dataclass
class VoxelGrid:
    """Voxel metadata for the slice viewer; volumes are float32 [nx, ny, nz]."""

    origin: tuple[float, float, float]  # center of voxel [0,0,0], meters
    spacing: tuple[float, float, float]  # meters
    dims: tuple[int, int, int]
    pd: np.ndarray
    t1: np.ndarray
    t2: np.ndarray

    def check(self) -> None:
        for name in ("pd", "t1", "t2"):
            vol = getattr(self, name)
            if tuple(vol.shape) != tuple(self.dims):
                raise ValueError(f"grid volume {name} has shape {vol.shape}, expected {self.dims}")


@dataclass
class Phantom:
    name: str
    columns: dict[str, np.ndarray]  # float32 arrays, keys = _COLUMNS
    motion: list[MotionPath] = field(default_factory=list)
    grid: VoxelGrid | None = None

    @property
    def n_spins(self) -> int:
        return int(self.columns["x"].shape[0])

    def spin(self, i: int) -> Spin:
        c = self.columns
        return Spin(
            (float(c["x"][i]), float(c["y"][i]), float(c["z"][i])),
            float(c["t1"][i]), float(c["t2"][i]), float(c["pd"][i]),
            float(c["delta_omega"][i]), int(c["motion_id"][i]),
        )

    def check(self) -> None:
        n = self.n_spins
        for key in _COLUMNS:
            if key not in self.columns:
                raise ValueError(f"missing column {key}")
            if self.columns[key].shape != (n,):
                raise ValueError(f"column {key} has wrong length")
        ids = self.columns["motion_id"]
        if ids.size and int(ids.max(initial=-1)) >= len(self.motion):
            raise ValueError("motion_id beyond motion table")
        if self.grid is not None:
            self.grid.check()


def make_phantom(name: str, *, x, y, z, t1, t2, pd, delta_omega=None, motion_id=None,
                 motion: list[MotionPath] | None = None, grid: VoxelGrid | None = None) -> Phantom:
    """Assemble a phantom from per-spin sequences, canonicalized to float32."""
    n = len(x)
    cols = {
        "x": np.asarray(x, dtype=np.float32),
        "y": np.asarray(y, dtype=np.float32),
        "z": np.asarray(z, dtype=np.float32),
        "t1": np.asarray(t1, dtype=np.float32),
        "t2": np.asarray(t2, dtype=np.float32),
        "pd": np.asarray(pd, dtype=np.float32),
        "delta_omega": np.asarray(
            delta_omega if delta_omega is not None else np.zeros(n), dtype=np.float32),
        "motion_id": np.asarray(
            motion_id if motion_id is not None else np.full(n, -1), dtype=np.float32),
    }
    ph = Phantom(name, cols, list(motion or []), grid)
    ph.check()
    return ph


# ---------------------------------------------------------------------------
# Motion


def _wrap_into(value, lo: float, hi: float):
    return lo + np.mod(value - lo, hi - lo)


def position_at(spin: Spin, motion: list[MotionPath], t: float) -> tuple[float, float, float]:
    """Position of one spin at time ``t``; constant-velocity paths wrap into their region."""
    if spin.motion_id < 0:
        return spin.r0
    path = motion[spin.motion_id]
    out = []
    for ax in range(3):
        p = spin.r0[ax] + path.v[ax] * t
        if path.v[ax] != 0.0:
            p = float(_wrap_into(p, path.region_min[ax], path.region_max[ax]))
        out.append(p)
    return tuple(out)


def positions_at(phantom: Phantom, t: float) -> np.ndarray:
    """(n, 3) float64 positions of all spins at time ``t``."""
    c = phantom.columns
    r = np.stack([c["x"], c["y"], c["z"]], axis=1).astype(np.float64)
    ids = c["motion_id"].astype(np.int64)
    for mid, path in enumerate(phantom.motion):
        sel = ids == mid
        if not sel.any():
            continue
        for ax in range(3):
            if path.v[ax] == 0.0:
                continue
            p = r[sel, ax] + path.v[ax] * t
            r[sel, ax] = _wrap_into(p, path.region_min[ax], path.region_max[ax])
    return r


def wrap_events(spin: Spin, motion: list[MotionPath], t_interval: tuple[float, float]) -> list[float]:
    """Times within (t0, t1] at which the spin wraps around its flow region."""
    t0, t1 = t_interval
    if t1 <= t0 or spin.motion_id < 0:
        return []
    path = motion[spin.motion_id]
    times: list[float] = []
    for ax in range(3):
        v = path.v[ax]
        if v == 0.0:
            continue
        lo, hi = path.region_min[ax], path.region_max[ax]
        span = hi - lo
        # wrap when (r0 + v*t - lo)/span crosses an integer
        u0 = (spin.r0[ax] + v * t0 - lo) / span
        u1 = (spin.r0[ax] + v * t1 - lo) / span
        if v > 0:
            ks = range(math.floor(u0) + 1, math.floor(u1) + 1)
        else:
            ks = range(math.ceil(u0) - 1, math.ceil(u1) - 1, -1)
        for k in ks:
            t_k = (k * span + lo - spin.r0[ax]) / v
            if t0 < t_k <= t1:
                times.append(t_k)
    return sorted(times)


# ---------------------------------------------------------------------------
# Slice geometry


@dataclass(frozen=True)
class SlicePlane:
    axis: str  # "x" | "y" | "z"
    center_offset: float  # m
    thickness: float  # m

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError("slice thickness must be positive")


def slice_from_sequence(tl: EventTimeline) -> SlicePlane | None:
    """Slice selected by the first RF event played under a single-axis gradient.

    center = freq_offset / (gamma_bar * G); thickness = BW / (gamma_bar * |G|).
    Returns None when the sequence has no slice-selective RF.
    """
    for ev in tl.events:
        if ev.rf is None:
            continue
        active = [ai for ai in range(3) if ev.g_start[ai] != 0.0 or ev.g_end[ai] != 0.0]
        if len(active) != 1:
            continue
        ai = active[0]
        if ev.g_start[ai] != ev.g_end[ai]:
            continue  # gradient must be flat during the pulse
        g = ev.g_start[ai]
        bw = rf_bandwidth(ev.rf.shape, ev.rf.lobes, ev.duration)
        return SlicePlane(
            axis="xyz"[ai],
            center_offset=ev.rf.freq_offset / (GAMMA_BAR * g),
            thickness=bw / (GAMMA_BAR * abs(g)),
        )
    return None


def orthogonal_slices(phantom: Phantom, plane: str, index: int,
                      quantity: str = "pd") -> tuple[np.ndarray, dict]:
    """Extract a 2D grid slice (row-major) plus physical extent metadata.

    ``plane`` is axial (z), coronal (y) or sagittal (x); ``quantity`` one of
    pd / t1 / t2.  Raises PhantomFormatError when the phantom has no grid.
    """
    if phantom.grid is None:
        raise PhantomFormatError(f"phantom {phantom.name!r} has no voxel grid")
    if plane not in PLANES:
        raise ValueError(f"unknown plane {plane!r}; expected one of {sorted(PLANES)}")
    if quantity not in ("pd", "t1", "t2"):
        raise ValueError(f"unknown quantity {quantity!r}")
    grid = phantom.grid
    axis = PLANES[plane]
    if not 0 <= index < grid.dims[axis]:
        raise IndexError(f"slice index {index} out of range 0..{grid.dims[axis] - 1}")
    vol = getattr(grid, quantity)
    if plane == "axial":
        img = vol[:, :, index].T  # rows = y, cols = x
        axes = (0, 1)
    elif plane == "coronal":
        img = vol[:, index, :].T  # rows = z, cols = x
        axes = (0, 2)
    else:
        img = vol[index, :, :].T  # rows = z, cols = y
        axes = (1, 2)
    extent = {
        "plane": plane,
        "index": index,
        "quantity": quantity,
        "col_axis": "xyz"[axes[0]],
        "row_axis": "xyz"[axes[1]],
        "col_min": grid.origin[axes[0]] - grid.spacing[axes[0]] / 2,
        "col_max": grid.origin[axes[0]] + (grid.dims[axes[0]] - 0.5) * grid.spacing[axes[0]],
        "row_min": grid.origin[axes[1]] - grid.spacing[axes[1]] / 2,
        "row_max": grid.origin[axes[1]] + (grid.dims[axes[1]] - 0.5) * grid.spacing[axes[1]],
    }
    return np.ascontiguousarray(img), extent


# ---------------------------------------------------------------------------
# File format


def save_phantom(phantom: Phantom) -> bytes:
    """Serialize: one JSON header line, then float32 LE columns, then grid volumes."""
    phantom.check()
    header = {
        "mrphantom_version": PHANTOM_VERSION,
        "name": phantom.name,
        "n_spins": phantom.n_spins,
        "columns": list(_COLUMNS),
        "motion": [
            {
                "kind": m.kind,
                "v": list(m.v),
                "region_min": list(m.region_min),
                "region_max": list(m.region_max),
                "reset_on_wrap": m.reset_on_wrap,
            }
            for m in phantom.motion
        ],
        "grid": None,
    }
    if phantom.grid is not None:
        header["grid"] = {
            "origin": list(phantom.grid.origin),
            "spacing": list(phantom.grid.spacing),
            "dims": list(phantom.grid.dims),
        }
    buf = io.BytesIO()
    buf.write(json.dumps(header, sort_keys=True).encode("utf-8"))
    buf.write(b"\n")
    for key in _COLUMNS:
        buf.write(phantom.columns[key].astype("<f4").tobytes())
    if phantom.grid is not None:
        for name in ("pd", "t1", "t2"):
            vol = getattr(phantom.grid, name)
            buf.write(np.ascontiguousarray(vol, dtype="<f4").tobytes())
    return buf.getvalue()


def load_phantom(data: bytes) -> Phantom:
    nl = data.find(b"\n")
    if nl < 0:
        raise PhantomFormatError("missing header line")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise PhantomFormatError(f"bad header: {e}") from e
    if header.get("mrphantom_version") != PHANTOM_VERSION:
        raise PhantomFormatError(
            f"unsupported phantom version {header.get('mrphantom_version')!r}")
    n = int(header["n_spins"])
    if header.get("columns") != list(_COLUMNS):
        raise PhantomFormatError("unexpected column layout")
    payload = data[nl + 1:]
    need = len(_COLUMNS) * n * 4
    grid_meta = header.get("grid")
    grid_n = 0
    if grid_meta is not None:
        dims = tuple(int(d) for d in grid_meta["dims"])
        grid_n = 3 * dims[0] * dims[1] * dims[2] * 4
    if len(payload) != need + grid_n:
        raise PhantomFormatError(
            f"truncated payload: expected {need + grid_n} bytes, got {len(payload)}")
    cols = {}
    off = 0
    for key in _COLUMNS:
        cols[key] = np.frombuffer(payload, dtype="<f4", count=n, offset=off).copy()
        off += n * 4
    motion = [
        MotionPath(
            v=tuple(m["v"]),
            region_min=tuple(m["region_min"]),
            region_max=tuple(m["region_max"]),
            reset_on_wrap=bool(m["reset_on_wrap"]),
            kind=m.get("kind", "constant_velocity"),
        )
        for m in header.get("motion", [])
    ]
    grid = None
    if grid_meta is not None:
        dims = tuple(int(d) for d in grid_meta["dims"])
        count = dims[0] * dims[1] * dims[2]
        vols = []
        for _ in range(3):
            vols.append(
                np.frombuffer(payload, dtype="<f4", count=count, offset=off).reshape(dims).copy())
            off += count * 4
        grid = VoxelGrid(tuple(grid_meta["origin"]), tuple(grid_meta["spacing"]), dims,
                         *vols)
    ph = Phantom(header["name"], cols, motion, grid)
    ph.check()
    return ph


# ---------------------------------------------------------------------------
# Built-in phantoms


def _grid_from_maps(x0: float, spacing: float, pd2d, t12d, t22d) -> VoxelGrid:
    nx, ny = pd2d.shape
    to3 = lambda a: np.ascontiguousarray(a[:, :, None], dtype=np.float32)
    return VoxelGrid(
        origin=(x0, x0, 0.0),
        spacing=(spacing, spacing, spacing),
        dims=(nx, ny, 1),
        pd=to3(pd2d), t1=to3(t12d), t2=to3(t22d),
    )


def make_disc(radius: float = 0.08, inner_radius: float = 0.04, spacing: float = 1e-3,
              outer=(0.8, 0.8, 0.08), inner=(1.0, 0.4, 0.04)) -> Phantom:
    """Two-tissue disc in the z=0 plane.

    ``outer``/``inner`` are (pd, t1, t2) of the annulus and the central disc.
    Default spacing yields ~20k spins inside the outer radius.
    """
    n_side = int(round(2 * radius / spacing)) + 1
    coords = (np.arange(n_side) - (n_side - 1) / 2) * spacing
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    rr = np.hypot(xx, yy)
    mask = rr <= radius
    inner_mask = rr <= inner_radius
    pd2d = np.where(mask, np.where(inner_mask, inner[0], outer[0]), 0.0)
    t12d = np.where(mask, np.where(inner_mask, inner[1], outer[1]), 0.0)
    t22d = np.where(mask, np.where(inner_mask, inner[2], outer[2]), 0.0)
    sel = mask.ravel()
    return make_phantom(
        "disc2d",
        x=xx.ravel()[sel], y=yy.ravel()[sel], z=np.zeros(sel.sum()),
        t1=t12d.ravel()[sel], t2=t22d.ravel()[sel], pd=pd2d.ravel()[sel],
        grid=_grid_from_maps(float(coords[0]), spacing, pd2d, t12d, t22d),
    )


# Shepp-Logan-style ellipse table: (intensity delta, a, b, x0, y0, phi_deg).
_SHEPP_ELLIPSES = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
]


def make_shepp(size: float = 0.2, spacing: float = 2e-3) -> Phantom:
    """Shepp-Logan-style PD/T1/T2 map in the z=0 plane, scaled to ``size`` meters."""
    n_side = int(round(size / spacing)) + 1
    coords = (np.arange(n_side) - (n_side - 1) / 2) * spacing
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    u = xx / (size / 2)
    v = yy / (size / 2)
    pd2d = np.zeros_like(xx)
    for inten, a, b, x0, y0, phi in _SHEPP_ELLIPSES:
        ang = math.radians(phi)
        ur = (u - x0) * math.cos(ang) + (v - y0) * math.sin(ang)
        vr = -(u - x0) * math.sin(ang) + (v - y0) * math.cos(ang)
        pd2d += inten * ((ur / a) ** 2 + (vr / b) ** 2 <= 1.0)
    pd2d = np.clip(pd2d, 0.0, None)
    # map intensity classes to plausible tissue relaxation times
    t12d = np.where(pd2d > 0, 0.3 + 2.0 * pd2d, 0.0)
    t22d = np.where(pd2d > 0, 0.04 + 0.15 * pd2d, 0.0)
    sel = (pd2d > 0).ravel()
    return make_phantom(
        "shepp2d",
        x=xx.ravel()[sel], y=yy.ravel()[sel], z=np.zeros(sel.sum()),
        t1=t12d.ravel()[sel], t2=t22d.ravel()[sel], pd=pd2d.ravel()[sel],
        grid=_grid_from_maps(float(coords[0]), spacing, pd2d, t12d, t22d),
    )


def make_flow_cylinder(lumen_radius: float = 0.015, wall_radius: float = 0.025,
                       length: float = 0.04, spacing: float = 1.75e-3,
                       dz: float = 2e-3, velocity: float = 0.2,
                       tissue=(1.0, 0.8, 0.08), wall_extent: float = 0.016) -> Phantom:
    """Cylinder along z with static wall and fluid flowing inside at ``velocity`` m/s.

    Wall and lumen share identical (pd, t1, t2) so images show no intrinsic
    tissue contrast; only inflow of fresh spins can brighten the lumen.  Lumen
    spins wrap within z in [-length/2, length/2] and reset to equilibrium on
    re-entry.  Wall spins are limited to |z| <= wall_extent/2 to keep the spin
    count down; slab-selective sequences must excite within that range.
    """
    pd0, t1, t2 = tissue
    coords = np.arange(-wall_radius, wall_radius + spacing / 2, spacing)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    rr = np.hypot(xx, yy).ravel()
    xf, yf = xx.ravel(), yy.ravel()
    lumen_sel = rr <= lumen_radius
    wall_sel = (rr > lumen_radius) & (rr <= wall_radius)

    xs, ys, zs, mids = [], [], [], []
    z_lumen = np.arange(-length / 2 + dz / 2, length / 2, dz)
    for z in z_lumen:
        xs.append(xf[lumen_sel]); ys.append(yf[lumen_sel])
        zs.append(np.full(lumen_sel.sum(), z)); mids.append(np.zeros(lumen_sel.sum()))
    z_wall = z_lumen[np.abs(z_lumen) <= wall_extent / 2]
    for z in z_wall:
        xs.append(xf[wall_sel]); ys.append(yf[wall_sel])
        zs.append(np.full(wall_sel.sum(), z)); mids.append(np.full(wall_sel.sum(), -1))
    x = np.concatenate(xs); y = np.concatenate(ys); z = np.concatenate(zs)
    mid = np.concatenate(mids)
    n = x.size

    motion = [MotionPath(
        v=(0.0, 0.0, velocity),
        region_min=(-wall_radius, -wall_radius, -length / 2),
        region_max=(wall_radius, wall_radius, length / 2),
        reset_on_wrap=True,
    )]

    # voxel grid for the slice viewer (rasterized pd/t1/t2, z from lumen planes)
    n_side = coords.size
    pd2d = np.where((np.hypot(xx, yy) <= wall_radius), pd0, 0.0)
    t12d = np.where(pd2d > 0, t1, 0.0)
    t22d = np.where(pd2d > 0, t2, 0.0)
    to3 = lambda a: np.ascontiguousarray(
        np.repeat(a[:, :, None], z_lumen.size, axis=2), dtype=np.float32)
    grid = VoxelGrid(
        origin=(float(coords[0]), float(coords[0]), float(z_lumen[0])),
        spacing=(spacing, spacing, dz),
        dims=(n_side, n_side, z_lumen.size),
        pd=to3(pd2d), t1=to3(t12d), t2=to3(t22d),
    )
    return make_phantom(
        "flow_cylinder",
        x=x, y=y, z=z,
        t1=np.full(n, t1), t2=np.full(n, t2), pd=np.full(n, pd0),
        motion_id=mid, motion=motion, grid=grid,
    )


def builtin_phantoms() -> dict:
    """Factories for the phantoms shipped with the package, keyed by id."""
    return {"disc2d": make_disc, "shepp2d": make_shepp, "flow_cylinder": make_flow_cylinder}
