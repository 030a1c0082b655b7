"""Pose and image primitives shared by every tracker component.

Coordinate conventions: frame pixels live on an integer lattice with pixel
(x, y) = (column, row) and intensities in [0, 1]. A target is an oriented
rectangle of PatchDims size; theta is the angle of its forward (length) axis
measured from +x, stored normalized to [-pi, pi).

The rectangle attached to a pose covers, in its own rotated frame, the
half-open box [-L/2, L/2) x [-W/2, W/2). The sampling grid places one point
per integer offset inside that box (u in {-(L//2) .. L-1-L//2}, v likewise),
so an axis-aligned, integer-centered patch degenerates to an exact pixel
window. Overlap counting uses the same box, which keeps sampling, rendering
and overlap mutually consistent.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap an angle in radians to [-pi, pi)."""
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    return (theta + math.pi) % TWO_PI - math.pi


class TargetState(NamedTuple):
    """Pose of one target: position in pixels, heading in radians."""

    x: float
    y: float
    theta: float

    @classmethod
    def make(cls, x: float, y: float, theta: float) -> "TargetState":
        """Validating constructor: requires finite fields, normalizes theta."""
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"position must be finite, got ({x!r}, {y!r})")
        return cls(float(x), float(y), normalize_angle(theta))


class PatchDims(NamedTuple):
    """Target rectangle size: length along the forward axis, width across."""

    length: int = 32
    width: int = 10

    @property
    def area(self) -> int:
        return self.length * self.width

    def validate(self) -> "PatchDims":
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"patch dims must be positive, got {self}")
        if self.length != int(self.length) or self.width != int(self.width):
            raise ValueError(f"patch dims must be integers, got {self}")
        return self


class JointParticle:
    """One joint hypothesis: the poses of all n targets, in fixed order.

    Index i refers to the same physical target in every particle and at
    every timestep.
    """

    __slots__ = ("targets",)

    def __init__(self, targets):
        targets = tuple(targets)
        if not targets:
            raise ValueError("joint particle needs at least one target")
        self.targets = targets

    def __len__(self) -> int:
        return len(self.targets)

    def __getitem__(self, i: int) -> TargetState:
        return self.targets[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, JointParticle) and self.targets == other.targets

    def __repr__(self) -> str:
        return f"JointParticle({list(self.targets)!r})"

    def to_array(self) -> np.ndarray:
        """Poses as a float64 array of shape (n, 3) with columns x, y, theta."""
        return np.array(self.targets, dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "JointParticle":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (n, 3) pose array, got shape {arr.shape}")
        return cls(TargetState(float(r[0]), float(r[1]), float(r[2])) for r in arr)


class Frame:
    """A read-only grayscale image with intensities in [0, 1].

    Pixels are stored row-major as a (height, width) float32 array; a flat
    view is kept for the samplers' gather path.
    """

    __slots__ = ("width", "height", "pixels", "_flat")

    def __init__(self, pixels):
        pixels = np.asarray(pixels, dtype=np.float32)
        if pixels.ndim != 2:
            raise ValueError(f"frame pixels must be 2-D, got shape {pixels.shape}")
        lo, hi = float(pixels.min()), float(pixels.max())
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0.0 or hi > 1.0:
            raise ValueError(f"frame intensities must lie in [0, 1], got range [{lo}, {hi}]")
        pixels = np.ascontiguousarray(pixels)
        pixels.flags.writeable = False
        self.height, self.width = pixels.shape
        self.pixels = pixels
        self._flat = pixels.reshape(-1)

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "Frame":
        return cls(np.full((height, width), value, dtype=np.float32))


# Per-dims sampling grids are tiny and reused millions of times. Sampling
# math runs in float32 (the frame dtype): coordinates and intensities are
# both well within float32's exact range, and halving the memory traffic
# matters in the per-proposal hot path.
_GRID_CACHE: dict[PatchDims, tuple[np.ndarray, np.ndarray]] = {}


def _base_grid(dims: PatchDims) -> tuple[np.ndarray, np.ndarray]:
    """Integer (u, v) offsets of the sampling grid, flattened u-major."""
    got = _GRID_CACHE.get(dims)
    if got is None:
        dims.validate()
        u = np.arange(dims.length, dtype=np.float32) - (dims.length // 2)
        v = np.arange(dims.width, dtype=np.float32) - (dims.width // 2)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        got = (np.ascontiguousarray(uu.ravel()), np.ascontiguousarray(vv.ravel()))
        _GRID_CACHE[dims] = got
    return got


def interior_reach(dims: PatchDims) -> float:
    """Center clearance inside which a patch never touches the frame edge."""
    return _half_diagonal(dims) + 2.0


def sample_patch(frame: Frame, state, dims: PatchDims, oob_fill: float = 0.0) -> np.ndarray:
    """Bilinearly sample the oriented patch grid at a pose.

    Returns a float64 vector of length dims.area, u-major. Grid points
    outside the frame's bilinear domain [0, w-1] x [0, h-1] take oob_fill.
    """
    cx, cy, th = float(state[0]), float(state[1]), float(state[2])
    reach = interior_reach(dims)
    if reach <= cx <= frame.width - 1 - reach and reach <= cy <= frame.height - 1 - reach:
        return sample_patch_interior(frame, cx, cy, th, dims).astype(np.float64)
    bu, bv = _base_grid(dims)
    c, s = np.float32(math.cos(th)), np.float32(math.sin(th))
    xs = c * bu - s * bv
    xs += np.float32(cx)
    ys = s * bu + c * bv
    ys += np.float32(cy)
    return _bilinear(frame, xs, ys, oob_fill).astype(np.float64)


def sample_patch_interior(frame: Frame, cx: float, cy: float, th: float, dims: PatchDims) -> np.ndarray:
    """Mask-free float32 sampling for poses safely inside the frame.

    Caller guarantees interior_reach clearance; see sample_patch for the
    guarded wrapper.
    """
    bu, bv = _base_grid(dims)
    c, s = np.float32(math.cos(th)), np.float32(math.sin(th))
    xs = c * bu - s * bv
    xs += np.float32(cx)
    ys = s * bu + c * bv
    ys += np.float32(cy)
    return _gather(frame, xs, ys)


def sample_patches(frame: Frame, states, dims: PatchDims, oob_fill: float = 0.0) -> np.ndarray:
    """Vectorized sample_patch for a (k, 3) pose array; returns (k, dims.area)."""
    return _sample_batch(frame, states, dims, oob_fill).astype(np.float64)


def _sample_batch(frame: Frame, states, dims: PatchDims, oob_fill: float) -> np.ndarray:
    """Batched float32 sampling used by the likelihood hot paths."""
    bu, bv = _base_grid(dims)
    states = np.asarray(states, dtype=np.float32)
    th = states[:, 2]
    c = np.cos(th)[:, None]
    s = np.sin(th)[:, None]
    xs = c * bu - s * bv
    xs += states[:, 0, None]
    ys = s * bu + c * bv
    ys += states[:, 1, None]
    reach = interior_reach(dims)
    x, y = states[:, 0], states[:, 1]
    ok = (x >= reach) & (x <= frame.width - 1 - reach) & (y >= reach) & (y <= frame.height - 1 - reach)
    if ok.all():
        return _gather(frame, xs, ys)
    if not ok.any():
        return _bilinear(frame, xs, ys, oob_fill)
    out = np.empty(xs.shape, dtype=np.float32)
    out[ok] = _gather(frame, xs[ok], ys[ok])
    edge = ~ok
    out[edge] = _bilinear(frame, xs[edge], ys[edge], oob_fill)
    return out


def _gather(frame: Frame, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear fetch with no bounds handling; coordinates must be in-frame."""
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    w = frame.width
    idx = y0.astype(np.intp)
    idx *= w
    idx += x0.astype(np.intp)
    flat = frame._flat
    i00 = flat.take(idx)
    i01 = flat.take(idx + 1)
    i10 = flat.take(idx + w)
    i11 = flat.take(idx + w + 1)
    i01 -= i00
    i01 *= fx
    i01 += i00
    i11 -= i10
    i11 *= fx
    i11 += i10
    i11 -= i01
    i11 *= fy
    i11 += i01
    return i11


def _bilinear(frame: Frame, xs: np.ndarray, ys: np.ndarray, oob_fill: float) -> np.ndarray:
    w, h = frame.width, frame.height
    inside = (xs >= 0.0) & (xs <= w - 1) & (ys >= 0.0) & (ys <= h - 1)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    np.clip(x0, 0, w - 2, out=x0)
    np.clip(y0, 0, h - 2, out=y0)
    fx = xs - x0
    fy = ys - y0
    idx = y0.astype(np.intp)
    idx *= w
    idx += x0.astype(np.intp)
    flat = frame._flat
    i00 = flat.take(idx)
    i01 = flat.take(idx + 1)
    i10 = flat.take(idx + w)
    i11 = flat.take(idx + w + 1)
    top = i00 + fx * (i01 - i00)
    bot = i10 + fx * (i11 - i10)
    out = top + fy * (bot - top)
    return np.where(inside, out, np.float32(oob_fill))


def _half_diagonal(dims: PatchDims) -> float:
    return 0.5 * math.hypot(dims.length, dims.width)


def rect_overlap_count(a, b, dims: PatchDims) -> int:
    """Number of integer pixel centers covered by both oriented rectangles.

    Symmetric in its two poses; counts on the shared half-open box
    convention, so two identical axis-aligned rectangles count exactly
    dims.area.
    """
    ax, ay, ath = float(a[0]), float(a[1]), float(a[2])
    bx, by, bth = float(b[0]), float(b[1]), float(b[2])
    reach = 2.0 * _half_diagonal(dims) + 1.0
    dx = ax - bx
    dy = ay - by
    if dx * dx + dy * dy >= reach * reach:
        return 0

    half = _half_diagonal(dims) + 1.0
    x_lo = int(math.ceil(max(ax, bx) - half))
    x_hi = int(math.floor(min(ax, bx) + half))
    y_lo = int(math.ceil(max(ay, by) - half))
    y_hi = int(math.floor(min(ay, by) + half))
    if x_hi < x_lo or y_hi < y_lo:
        return 0

    px, py = np.meshgrid(
        np.arange(x_lo, x_hi + 1, dtype=np.float64),
        np.arange(y_lo, y_hi + 1, dtype=np.float64),
        indexing="ij",
    )
    px = px.ravel()
    py = py.ravel()
    mask = _covered(px, py, ax, ay, ath, dims)
    if not mask.any():
        return 0
    mask &= _covered(px, py, bx, by, bth, dims)
    return int(np.count_nonzero(mask))


def _covered(px, py, cx, cy, th, dims: PatchDims):
    """Mask of points inside the pose's half-open rectangle box."""
    c, s = math.cos(th), math.sin(th)
    rx = px - cx
    ry = py - cy
    du = c * rx + s * ry
    dv = -s * rx + c * ry
    hl = dims.length / 2.0
    hw = dims.width / 2.0
    return (du >= -hl) & (du < hl) & (dv >= -hw) & (dv < hw)


def covered_pixel_centers(state, dims: PatchDims, width: int, height: int):
    """Integer pixel centers inside the pose's rectangle, clipped to an image.

    Returns (xs, ys) index arrays; used by the renderer and annotators.
    """
    cx, cy, th = float(state[0]), float(state[1]), float(state[2])
    half = _half_diagonal(dims) + 1.0
    x_lo = max(0, int(math.ceil(cx - half)))
    x_hi = min(width - 1, int(math.floor(cx + half)))
    y_lo = max(0, int(math.ceil(cy - half)))
    y_hi = min(height - 1, int(math.floor(cy + half)))
    if x_hi < x_lo or y_hi < y_lo:
        empty = np.empty(0, dtype=np.intp)
        return empty, empty
    px, py = np.meshgrid(
        np.arange(x_lo, x_hi + 1, dtype=np.float64),
        np.arange(y_lo, y_hi + 1, dtype=np.float64),
        indexing="ij",
    )
    px = px.ravel()
    py = py.ravel()
    mask = _covered(px, py, cx, cy, th, dims)
    return px[mask].astype(np.intp), py[mask].astype(np.intp)
