"""Seeded gradient and fractal noise primitives.

All functions here are pure and stateless: outputs depend only on the sample
coordinates and the seed, never on call order or thread count, so repeated
calls bit-match. Scalar and (N,) / (N, 3) array inputs share one vectorized
code path; per-element results are independent of how samples are batched.

Lattice gradients are drawn from a fixed table of the 12 unit cube-edge
directions, selected by a 64-bit mix hash of (lattice point, seed). There is
no permutation table, so the noise field has no period and the seed is the
only state. Raw gradient-noise output is divided by sqrt(3)/2 (its
theoretical maximum for unit gradients) and clamped to [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

_U64 = np.uint64

# splitmix64 finalizer constants
_MIX_A = _U64(0xBF58476D1CE4E5B9)
_MIX_B = _U64(0x94D049BB133111EB)
_S30, _S27, _S31 = _U64(30), _U64(27), _U64(31)

# distinct odd stream constants for the three lattice axes
_CX = _U64(0x9E3779B97F4A7C15)
_CY = _U64(0xC2B2AE3D27D4EB4F)
_CZ = _U64(0x165667B19E3779F9)

# per-octave seed decorrelation stride (large odd constant)
_OCTAVE_STRIDE = _U64(0x9E3779B97F4A7C15)

_TWELVE = _U64(12)
_ONE = _U64(1)

# 12 cube-edge directions, normalized to unit length
_GRADS = np.array(
    [
        [1, 1, 0], [-1, 1, 0], [1, -1, 0], [-1, -1, 0],
        [1, 0, 1], [-1, 0, 1], [1, 0, -1], [-1, 0, -1],
        [0, 1, 1], [0, -1, 1], [0, 1, -1], [0, -1, -1],
    ],
    dtype=np.float64,
) / math.sqrt(2.0)
_GX = _GRADS[:, 0].copy()
_GY = _GRADS[:, 1].copy()
_GZ = _GRADS[:, 2].copy()

# 1 / (sqrt(3)/2): normalizes gradient noise to [-1, 1]
_NORM = 2.0 / math.sqrt(3.0)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> _S30)) * _MIX_A
    x = (x ^ (x >> _S27)) * _MIX_B
    return x ^ (x >> _S31)


def _fade(t: np.ndarray) -> np.ndarray:
    # quintic 6t^5 - 15t^4 + 10t^3 (C2 at lattice planes)
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of one seeded fractal-noise layer.

    seed: 64-bit stream selector.
    octaves: number of summed noise layers, >= 1.
    lacunarity: frequency multiplier per octave, > 1.
    gain: amplitude multiplier per octave, in (0, 1].
    frequency: cycles per world unit of the first octave, > 0.
    amplitude: world units of peak displacement applied by consumers, >= 0.
    """

    seed: int
    octaves: int = 5
    lacunarity: float = 2.0
    gain: float = 0.5
    frequency: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgument("seed must be an unsigned 64-bit integer")
        if self.octaves < 1:
            raise InvalidArgument("octaves must be >= 1")
        if not self.lacunarity > 1.0:
            raise InvalidArgument("lacunarity must be > 1")
        if not 0.0 < self.gain <= 1.0:
            raise InvalidArgument("gain must be in (0, 1]")
        if not self.frequency > 0.0 or not math.isfinite(self.frequency):
            raise InvalidArgument("frequency must be finite and > 0")
        if self.amplitude < 0.0 or not math.isfinite(self.amplitude):
            raise InvalidArgument("amplitude must be finite and >= 0")

    def max_fbm(self) -> float:
        """Upper bound on |fbm3| for this spec: sum of gain^i over octaves."""
        return float(sum(self.gain**i for i in range(self.octaves)))


def _split_xyz(p) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Split point(s) into coordinate arrays; returns (x, y, z, was_scalar)."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (3,):
        return arr[0:1], arr[1:2], arr[2:3], True
    if arr.ndim == 2 and arr.shape[1] == 3:
        return arr[:, 0], arr[:, 1], arr[:, 2], False
    raise InvalidArgument(f"expected a 3-component point or an (N, 3) array, got shape {arr.shape}")


def _perlin3_core(x: np.ndarray, y: np.ndarray, z: np.ndarray, seed: int) -> np.ndarray:
    x0 = np.floor(x)
    y0 = np.floor(y)
    z0 = np.floor(z)
    xf = x - x0
    yf = y - y0
    zf = z - z0
    ix = x0.astype(np.int64).astype(np.uint64)
    iy = y0.astype(np.int64).astype(np.uint64)
    iz = z0.astype(np.int64).astype(np.uint64)

    s = _U64(seed)
    hx0 = _mix64(s ^ ix * _CX)
    hx1 = _mix64(s ^ (ix + _ONE) * _CX)
    hy0 = iy * _CY
    hy1 = (iy + _ONE) * _CY
    hz0 = iz * _CZ
    hz1 = (iz + _ONE) * _CZ

    xf1 = xf - 1.0
    yf1 = yf - 1.0
    zf1 = zf - 1.0

    def corner(hx, hy, hz, dx, dy, dz):
        gi = (_mix64(hx ^ hy ^ hz) % _TWELVE).astype(np.int64)
        return _GX[gi] * dx + _GY[gi] * dy + _GZ[gi] * dz

    n000 = corner(hx0, hy0, hz0, xf, yf, zf)
    n100 = corner(hx1, hy0, hz0, xf1, yf, zf)
    n010 = corner(hx0, hy1, hz0, xf, yf1, zf)
    n110 = corner(hx1, hy1, hz0, xf1, yf1, zf)
    n001 = corner(hx0, hy0, hz1, xf, yf, zf1)
    n101 = corner(hx1, hy0, hz1, xf1, yf, zf1)
    n011 = corner(hx0, hy1, hz1, xf, yf1, zf1)
    n111 = corner(hx1, hy1, hz1, xf1, yf1, zf1)

    u = _fade(xf)
    v = _fade(yf)
    w = _fade(zf)
    nx00 = n000 + u * (n100 - n000)
    nx10 = n010 + u * (n110 - n010)
    nx01 = n001 + u * (n101 - n001)
    nx11 = n011 + u * (n111 - n011)
    nxy0 = nx00 + v * (nx10 - nx00)
    nxy1 = nx01 + v * (nx11 - nx01)
    val = (nxy0 + w * (nxy1 - nxy0)) * _NORM
    return np.clip(val, -1.0, 1.0)


def perlin3(p, seed: int):
    """Classic gradient noise at point(s) p, in [-1, 1]; exactly 0 on the integer lattice.

    Accepts a single 3-component point (returns float) or an (N, 3) array
    (returns an (N,) array). Raises InvalidArgument on non-finite components.
    """
    x, y, z, scalar = _split_xyz(p)
    if not (np.isfinite(x).all() and np.isfinite(y).all() and np.isfinite(z).all()):
        raise InvalidArgument("point components must be finite")
    out = _perlin3_core(x, y, z, seed)
    return float(out[0]) if scalar else out


def _fbm3_core(x: np.ndarray, y: np.ndarray, z: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    total = np.zeros_like(x)
    freq = spec.frequency
    amp = 1.0
    for i in range(spec.octaves):
        octave_seed = int(spec.seed) ^ ((i * int(_OCTAVE_STRIDE)) & 0xFFFFFFFFFFFFFFFF)
        total += amp * _perlin3_core(x * freq, y * freq, z * freq, octave_seed)
        freq *= spec.lacunarity
        amp *= spec.gain
    return total


def fbm3(p, spec: NoiseSpec):
    """Fractal sum of perlin3 octaves; |result| <= spec.max_fbm().

    Octave i samples at p * frequency * lacunarity^i with weight gain^i and a
    per-octave decorrelated seed (octave 0 uses spec.seed unchanged). The
    spec's amplitude field is NOT applied here; consumers scale by it.
    """
    x, y, z, scalar = _split_xyz(p)
    if not (np.isfinite(x).all() and np.isfinite(y).all() and np.isfinite(z).all()):
        raise InvalidArgument("point components must be finite")
    out = _fbm3_core(x, y, z, spec)
    return float(out[0]) if scalar else out


def tiled_detail(p_world, spec: NoiseSpec):
    """Signed detail displacement (world units) at world point(s).

    Anchored purely in world coordinates: any two patches evaluating the same
    world point obtain bit-identical values, which is what makes finest-level
    displacement seam-free.
    """
    x, y, z, scalar = _split_xyz(p_world)
    if not (np.isfinite(x).all() and np.isfinite(y).all() and np.isfinite(z).all()):
        raise InvalidArgument("point components must be finite")
    out = spec.amplitude * _fbm3_core(x, y, z, spec)
    return float(out[0]) if scalar else out


# --- diamond-square midpoint displacement ---

_DS_K1 = _U64(0xD6E8FEB86659FD93)
_DS_K2 = _U64(0xA5A5A5A5A5A5A5A5)  # odd
_DS_K3 = _U64(0x27D4EB2F165667C5)


def _ds_offsets(step: int, rows: np.ndarray, cols: np.ndarray, seed: int) -> np.ndarray:
    """Uniform [-1, 1) offsets keyed on (step, cell coordinates, seed).

    Counter-based so values are independent of evaluation order.
    """
    step_h = _U64((step * int(_DS_K1)) & 0xFFFFFFFFFFFFFFFF)
    h = _mix64(
        _U64(seed)
        ^ _mix64(step_h ^ rows.astype(np.uint64) * _DS_K2 ^ cols.astype(np.uint64) * _DS_K3)
    )
    return (h >> _U64(11)).astype(np.float64) * (2.0**-52) - 1.0


def diamond_square(
    size_exponent: int,
    corner_values,
    roughness: float,
    seed: int,
    horizontal_extent: float = 1.0,
    vertical_scale: float = 1.0,
):
    """Midpoint-displacement heightfield of (2^n+1) x (2^n+1) cells.

    At refinement step s (1-based) every new midpoint receives the average of
    its already-placed neighbors plus a uniform random offset scaled by
    roughness * 2^-s. Border midpoints average only their two neighbors along
    the border, so roughness=0 reproduces exact bilinear interpolation of the
    four corners. Corners are copied verbatim and never perturbed.

    corner_values order: (top-left, top-right, bottom-left, bottom-right),
    i.e. cells [0,0], [0,-1], [-1,0], [-1,-1].
    """
    from .heightfield import HeightField

    n = int(size_exponent)
    if not 1 <= n <= 12:
        raise InvalidArgument("size_exponent must be in [1, 12]")
    corners = [float(c) for c in corner_values]
    if len(corners) != 4 or not all(math.isfinite(c) for c in corners):
        raise InvalidArgument("corner_values must be 4 finite reals")
    if roughness < 0.0 or not math.isfinite(roughness):
        raise InvalidArgument("roughness must be finite and >= 0")

    size = (1 << n) + 1
    grid = np.zeros((size, size), dtype=np.float64)
    grid[0, 0], grid[0, -1], grid[-1, 0], grid[-1, -1] = corners

    span = size - 1
    for step in range(1, n + 1):
        w = span >> (step - 1)
        half = w >> 1
        scale = roughness * (2.0**-step)

        # diamond step: square centers get the 4-corner average
        rr, cc = np.meshgrid(
            np.arange(half, size, w), np.arange(half, size, w), indexing="ij"
        )
        avg = (
            grid[rr - half, cc - half]
            + grid[rr - half, cc + half]
            + grid[rr + half, cc - half]
            + grid[rr + half, cc + half]
        ) * 0.25
        grid[rr, cc] = avg + scale * _ds_offsets(step, rr, cc, seed)

        # square step: edge midpoints. Interior points average their 4 diamond
        # neighbors; border points only the 2 neighbors along the border.
        ra, ca = np.meshgrid(
            np.arange(half, size, w), np.arange(0, size, w), indexing="ij"
        )
        rb, cb = np.meshgrid(
            np.arange(0, size, w), np.arange(half, size, w), indexing="ij"
        )
        rs = np.concatenate([ra.ravel(), rb.ravel()])
        cs = np.concatenate([ca.ravel(), cb.ravel()])
        if rs.size:
            acc = np.zeros(rs.size, dtype=np.float64)
            cnt = np.zeros(rs.size, dtype=np.float64)
            on_border = (rs == 0) | (rs == span) | (cs == 0) | (cs == span)
            for dr, dc in ((-half, 0), (half, 0), (0, -half), (0, half)):
                nr = rs + dr
                nc = cs + dc
                inside = (nr >= 0) & (nr <= span) & (nc >= 0) & (nc <= span)
                # border points use only in-border neighbors
                along = np.where(
                    (rs == 0) | (rs == span), dr == 0, np.where((cs == 0) | (cs == span), dc == 0, True)
                )
                use = inside & (~on_border | along)
                acc[use] += grid[nr[use], nc[use]]
                cnt[use] += 1.0
            grid[rs, cs] = acc / cnt + scale * _ds_offsets(step, rs, cs, seed)

    grid.setflags(write=False)
    return HeightField(
        cells=grid, horizontal_extent=horizontal_extent, vertical_scale=vertical_scale
    )
