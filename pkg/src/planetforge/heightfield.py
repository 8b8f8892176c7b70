"""Raster DEM container, procedural generation, bilinear sampling, 16-bit IO.

Sampling convention (used everywhere in the package): u=0 maps to the center
of the first cell of a row, u=1 to the center of the last, so a cell is a
node and sample_bilinear(u=i/(width-1)) returns the stored value exactly.

Files are 16-bit grayscale (PGM P5 big-endian or PNG), min elevation at 0 and
max at 65535, top row first. Physical units travel in a `<name>.meta.json`
sidecar {min, max, horizontal_extent, vertical_scale} so import is invertible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import HeightmapFormatError, InvalidArgument, OutOfDomain
from .noise import NoiseSpec, _fbm3_core, diamond_square
from .parallel import parallel_map

_MAX_SIZE = 8193
_ROW_CHUNK = 256


@dataclass(frozen=True)
class HeightField:
    """Row-major elevation grid with physical extent.

    cells[i, j] is the elevation (stored units) at row i, column j; row 0 is
    the top row of the exported image. World elevation = cells * vertical_scale.
    horizontal_extent is the world span of the grid in both x and y.
    """

    cells: np.ndarray
    horizontal_extent: float
    vertical_scale: float = 1.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.cells, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
            raise InvalidArgument("cells must be a 2D grid at least 2x2")
        if not np.isfinite(arr).all():
            raise InvalidArgument("cells must be finite")
        if not (self.horizontal_extent > 0 and math.isfinite(self.horizontal_extent)):
            raise InvalidArgument("horizontal_extent must be finite and > 0")
        if not (self.vertical_scale > 0 and math.isfinite(self.vertical_scale)):
            raise InvalidArgument("vertical_scale must be finite and > 0")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]


@dataclass(frozen=True)
class DiamondSquareParams:
    """Inputs for the midpoint-displacement generator."""

    size_exponent: int
    corners: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    roughness: float = 1.0
    seed: int = 0


def generate_heightfield(
    source,
    width: int,
    height: int,
    horizontal_extent: float,
    vertical_scale: float = 1.0,
) -> HeightField:
    """Procedural DEM from a NoiseSpec (fBm) or DiamondSquareParams source.

    For a NoiseSpec, cell (i, j) = amplitude * fbm3 at the cell's world
    (x, y, 0) with x = extent*j/(width-1), y = extent*i/(height-1). For
    diamond-square the grid must be square with side 2^n + 1. Deterministic
    and identical for any PLANETFORGE_THREADS value.
    """
    if not (2 <= width <= _MAX_SIZE and 2 <= height <= _MAX_SIZE):
        raise InvalidArgument(f"width and height must be in [2, {_MAX_SIZE}]")
    if not (horizontal_extent > 0 and math.isfinite(horizontal_extent)):
        raise InvalidArgument("horizontal_extent must be finite and > 0")

    if isinstance(source, DiamondSquareParams):
        side = (1 << source.size_exponent) + 1
        if width != side or height != side:
            raise InvalidArgument(
                f"diamond-square grid must be {side}x{side} for size_exponent={source.size_exponent}"
            )
        hf = diamond_square(
            source.size_exponent,
            source.corners,
            source.roughness,
            source.seed,
            horizontal_extent=horizontal_extent,
            vertical_scale=vertical_scale,
        )
        return hf
    if not isinstance(source, NoiseSpec):
        raise InvalidArgument("source must be a NoiseSpec or DiamondSquareParams")

    xs = horizontal_extent * (np.arange(width, dtype=np.float64) / (width - 1))
    ys = horizontal_extent * (np.arange(height, dtype=np.float64) / (height - 1))

    def rows_block(i0: int) -> np.ndarray:
        i1 = min(i0 + _ROW_CHUNK, height)
        yy = np.repeat(ys[i0:i1], width)
        xx = np.tile(xs, i1 - i0)
        zz = np.zeros_like(xx)
        block = source.amplitude * _fbm3_core(xx, yy, zz, source)
        return block.reshape(i1 - i0, width)

    blocks = parallel_map(rows_block, range(0, height, _ROW_CHUNK))
    cells = np.vstack(blocks)
    return HeightField(cells=cells, horizontal_extent=horizontal_extent, vertical_scale=vertical_scale)


def sample_bilinear(field: HeightField, u: float, v: float) -> float:
    """Bilinear interpolation over cell centers; exact at cell coordinates.

    u indexes columns, v indexes rows, both in [0, 1]. Out-of-range
    coordinates raise OutOfDomain; there is no implicit wrap or clamp.
    """
    if not (0.0 <= u <= 1.0) or not (0.0 <= v <= 1.0):
        raise OutOfDomain(f"(u, v) = ({u}, {v}) outside [0, 1]^2")
    cells = field.cells
    x = u * (field.width - 1)
    y = v * (field.height - 1)
    j0 = min(int(math.floor(x)), field.width - 2)
    i0 = min(int(math.floor(y)), field.height - 2)
    fx = x - j0
    fy = y - i0
    c00 = cells[i0, j0]
    c01 = cells[i0, j0 + 1]
    c10 = cells[i0 + 1, j0]
    c11 = cells[i0 + 1, j0 + 1]
    top = c00 + fx * (c01 - c00)
    bot = c10 + fx * (c11 - c10)
    val = top + fy * (bot - top)
    # guard against 1-ulp overshoot so the 4-cell min/max envelope is strict
    lo = min(c00, c01, c10, c11)
    hi = max(c00, c01, c10, c11)
    return float(min(max(val, lo), hi))


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def export_heightfield(field: HeightField, path, fmt: str = "pgm16") -> Path:
    """Write a 16-bit grayscale image plus its metadata sidecar.

    fmt is "pgm16" (P5, big-endian) or "png16". Min elevation maps to pixel 0
    and max to 65535; a constant field maps to all-zero pixels. Returns the
    image path.
    """
    path = Path(path)
    cells = field.cells
    lo = float(cells.min())
    hi = float(cells.max())
    if hi > lo:
        q = np.rint((cells - lo) / (hi - lo) * 65535.0).astype(np.uint16)
    else:
        q = np.zeros_like(cells, dtype=np.uint16)

    if fmt == "pgm16":
        header = f"P5\n{field.width} {field.height}\n65535\n".encode("ascii")
        path.write_bytes(header + q.astype(">u2").tobytes())
    elif fmt == "png16":
        from PIL import Image

        Image.fromarray(q).save(path, format="PNG")
    else:
        raise InvalidArgument(f"unknown heightmap format {fmt!r}")

    meta = {
        "min": lo,
        "max": hi,
        "horizontal_extent": field.horizontal_extent,
        "vertical_scale": field.vertical_scale,
    }
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _read_pgm16(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise HeightmapFormatError(f"{path}: magic is not P5")
    # header: magic, width, height, maxval separated by whitespace
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise HeightmapFormatError(f"{path}: malformed header") from exc
    if maxval != 65535:
        raise HeightmapFormatError(f"{path}: bit depth wrong, maxval={maxval} (need 65535)")
    raw = data[pos : pos + width * height * 2]
    if len(raw) != width * height * 2:
        raise HeightmapFormatError(f"{path}: pixel payload truncated")
    return np.frombuffer(raw, dtype=">u2").reshape(height, width).astype(np.uint16)


def _read_png16(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16B", "I"):
            raise HeightmapFormatError(f"{path}: bit depth wrong, mode={im.mode} (need 16-bit grayscale)")
        arr = np.array(im)
    if arr.ndim != 2:
        raise HeightmapFormatError(f"{path}: not single-channel")
    if arr.max(initial=0) > 65535 or arr.min(initial=0) < 0:
        raise HeightmapFormatError(f"{path}: pixel values exceed 16-bit range")
    return arr.astype(np.uint16)


def import_heightfield(
    path,
    horizontal_extent: float | None = None,
    vertical_scale: float | None = None,
) -> HeightField:
    """Read a 16-bit heightmap written by export_heightfield.

    Physical units come from the sidecar; explicit arguments override it.
    Raises HeightmapFormatError naming the offending field when the file or
    sidecar is unusable.
    """
    path = Path(path)
    if not path.exists():
        raise HeightmapFormatError(f"{path}: file unreadable (missing)")
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise HeightmapFormatError(f"{path}: sidecar {sidecar.name} missing")
    try:
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HeightmapFormatError(f"{sidecar}: sidecar not valid JSON") from exc
    for key in ("min", "max", "horizontal_extent", "vertical_scale"):
        if key not in meta:
            raise HeightmapFormatError(f"{sidecar}: sidecar field '{key}' missing")

    suffix = path.suffix.lower()
    if suffix == ".pgm":
        q = _read_pgm16(path)
    elif suffix == ".png":
        q = _read_png16(path)
    else:
        raise HeightmapFormatError(f"{path}: unsupported extension {suffix!r}")

    lo = float(meta["min"])
    hi = float(meta["max"])
    if hi > lo:
        cells = lo + q.astype(np.float64) / 65535.0 * (hi - lo)
    else:
        cells = np.full(q.shape, lo, dtype=np.float64)
    return HeightField(
        cells=cells,
        horizontal_extent=float(horizontal_extent if horizontal_extent is not None else meta["horizontal_extent"]),
        vertical_scale=float(vertical_scale if vertical_scale is not None else meta["vertical_scale"]),
    )
