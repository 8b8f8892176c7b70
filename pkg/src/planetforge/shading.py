"""CPU vertex shading: triplanar weights, elevation ramp colors, Lambert light.

Colors are baked to vertices rather than textures so outputs stay
renderer-agnostic and diffable. Shading always recomputes from geometry
(positions and normals), never from previous colors, so it is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgument
from .spheremap import PlanetSpec
from .tessellator import IndexedMesh

DEFAULT_SHARPNESS = 4.0
DEFAULT_AMBIENT_FLOOR = 0.05


@dataclass(frozen=True)
class ColorRamp:
    """Elevation-fraction to RGB mapping with a slope-rock override.

    stops are (fraction, (r, g, b)) with fractions strictly increasing from 0
    to 1; a single-stop ramp paints everything that one color. Vertices whose
    normal's radial-alignment cosine falls below slope_rock_threshold take
    rock_color instead of the ramp color. elevation_range optionally pins the
    world-elevation interval mapped onto [0, 1]; None derives it from the
    planet's noise amplitudes.
    """

    stops: tuple[tuple[float, tuple[float, float, float]], ...]
    slope_rock_threshold: float = 0.0
    rock_color: tuple[float, float, float] = (0.45, 0.42, 0.40)
    elevation_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not self.stops:
            raise InvalidArgument("ramp needs at least one stop")
        fracs = [s[0] for s in self.stops]
        if len(self.stops) > 1:
            if fracs[0] != 0.0 or fracs[-1] != 1.0:
                raise InvalidArgument("ramp fractions must start at 0 and end at 1")
            if any(b <= a for a, b in zip(fracs, fracs[1:])):
                raise InvalidArgument("ramp fractions must be strictly increasing")
        if not 0.0 <= self.slope_rock_threshold <= 1.0:
            raise InvalidArgument("slope_rock_threshold must be in [0, 1]")
        if self.elevation_range is not None and not self.elevation_range[1] > self.elevation_range[0]:
            raise InvalidArgument("elevation_range must be (lo, hi) with hi > lo")

    def sample(self, fractions: np.ndarray) -> np.ndarray:
        """Piecewise-linear ramp colors for fractions in [0, 1], (N, 3)."""
        f = np.clip(np.asarray(fractions, dtype=np.float64), 0.0, 1.0)
        if len(self.stops) == 1:
            return np.tile(np.asarray(self.stops[0][1], dtype=np.float64), (f.shape[0], 1))
        xs = np.array([s[0] for s in self.stops])
        out = np.empty((f.shape[0], 3), dtype=np.float64)
        for c in range(3):
            ys = np.array([s[1][c] for s in self.stops])
            out[:, c] = np.interp(f, xs, ys)
        return out


def triplanar_weights(normal, sharpness: float = DEFAULT_SHARPNESS) -> np.ndarray:
    """Axis-projection blend weights |n_i|^sharpness / sum_j |n_j|^sharpness.

    Non-negative, summing to 1, permutation-equivariant in the normal's axes.
    Raises InvalidArgument for a zero normal or a normal far from unit length.
    """
    n = np.asarray(normal, dtype=np.float64)
    if n.shape != (3,):
        raise InvalidArgument("normal must be a 3-vector")
    if sharpness < 1.0:
        raise InvalidArgument("sharpness must be >= 1")
    length = float(np.linalg.norm(n))
    if length == 0.0:
        raise InvalidArgument("normal must be nonzero")
    if abs(length - 1.0) > 1e-6:
        raise InvalidArgument(f"normal must be unit length, |n| = {length}")
    w = np.abs(n) ** sharpness
    return w / w.sum()


def _triplanar_weights_rows(normals: np.ndarray, sharpness: float) -> np.ndarray:
    w = np.abs(normals.astype(np.float64)) ** sharpness
    s = w.sum(axis=1)
    s[s == 0.0] = 1.0
    return w / s[:, None]


def shade_vertices(
    mesh: IndexedMesh,
    ramp: ColorRamp,
    light_dir,
    spec: PlanetSpec,
    ambient_floor: float = DEFAULT_AMBIENT_FLOOR,
    sharpness: float = DEFAULT_SHARPNESS,
) -> IndexedMesh:
    """Bake ramp colors, slope rock, and Lambert lighting into vertex colors.

    Per vertex: elevation fraction = (radial distance - base_radius) mapped
    over the ramp's elevation range; color from the ramp, overridden by
    rock_color where the normal-vs-radial cosine drops below the slope
    threshold; multiplied by max(dot(normal, -light_dir), ambient_floor).
    Also fills the mesh's triplanar weights from its normals.
    """
    light = np.asarray(light_dir, dtype=np.float64)
    if light.shape != (3,) or not np.isfinite(light).all():
        raise InvalidArgument("light_dir must be a finite 3-vector")
    norm = float(np.linalg.norm(light))
    if norm == 0.0:
        raise InvalidArgument("light_dir must be nonzero")
    light = light / norm
    if not 0.0 <= ambient_floor <= 1.0:
        raise InvalidArgument("ambient_floor must be in [0, 1]")

    world = mesh.world_positions()
    radial = np.linalg.norm(world, axis=1)
    elev = radial - spec.base_radius

    if ramp.elevation_range is not None:
        lo, hi = ramp.elevation_range
    else:
        a = spec.max_relief()
        lo, hi = -a, a
    if hi > lo:
        frac = (elev - lo) / (hi - lo)
    else:
        frac = np.full(elev.shape, 0.5)
    colors = ramp.sample(frac)

    safe = radial > 0.0
    radial_dir = np.zeros_like(world)
    radial_dir[safe] = world[safe] / radial[safe, None]
    normals = mesh.normals.astype(np.float64)
    align = (normals * radial_dir).sum(axis=1)
    rocky = align < ramp.slope_rock_threshold
    colors[rocky] = ramp.rock_color

    lambert = np.maximum((normals * -light).sum(axis=1), ambient_floor)
    colors = np.clip(colors * lambert[:, None], 0.0, 1.0)

    return replace(
        mesh,
        colors=colors.astype(np.float32),
        triplanar=_triplanar_weights_rows(normals, sharpness).astype(np.float32),
    )
