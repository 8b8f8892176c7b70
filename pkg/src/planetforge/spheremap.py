"""Six-face cube-to-sphere mapping with oblateness.

Axis convention: face k covers the cube plane where axis k//2 equals +1 (even
k) or -1 (odd k). The two remaining axes, taken in ascending order, carry the
face parameters as 2u-1 and 2v-1. Under this convention every shared cube
edge is written with bit-identical component values from both adjacent faces,
so face_to_unit_sphere agrees exactly across seams.

Boundary ownership: a (face, u, v) on a cube edge or corner is canonicalized
to the lexicographically smallest face index containing that cube point. All
dyadic parameter coordinates survive canonicalization exactly, which is what
lets downstream welding match vertices by integer keys instead of epsilons.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .noise import NoiseSpec, _fbm3_core


class Face(enum.IntEnum):
    PX = 0
    NX = 1
    PY = 2
    NY = 3
    PZ = 4
    NZ = 5


class Edge(enum.IntEnum):
    """Patch edge names: W/E are the u=0/u=1 sides, S/N the v=0/v=1 sides."""

    W = 0
    E = 1
    S = 2
    N = 3


_FACE_AXIS = (0, 0, 1, 1, 2, 2)
_FACE_SIGN = (1.0, -1.0, 1.0, -1.0, 1.0, -1.0)
# in-face axes in ascending order: u-axis, v-axis
_FACE_UAXIS = (1, 1, 0, 0, 0, 0)
_FACE_VAXIS = (2, 2, 2, 2, 1, 1)


@dataclass(frozen=True)
class FaceCoord:
    face: Face
    u: float
    v: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.u <= 1.0 and 0.0 <= self.v <= 1.0):
            raise InvalidArgument(f"(u, v) = ({self.u}, {self.v}) outside [0, 1]^2")


@dataclass(frozen=True)
class PlanetSpec:
    """Planet description: spheroid radii plus the two procedural noise layers.

    oblateness is the flattening f; the polar (z) radius is base_radius*(1-f).
    elevation_noise shapes the globe at all LOD levels; detail_noise is the
    finest-level displacement layer. max_depth is the finest quadtree level.
    """

    base_radius: float
    elevation_noise: NoiseSpec
    detail_noise: NoiseSpec
    oblateness: float = 0.0
    max_depth: int = 8

    def __post_init__(self) -> None:
        if not (self.base_radius > 0 and math.isfinite(self.base_radius)):
            raise InvalidArgument("base_radius must be finite and > 0")
        if not (0.0 <= self.oblateness < 0.5):
            raise InvalidArgument("oblateness must be in [0, 0.5)")
        if not (0 <= self.max_depth <= 24):
            raise InvalidArgument("max_depth must be in [0, 24]")

    def max_relief(self) -> float:
        """Upper bound on |surface - base sphere| from both noise layers."""
        return (
            self.elevation_noise.amplitude * self.elevation_noise.max_fbm()
            + self.detail_noise.amplitude * self.detail_noise.max_fbm()
        )

    def to_json(self) -> dict:
        def spec(n: NoiseSpec) -> dict:
            return {
                "seed": n.seed,
                "octaves": n.octaves,
                "lacunarity": n.lacunarity,
                "gain": n.gain,
                "frequency": n.frequency,
                "amplitude": n.amplitude,
            }

        return {
            "schema": 1,
            "base_radius": self.base_radius,
            "oblateness": self.oblateness,
            "max_depth": self.max_depth,
            "elevation_noise": spec(self.elevation_noise),
            "detail_noise": spec(self.detail_noise),
        }

    @staticmethod
    def from_json(data: dict) -> "PlanetSpec":
        if data.get("schema", 1) != 1:
            raise InvalidArgument(f"unsupported PlanetSpec schema {data.get('schema')!r}")
        return PlanetSpec(
            base_radius=float(data["base_radius"]),
            oblateness=float(data.get("oblateness", 0.0)),
            max_depth=int(data.get("max_depth", 8)),
            elevation_noise=NoiseSpec(**data["elevation_noise"]),
            detail_noise=NoiseSpec(**data["detail_noise"]),
        )


def _cube_points(faces: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Map face parameters to points on the unit cube surface, (N, 3)."""
    n = faces.shape[0]
    pts = np.empty((n, 3), dtype=np.float64)
    a = 2.0 * us - 1.0
    b = 2.0 * vs - 1.0
    for f in range(6):
        m = faces == f
        if not m.any():
            continue
        pts[m, _FACE_AXIS[f]] = _FACE_SIGN[f]
        pts[m, _FACE_UAXIS[f]] = a[m]
        pts[m, _FACE_VAXIS[f]] = b[m]
    return pts


def canonicalize_arrays(
    faces: np.ndarray, us: np.ndarray, vs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reassign boundary samples to their owning (lowest-index) face.

    Interior samples pass through unchanged. Exact for dyadic parameters: the
    round trip through cube coordinates introduces no rounding.
    """
    pts = _cube_points(faces, us, vs)
    out_f = faces.astype(np.int64).copy()
    out_u = us.astype(np.float64).copy()
    out_v = vs.astype(np.float64).copy()
    assigned = np.zeros(faces.shape[0], dtype=bool)
    for f in range(6):
        on_face = pts[:, _FACE_AXIS[f]] == _FACE_SIGN[f]
        take = on_face & ~assigned
        if take.any():
            out_f[take] = f
            out_u[take] = (pts[take, _FACE_UAXIS[f]] + 1.0) * 0.5
            out_v[take] = (pts[take, _FACE_VAXIS[f]] + 1.0) * 0.5
            assigned |= take
    return out_f, out_u, out_v


def canonical_face_coord(c: FaceCoord) -> FaceCoord:
    f, u, v = canonicalize_arrays(
        np.array([int(c.face)]), np.array([c.u]), np.array([c.v])
    )
    return FaceCoord(Face(int(f[0])), float(u[0]), float(v[0]))


def unit_sphere_dirs(faces: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Unit directions for face parameter arrays, (N, 3)."""
    pts = _cube_points(faces, us, vs)
    norm = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2 + pts[:, 2] ** 2)
    return pts / norm[:, None]


def face_to_unit_sphere(c: FaceCoord) -> np.ndarray:
    """Project a face coordinate onto the unit sphere by normalization."""
    d = unit_sphere_dirs(np.array([int(c.face)]), np.array([c.u]), np.array([c.v]))
    return d[0]


def surface_positions(
    faces: np.ndarray, us: np.ndarray, vs: np.ndarray, spec: PlanetSpec
) -> np.ndarray:
    """World positions of displaced surface points, (N, 3), double precision.

    Elevation is sampled at the base-sphere world point (direction times
    base_radius) so it is a pure function of the canonical surface location;
    oblateness scales the polar axis after displacement. Inputs are
    canonicalized first, making shared-edge results bit-identical no matter
    which face names them.
    """
    cf, cu, cv = canonicalize_arrays(faces, us, vs)
    d = unit_sphere_dirs(cf, cu, cv)
    radius = spec.base_radius
    sample = d * radius
    elev = spec.elevation_noise.amplitude * _fbm3_core(
        sample[:, 0], sample[:, 1], sample[:, 2], spec.elevation_noise
    )
    r = radius + elev
    out = np.empty_like(d)
    out[:, 0] = d[:, 0] * r
    out[:, 1] = d[:, 1] * r
    out[:, 2] = d[:, 2] * r * (1.0 - spec.oblateness)
    return out


def surface_position(c: FaceCoord, spec: PlanetSpec) -> np.ndarray:
    pos = surface_positions(
        np.array([int(c.face)]), np.array([c.u]), np.array([c.v]), spec
    )
    return pos[0]


def _edge_param_point(face: int, edge: int, t: float) -> tuple[float, float]:
    if edge == Edge.W:
        return 0.0, t
    if edge == Edge.E:
        return 1.0, t
    if edge == Edge.S:
        return t, 0.0
    return t, 1.0


def _build_adjacency() -> dict[tuple[int, int], tuple[int, int, bool]]:
    table: dict[tuple[int, int], tuple[int, int, bool]] = {}
    for face in range(6):
        for edge in range(4):
            alongs: list[float] = []
            nface = nedge = -1
            for t in (0.25, 0.75):
                u, v = _edge_param_point(face, edge, t)
                pt = _cube_points(np.array([face]), np.array([u]), np.array([v]))[0]
                for cand in range(6):
                    if cand == face:
                        continue
                    if pt[_FACE_AXIS[cand]] == _FACE_SIGN[cand]:
                        cu = (pt[_FACE_UAXIS[cand]] + 1.0) * 0.5
                        cv = (pt[_FACE_VAXIS[cand]] + 1.0) * 0.5
                        if cu == 0.0:
                            ne, along = Edge.W, cv
                        elif cu == 1.0:
                            ne, along = Edge.E, cv
                        elif cv == 0.0:
                            ne, along = Edge.S, cu
                        else:
                            ne, along = Edge.N, cu
                        nface, nedge = cand, int(ne)
                        alongs.append(along)
                        break
            assert nface >= 0 and len(alongs) == 2
            table[(face, edge)] = (nface, nedge, alongs[0] > alongs[1])
    # sanity: the directed-edge map must be an involution
    for (f, e), (nf, ne, flip) in table.items():
        bf, be, bflip = table[(nf, ne)]
        assert (bf, be, bflip) == (f, e, flip), "adjacency table is not symmetric"
    return table


_ADJACENCY = _build_adjacency()


def face_adjacency(face: Face | int, edge: Edge | int) -> tuple[Face, Edge, bool]:
    """Neighbor face and edge across a cube edge, plus orientation flip flag.

    Applying the mapping twice returns the original (face, edge). The flip
    flag reports whether the along-edge parameter runs in opposite directions
    on the two faces.
    """
    nface, nedge, flip = _ADJACENCY[(int(face), int(edge))]
    return Face(nface), Edge(nedge), flip


def planet_spec_to_json_str(spec: PlanetSpec) -> str:
    return json.dumps(spec.to_json(), sort_keys=True)
