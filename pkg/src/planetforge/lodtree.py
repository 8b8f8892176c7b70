"""Restricted quadtree selection over the cube faces (or one flat root).

A key (face, level, i, j) covers the face parameter square
[i, i+1] x [j, j+1] / 2^level, with i along u and j along v. Selection is
stateless: each call walks top-down from the roots, splits on the
distance-ratio metric, then repairs the result so edge-adjacent leaves never
differ by more than one level (including across cube faces). That restriction
is what makes single-midpoint crack repair sufficient downstream.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import InvalidArgument
from .spheremap import Edge, PlanetSpec, face_adjacency, unit_sphere_dirs


class QuadKey(NamedTuple):
    face: int
    level: int
    i: int
    j: int


EXTERIOR = -1  # neighbor level marker for edges with no neighbor (flat terrain)


@dataclass(frozen=True)
class LodConfig:
    """Selection parameters.

    split_threshold is the dimensionless density k: a node splits while its
    world edge length divided by camera distance exceeds k. viewport_height_px
    and vertical_fov are carried for future screen-space-error metrics and do
    not influence the current rule. max_depth of None defers to the planet's.
    """

    split_threshold: float = 8.0
    max_depth: int | None = None
    viewport_height_px: int = 1080
    vertical_fov: float = math.pi / 3

    def __post_init__(self) -> None:
        if not (self.split_threshold > 0 and math.isfinite(self.split_threshold)):
            raise InvalidArgument("split_threshold must be finite and > 0")
        if self.max_depth is not None and not (0 <= self.max_depth <= 24):
            raise InvalidArgument("max_depth must be in [0, 24]")
        if self.viewport_height_px <= 0:
            raise InvalidArgument("viewport_height_px must be > 0")
        if not (0.0 < self.vertical_fov < math.pi):
            raise InvalidArgument("vertical_fov must be in (0, pi)")


@dataclass(frozen=True)
class CameraState:
    position: tuple[float, float, float]
    forward: tuple[float, float, float]
    up: tuple[float, float, float]

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=np.float64)
        fwd = np.asarray(self.forward, dtype=np.float64)
        up = np.asarray(self.up, dtype=np.float64)
        if pos.shape != (3,) or fwd.shape != (3,) or up.shape != (3,):
            raise InvalidArgument("camera vectors must be 3D")
        if not np.isfinite(pos).all():
            raise InvalidArgument("camera position must be finite")
        for name, vec in (("forward", fwd), ("up", up)):
            if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-6:
                raise InvalidArgument(f"camera {name} must be unit length")
        if float(np.linalg.norm(np.cross(fwd, up))) < 1e-9:
            raise InvalidArgument("camera forward and up must not be parallel")
        object.__setattr__(self, "position", tuple(float(x) for x in pos))
        object.__setattr__(self, "forward", tuple(float(x) for x in fwd))
        object.__setattr__(self, "up", tuple(float(x) for x in up))

    @staticmethod
    def looking_at_origin(position) -> "CameraState":
        """Camera at `position` looking at the world origin, deterministic up."""
        pos = np.asarray(position, dtype=np.float64)
        norm = float(np.linalg.norm(pos))
        if norm == 0.0:
            raise InvalidArgument("camera cannot sit exactly at the origin")
        fwd = -pos / norm
        ref = np.array([0.0, 0.0, 1.0]) if abs(fwd[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        right = np.cross(fwd, ref)
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        up /= np.linalg.norm(up)
        return CameraState(tuple(pos), tuple(fwd), tuple(up))


@dataclass(frozen=True)
class ActiveSet:
    """Selected crack-consistent leaves plus each leaf's 4 edge neighbor levels.

    keys are sorted; neighbor_levels[k] aligns with keys[k] in (W, E, S, N)
    order. A neighbor level of EXTERIOR (-1) marks a flat-terrain border edge.
    """

    keys: tuple[QuadKey, ...]
    neighbor_levels: tuple[tuple[int, int, int, int], ...]

    def level_histogram(self, max_level: int | None = None) -> list[int]:
        top = max_level if max_level is not None else max((k.level for k in self.keys), default=0)
        hist = [0] * (top + 1)
        for k in self.keys:
            hist[k.level] += 1
        return hist

    def to_jsonl(self) -> str:
        lines = []
        for key, nl in zip(self.keys, self.neighbor_levels):
            lines.append(
                json.dumps(
                    {"face": key.face, "level": key.level, "i": key.i, "j": key.j,
                     "neighbors": list(nl)},
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "ActiveSet":
        keys = []
        levels = []
        for line in text.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            keys.append(QuadKey(row["face"], row["level"], row["i"], row["j"]))
            levels.append(tuple(row["neighbors"]))
        return ActiveSet(tuple(keys), tuple(levels))


def children(key: QuadKey) -> tuple[QuadKey, QuadKey, QuadKey, QuadKey]:
    f, L, i, j = key
    return (
        QuadKey(f, L + 1, 2 * i, 2 * j),
        QuadKey(f, L + 1, 2 * i + 1, 2 * j),
        QuadKey(f, L + 1, 2 * i, 2 * j + 1),
        QuadKey(f, L + 1, 2 * i + 1, 2 * j + 1),
    )


def parent(key: QuadKey) -> QuadKey:
    return QuadKey(key.face, key.level - 1, key.i >> 1, key.j >> 1)


def neighbor(key: QuadKey, edge: Edge | int, flat: bool = False) -> QuadKey | None:
    """Same-level neighbor across an edge; None marks a flat-terrain border.

    Cross-face neighbors are resolved through the cube adjacency table, with
    the along-edge index reversed when the shared edge's parameterizations run
    in opposite directions.
    """
    f, L, i, j = key
    n = 1 << L
    edge = int(edge)
    di, dj = ((-1, 0), (1, 0), (0, -1), (0, 1))[edge]
    ni, nj = i + di, j + dj
    if 0 <= ni < n and 0 <= nj < n:
        return QuadKey(f, L, ni, nj)
    if flat:
        return None
    along = j if edge in (int(Edge.W), int(Edge.E)) else i
    nface, nedge, flip = face_adjacency(f, edge)
    if flip:
        along = n - 1 - along
    nedge = int(nedge)
    if nedge == int(Edge.W):
        return QuadKey(int(nface), L, 0, along)
    if nedge == int(Edge.E):
        return QuadKey(int(nface), L, n - 1, along)
    if nedge == int(Edge.S):
        return QuadKey(int(nface), L, along, 0)
    return QuadKey(int(nface), L, along, n - 1)


def key_param_bounds(key: QuadKey) -> tuple[float, float, float, float]:
    """(u0, u1, v0, v1) of the key footprint, exact dyadics."""
    n = float(1 << key.level)
    return key.i / n, (key.i + 1) / n, key.j / n, (key.j + 1) / n


def _check_coverage(keys: set[QuadKey]) -> list[int]:
    """Validate exact tiling per present face; returns the sorted face list."""
    if not keys:
        raise InvalidArgument("key set is empty")
    by_face: dict[int, list[QuadKey]] = {}
    for k in keys:
        if not (0 <= k.i < (1 << k.level) and 0 <= k.j < (1 << k.level)):
            raise InvalidArgument(f"key {k} indices out of range for its level")
        by_face.setdefault(k.face, []).append(k)
    for face, face_keys in by_face.items():
        max_level = max(k.level for k in face_keys)
        total = 0
        for k in face_keys:
            total += 4 ** (max_level - k.level)
            a = k
            while a.level > 0:
                a = parent(a)
                if a in keys:
                    raise InvalidArgument(f"keys {k} and {a} overlap")
        if total != 4**max_level:
            raise InvalidArgument(f"face {face} is not tiled exactly once")
    return sorted(by_face)


def _covering_leaf(key: QuadKey, keys: set[QuadKey]) -> QuadKey | None:
    """The leaf at or above `key`, if present."""
    a = key
    while True:
        if a in keys:
            return a
        if a.level == 0:
            return None
        a = parent(a)


def restrict(raw_keys: Iterable[QuadKey], flat: bool = False) -> ActiveSet:
    """Minimal refinement of a covering key set in which edge-adjacent leaves
    differ by at most one level (cross-face edges included). Idempotent.

    Faces absent from the input impose no constraints, so single-face fixtures
    restrict in isolation. Raises InvalidArgument if the input does not tile
    each present face exactly once.
    """
    keys = set(raw_keys)
    faces = set(_check_coverage(keys))

    queue = deque(sorted(keys))
    while queue:
        k = queue.popleft()
        if k not in keys:
            continue  # split away since enqueued
        for edge in range(4):
            nk = neighbor(k, edge, flat=flat)
            if nk is None or nk.face not in faces:
                continue
            leaf = _covering_leaf(nk, keys)
            while leaf is not None and leaf.level < k.level - 1:
                keys.remove(leaf)
                kids = children(leaf)
                keys.update(kids)
                queue.extend(kids)
                leaf = _covering_leaf(nk, keys)

    ordered = tuple(sorted(keys))
    levels = []
    for k in ordered:
        row = []
        for edge in range(4):
            nk = neighbor(k, edge, flat=flat)
            if nk is None or nk.face not in faces:
                row.append(EXTERIOR)
            else:
                leaf = _covering_leaf(nk, keys)
                row.append(leaf.level if leaf is not None else k.level + 1)
        levels.append(tuple(row))
    return ActiveSet(ordered, tuple(levels))


def _node_metric(key: QuadKey, radius: float, relief: float, camera: np.ndarray):
    """(edge length, signed camera distance to bounding sphere), base sphere.

    The bounding sphere is centered on the node's center point with radius
    covering its corners plus the worst-case noise relief; distance <= 0 means
    the camera is inside it.
    """
    u0, u1, v0, v1 = key_param_bounds(key)
    us = np.array([u0, u1, u0, u1, (u0 + u1) * 0.5])
    vs = np.array([v0, v0, v1, v1, (v0 + v1) * 0.5])
    faces = np.full(5, key.face, dtype=np.int64)
    pts = unit_sphere_dirs(faces, us, vs) * radius
    center = pts[4]
    corner_span = np.linalg.norm(pts[:4] - center, axis=1).max()
    bound_r = float(corner_span) + relief
    edges = (
        np.linalg.norm(pts[0] - pts[1]),
        np.linalg.norm(pts[2] - pts[3]),
        np.linalg.norm(pts[0] - pts[2]),
        np.linalg.norm(pts[1] - pts[3]),
    )
    edge_len = float(max(edges))
    dist = float(np.linalg.norm(camera - center)) - bound_r
    return edge_len, dist


def select_lod(camera: CameraState, spec: PlanetSpec, cfg: LodConfig) -> ActiveSet:
    """Camera-driven leaf selection, repaired to the one-level restriction.

    A node splits while (world edge length) / max(distance to its bounding
    sphere, eps) exceeds split_threshold, with eps = 1e-6 * base_radius; a
    camera inside the bounding sphere splits the node to max_depth. Pure
    function of its arguments.
    """
    cam = np.asarray(camera.position, dtype=np.float64)
    k_split = cfg.split_threshold
    max_depth = cfg.max_depth if cfg.max_depth is not None else spec.max_depth
    eps = 1e-6 * spec.base_radius
    relief = spec.max_relief()
    radius = spec.base_radius

    raw: list[QuadKey] = []
    stack = [QuadKey(f, 0, 0, 0) for f in range(5, -1, -1)]
    while stack:
        key = stack.pop()
        if key.level >= max_depth:
            raw.append(key)
            continue
        edge_len, dist = _node_metric(key, radius, relief, cam)
        rho = math.inf if dist <= 0.0 else edge_len / max(dist, eps)
        if rho > k_split:
            stack.extend(children(key))
        else:
            raw.append(key)
    return restrict(raw)
