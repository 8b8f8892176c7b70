"""Patch tessellation, crack repair, detail displacement, and welding.

Every active key becomes an independent triangle patch on a 2^t x 2^t
parameter grid. Crack repair happens only on the coarse side of a level-1
boundary: each boundary cell edge facing a finer neighbor gains its midpoint
and the adjacent triangle is bisected through that midpoint and its opposite
vertex, after which the coarse boundary vertex set equals the finer side's.

All parameter coordinates are dyadic rationals, so midpoints, face-global
coordinates, and canonical (owning-face) coordinates are exact in double
precision. Welding therefore matches vertices by integer keys quantized at
2^-32 of parameter space instead of epsilon-comparing positions; two patches
that disagree about a shared vertex's position is a hard error, not a merge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgument, WeldConsistencyError
from .lodtree import QuadKey
from .noise import _fbm3_core
from .spheremap import PlanetSpec, canonicalize_arrays, surface_positions, unit_sphere_dirs

MAX_INNER_LEVEL = 6

# faces whose (du x dv) points inward; their triangles wind reversed so every
# emitted triangle is counter-clockwise seen from outside the planet
_WINDING_FLIP = (False, True, True, False, False, True)

_QUANT = 2.0**32


@dataclass(frozen=True)
class PatchMesh:
    """One tessellated quadtree key.

    params holds (u, v) in the patch's own face frame; canon_face/canon_u/
    canon_v name the same vertices in their owning face's frame (identical for
    interior vertices). positions are world-space double precision. boundary
    marks vertices lying on the key's W/E/S/N parametric edges. The generating
    PlanetSpec rides along so later passes can place new vertices identically.
    """

    key: QuadKey
    spec: PlanetSpec
    params: np.ndarray       # (n, 2) float64
    canon_face: np.ndarray   # (n,)  int64
    canon_u: np.ndarray      # (n,)  float64
    canon_v: np.ndarray      # (n,)  float64
    positions: np.ndarray    # (n, 3) float64
    triangles: np.ndarray    # (m, 3) int32
    boundary: np.ndarray     # (n, 4) bool, (W, E, S, N)

    @property
    def vertex_count(self) -> int:
        return self.params.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]


def _validate_neighbor_levels(key: QuadKey, neighbor_levels) -> tuple[int, int, int, int]:
    nl = tuple(int(x) for x in neighbor_levels)
    if len(nl) != 4:
        raise InvalidArgument("neighbor_levels must have 4 entries (W, E, S, N)")
    for lv in nl:
        if lv >= 0 and abs(lv - key.level) > 1:
            raise InvalidArgument(
                f"restriction violated: neighbor level {lv} vs key level {key.level}"
            )
    return nl


def patch_grid_params(key: QuadKey, inner_level: int) -> tuple[np.ndarray, np.ndarray]:
    """Face-global (u, v) for the (2^t+1)^2 grid vertices, exact dyadics."""
    nn = 1 << inner_level
    denom = float(nn << key.level)
    ua = (key.i * nn + np.arange(nn + 1, dtype=np.float64)) / denom
    va = (key.j * nn + np.arange(nn + 1, dtype=np.float64)) / denom
    uu, vv = np.meshgrid(ua, va, indexing="xy")
    return uu.ravel(), vv.ravel()


def tessellate_patch(
    key: QuadKey,
    neighbor_levels,
    inner_level: int,
    spec: PlanetSpec,
) -> PatchMesh:
    """Uniform 2^t x 2^t tessellation of a key, vertices on the displaced surface.

    Cells split along the parametric lower-left to upper-right diagonal, the
    same orientation on every patch, so adjacent patches triangulate shared
    corners compatibly. Boundary vertices use face-global dyadic parameters
    shared exactly with whatever the neighbor generates.
    """
    t = int(inner_level)
    if not 0 <= t <= MAX_INNER_LEVEL:
        raise InvalidArgument(f"inner_level must be in [0, {MAX_INNER_LEVEL}]")
    _validate_neighbor_levels(key, neighbor_levels)

    nn = 1 << t
    us, vs = patch_grid_params(key, t)
    params = np.stack([us, vs], axis=1)
    faces = np.full(us.shape[0], key.face, dtype=np.int64)
    cf, cu, cv = canonicalize_arrays(faces, us, vs)
    positions = surface_positions(cf, cu, cv, spec)

    # cell grid -> two triangles per cell with the LL-UR diagonal
    a, b = np.meshgrid(np.arange(nn), np.arange(nn), indexing="xy")
    a = a.ravel()
    b = b.ravel()
    ll = b * (nn + 1) + a
    lr = ll + 1
    ul = ll + (nn + 1)
    ur = ul + 1
    if _WINDING_FLIP[key.face]:
        tris = np.concatenate(
            [np.stack([ll, ur, lr], axis=1), np.stack([ll, ul, ur], axis=1)]
        )
    else:
        tris = np.concatenate(
            [np.stack([ll, lr, ur], axis=1), np.stack([ll, ur, ul], axis=1)]
        )

    ai = np.tile(np.arange(nn + 1), nn + 1)
    bi = np.repeat(np.arange(nn + 1), nn + 1)
    boundary = np.stack([ai == 0, ai == nn, bi == 0, bi == nn], axis=1)

    return PatchMesh(
        key=key,
        spec=spec,
        params=params,
        canon_face=cf,
        canon_u=cu,
        canon_v=cv,
        positions=positions,
        triangles=tris.astype(np.int32),
        boundary=boundary,
    )


def fix_cracks(patch: PatchMesh, neighbor_levels) -> PatchMesh:
    """Insert boundary midpoints against one-level-finer neighbors.

    For each edge whose neighbor is one level finer, every boundary cell edge
    on that side is bisected through its midpoint and the opposite triangle
    vertex, adding exactly 2^t triangles per such edge. Edges facing equal or
    coarser neighbors are untouched; the finer side never changes.
    """
    nl = _validate_neighbor_levels(patch.key, neighbor_levels)
    finer = [e for e in range(4) if nl[e] == patch.key.level + 1]
    if not finer:
        return patch

    params = [tuple(p) for p in patch.params]
    tri_list = [tuple(int(x) for x in t) for t in patch.triangles]
    boundary_rows = [tuple(r) for r in patch.boundary]

    def edge_key(p: int, q: int) -> tuple[int, int]:
        return (p, q) if p < q else (q, p)

    edge_map: dict[tuple[int, int], list[int]] = {}
    for ti, (x, y, z) in enumerate(tri_list):
        for p, q in ((x, y), (y, z), (z, x)):
            edge_map.setdefault(edge_key(p, q), []).append(ti)

    def unmap_tri(ti: int) -> None:
        x, y, z = tri_list[ti]
        for p, q in ((x, y), (y, z), (z, x)):
            edge_map[edge_key(p, q)].remove(ti)

    def map_tri(ti: int) -> None:
        x, y, z = tri_list[ti]
        for p, q in ((x, y), (y, z), (z, x)):
            edge_map.setdefault(edge_key(p, q), []).append(ti)

    new_params: list[tuple[float, float]] = []
    new_boundary: list[tuple[bool, bool, bool, bool]] = []
    pending: list[tuple[int, int, int]] = []  # (va, vb, new vertex id)

    next_id = len(params)
    for e in finer:
        ids = [i for i in range(len(boundary_rows)) if boundary_rows[i][e]]
        axis = 1 if e in (0, 1) else 0  # sort W/E by v, S/N by u
        ids.sort(key=lambda i: params[i][axis])
        for va, vb in zip(ids, ids[1:]):
            mu = (params[va][0] + params[vb][0]) * 0.5
            mv = (params[va][1] + params[vb][1]) * 0.5
            new_params.append((mu, mv))
            row = [False] * 4
            row[e] = True
            new_boundary.append(tuple(row))
            pending.append((va, vb, next_id))
            next_id += 1

    mus = np.array([p[0] for p in new_params])
    mvs = np.array([p[1] for p in new_params])
    mfaces = np.full(mus.shape[0], patch.key.face, dtype=np.int64)
    mcf, mcu, mcv = canonicalize_arrays(mfaces, mus, mvs)
    mpos = surface_positions(mcf, mcu, mcv, patch.spec)

    for va, vb, mid in pending:
        tis = edge_map.get(edge_key(va, vb), [])
        if len(tis) != 1:
            raise InvalidArgument(
                f"boundary edge ({va}, {vb}) borders {len(tis)} triangles; expected 1"
            )
        ti = tis[0]
        x, y, z = tri_list[ti]
        # rotate so the split edge is (x, y)
        for _ in range(3):
            if {x, y} == {va, vb}:
                break
            x, y, z = y, z, x
        unmap_tri(ti)
        tri_list[ti] = (x, mid, z)
        map_tri(ti)
        tri_list.append((mid, y, z))
        map_tri(len(tri_list) - 1)

    return PatchMesh(
        key=patch.key,
        spec=patch.spec,
        params=np.vstack([patch.params, np.array(new_params).reshape(-1, 2)]),
        canon_face=np.concatenate([patch.canon_face, mcf]),
        canon_u=np.concatenate([patch.canon_u, mcu]),
        canon_v=np.concatenate([patch.canon_v, mcv]),
        positions=np.vstack([patch.positions, mpos]),
        triangles=np.array(tri_list, dtype=np.int32),
        boundary=np.vstack([patch.boundary, np.array(new_boundary, dtype=bool).reshape(-1, 4)]),
    )


def apply_detail(patch: PatchMesh, spec: PlanetSpec, active_level: int) -> PatchMesh:
    """Finest-level displacement along the local outward direction.

    Active only when active_level equals the planet's max_depth (a zoomed-out
    frame renders the lower-quality mesh unchanged). The displacement depends
    only on the vertex's world position and canonical direction, so shared
    boundary vertices move bit-identically on both sides of a seam.
    """
    if active_level != spec.max_depth:
        return patch
    dirs = unit_sphere_dirs(patch.canon_face, patch.canon_u, patch.canon_v)
    pos = patch.positions
    disp = spec.detail_noise.amplitude * _fbm3_core(
        pos[:, 0], pos[:, 1], pos[:, 2], spec.detail_noise
    )
    return replace(patch, positions=pos + dirs * disp[:, None])


def _weld_keys(patch: PatchMesh) -> np.ndarray:
    qu = np.rint(patch.canon_u * _QUANT).astype(np.uint64)
    qv = np.rint(patch.canon_v * _QUANT).astype(np.uint64)
    return np.stack([patch.canon_face.astype(np.uint64), qu, qv], axis=1)


@dataclass(frozen=True)
class IndexedMesh:
    """Welded triangle mesh, positions rebased to a double-precision origin.

    positions/normals are float32; colors and triplanar weights are filled by
    the shading stage and stay None until then.
    """

    positions: np.ndarray       # (n, 3) float32, camera-relative
    normals: np.ndarray         # (n, 3) float32
    triangles: np.ndarray       # (m, 3) int32
    rebase_origin: np.ndarray   # (3,) float64
    colors: np.ndarray | None = None     # (n, 3) float32 in [0, 1]
    triplanar: np.ndarray | None = None  # (n, 3) float32, rows sum to 1

    @property
    def vertex_count(self) -> int:
        return self.positions.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]

    def world_positions(self) -> np.ndarray:
        return self.positions.astype(np.float64) + self.rebase_origin


def weld(patches, rebase_origin) -> IndexedMesh:
    """Merge patches into one indexed mesh by canonical parameter keys.

    Vertices agreeing on (owning face, u, v) quantized at 2^-32 merge into
    one; their world positions must agree to the bit, otherwise an upstream
    stage produced a seam bug and WeldConsistencyError is raised. The result
    is independent of the order patches are supplied in. Normals are
    area-weighted triangle normal sums, computed in double precision.
    """
    patches = sorted(patches, key=lambda p: p.key)
    if not patches:
        raise InvalidArgument("weld requires at least one patch")
    origin = np.asarray(rebase_origin, dtype=np.float64)
    if origin.shape != (3,):
        raise InvalidArgument("rebase_origin must be a 3D point")

    keys = np.vstack([_weld_keys(p) for p in patches])
    positions = np.vstack([p.positions for p in patches])
    tris = []
    offset = 0
    for p in patches:
        tris.append(p.triangles.astype(np.int64) + offset)
        offset += p.vertex_count
    tri_all = np.vstack(tris)

    uniq, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    rep = positions[first]
    if not (positions.view(np.uint64) == rep[inv].view(np.uint64)).all():
        raise WeldConsistencyError(
            "vertices share a canonical key but differ in world position"
        )

    tri = inv[tri_all].astype(np.int32)
    nv = rep.shape[0]

    p0 = rep[tri[:, 0]]
    cross = np.cross(rep[tri[:, 1]] - p0, rep[tri[:, 2]] - p0)
    normals = np.zeros((nv, 3), dtype=np.float64)
    for corner in range(3):
        idx = tri[:, corner]
        for c in range(3):
            normals[:, c] += np.bincount(idx, weights=cross[:, c], minlength=nv)
    norm = np.linalg.norm(normals, axis=1)
    safe = norm > 0.0
    normals[safe] /= norm[safe, None]
    normals[~safe] = (0.0, 0.0, 1.0)

    return IndexedMesh(
        positions=(rep - origin).astype(np.float32),
        normals=normals.astype(np.float32),
        triangles=tri,
        rebase_origin=origin,
    )
