"""Frame pipeline: selection -> tessellation -> crack fix -> detail -> weld.

The batched paths here produce bit-identical results to calling the per-patch
operations one key at a time: every numeric kernel involved is elementwise, so
how vertices are grouped into numpy calls cannot change any output value.
Batching exists purely to amortize per-call overhead on million-vertex frames.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .lodtree import ActiveSet, CameraState, select_lod
from .noise import _fbm3_core
from .parallel import parallel_map
from .spheremap import PlanetSpec, canonicalize_arrays, surface_positions, unit_sphere_dirs
from .tessellator import (
    IndexedMesh,
    PatchMesh,
    fix_cracks,
    tessellate_patch,
    patch_grid_params,
    weld,
    _WINDING_FLIP,
)

_CHUNK = 262_144


def _chunked(fn, n: int, chunk: int = _CHUNK):
    """Evaluate fn(slice) over row chunks and concatenate, preserving order."""
    if n <= chunk:
        return fn(slice(0, n))
    slices = [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    return np.concatenate(parallel_map(fn, slices), axis=0)


@dataclass
class FrameStats:
    """Per-frame pipeline statistics.

    Wall times are carried in memory but excluded from serialized rows unless
    asked for, keeping emitted artifacts byte-identical across runs.
    """

    frame: int
    camera_position: tuple[float, float, float]
    key_count: int
    level_histogram: list[int]
    triangle_count: int
    vertex_count: int
    select_ms: float
    tessellate_ms: float

    def to_row(self, include_timings: bool = False) -> dict:
        row = {
            "frame": self.frame,
            "camera_position": list(self.camera_position),
            "key_count": self.key_count,
            "level_histogram": self.level_histogram,
            "triangle_count": self.triangle_count,
            "vertex_count": self.vertex_count,
        }
        if include_timings:
            row["select_ms"] = self.select_ms
            row["tessellate_ms"] = self.tessellate_ms
        return row


def _triangle_template(nn: int, flip: bool) -> np.ndarray:
    a, b = np.meshgrid(np.arange(nn), np.arange(nn), indexing="xy")
    a = a.ravel()
    b = b.ravel()
    ll = b * (nn + 1) + a
    lr = ll + 1
    ul = ll + (nn + 1)
    ur = ul + 1
    if flip:
        return np.concatenate(
            [np.stack([ll, ur, lr], axis=1), np.stack([ll, ul, ur], axis=1)]
        ).astype(np.int32)
    return np.concatenate(
        [np.stack([ll, lr, ur], axis=1), np.stack([ll, ur, ul], axis=1)]
    ).astype(np.int32)


def tessellate_active_set(
    aset: ActiveSet,
    inner_level: int,
    spec: PlanetSpec,
    active_level: int | None = None,
) -> list[PatchMesh]:
    """Tessellate every active key, crack-fixed and (when the frame's finest
    level reaches max_depth) detail-displaced.

    active_level is a frame-global zoom state shared by all patches; detail
    displacement keys off the vertex world position alone, so coarse and fine
    patches displace shared boundary vertices identically.
    """
    if active_level is None:
        active_level = max((k.level for k in aset.keys), default=0)
    nn = 1 << inner_level
    per_patch = (nn + 1) * (nn + 1)
    nkeys = len(aset.keys)

    all_u = np.empty(nkeys * per_patch, dtype=np.float64)
    all_v = np.empty_like(all_u)
    all_f = np.empty(nkeys * per_patch, dtype=np.int64)
    for idx, key in enumerate(aset.keys):
        us, vs = patch_grid_params(key, inner_level)
        sl = slice(idx * per_patch, (idx + 1) * per_patch)
        all_u[sl] = us
        all_v[sl] = vs
        all_f[sl] = key.face

    cf, cu, cv = canonicalize_arrays(all_f, all_u, all_v)
    positions = _chunked(
        lambda s: surface_positions(cf[s], cu[s], cv[s], spec), cf.shape[0]
    )

    templates = {
        False: _triangle_template(nn, False),
        True: _triangle_template(nn, True),
    }
    ai = np.tile(np.arange(nn + 1), nn + 1)
    bi = np.repeat(np.arange(nn + 1), nn + 1)
    boundary = np.stack([ai == 0, ai == nn, bi == 0, bi == nn], axis=1)

    def build(idx: int) -> PatchMesh:
        key = aset.keys[idx]
        sl = slice(idx * per_patch, (idx + 1) * per_patch)
        patch = PatchMesh(
            key=key,
            spec=spec,
            params=np.stack([all_u[sl], all_v[sl]], axis=1),
            canon_face=cf[sl],
            canon_u=cu[sl],
            canon_v=cv[sl],
            positions=positions[sl],
            triangles=templates[_WINDING_FLIP[key.face]],
            boundary=boundary,
        )
        nl = aset.neighbor_levels[idx]
        if any(lv == key.level + 1 for lv in nl):
            patch = fix_cracks(patch, nl)
        return patch

    patches = [build(i) for i in range(nkeys)]

    if active_level == spec.max_depth:
        counts = [p.vertex_count for p in patches]
        cat_pos = np.vstack([p.positions for p in patches])
        cat_f = np.concatenate([p.canon_face for p in patches])
        cat_u = np.concatenate([p.canon_u for p in patches])
        cat_v = np.concatenate([p.canon_v for p in patches])
        dirs = unit_sphere_dirs(cat_f, cat_u, cat_v)
        disp = spec.detail_noise.amplitude * _chunked(
            lambda s: _fbm3_core(cat_pos[s, 0], cat_pos[s, 1], cat_pos[s, 2], spec.detail_noise),
            cat_pos.shape[0],
        )
        displaced = cat_pos + dirs * disp[:, None]
        out = []
        start = 0
        for p, n in zip(patches, counts):
            out.append(replace(p, positions=displaced[start : start + n]))
            start += n
        patches = out
    return patches


def build_frame(
    camera: CameraState,
    spec: PlanetSpec,
    cfg: RunConfig | None = None,
    lod=None,
    inner_level: int | None = None,
    frame_index: int = 0,
) -> tuple[ActiveSet, list[PatchMesh], IndexedMesh, FrameStats]:
    """Run the full per-frame pipeline and weld to a camera-relative mesh."""
    if cfg is not None:
        lod = cfg.lod
        inner_level = cfg.inner_level
    if lod is None or inner_level is None:
        raise ValueError("either cfg or both lod and inner_level are required")

    t0 = time.perf_counter()
    aset = select_lod(camera, spec, lod)
    t1 = time.perf_counter()
    patches = tessellate_active_set(aset, inner_level, spec)
    mesh = weld(patches, np.asarray(camera.position, dtype=np.float64))
    t2 = time.perf_counter()

    max_depth = lod.max_depth if lod.max_depth is not None else spec.max_depth
    hist = aset.level_histogram(max_level=max_depth)
    stats = FrameStats(
        frame=frame_index,
        camera_position=tuple(camera.position),
        key_count=len(aset.keys),
        level_histogram=hist,
        triangle_count=mesh.triangle_count,
        vertex_count=mesh.vertex_count,
        select_ms=(t1 - t0) * 1e3,
        tessellate_ms=(t2 - t1) * 1e3,
    )
    return aset, patches, mesh, stats


def frustum_filter(mesh: IndexedMesh, camera: CameraState, vertical_fov: float) -> IndexedMesh:
    """Drop triangles entirely outside a square-aspect view frustum.

    A conservative export-time filter: a triangle survives if any vertex lies
    in front of the camera within the field of view. Vertex order is
    preserved, so the result is deterministic.
    """
    fwd = np.asarray(camera.forward, dtype=np.float64)
    up = np.asarray(camera.up, dtype=np.float64)
    right = np.cross(fwd, up)
    right /= np.linalg.norm(right)
    true_up = np.cross(right, fwd)

    rel = mesh.world_positions() - np.asarray(camera.position, dtype=np.float64)
    z = rel @ fwd
    tan_half = math.tan(vertical_fov / 2.0)
    inside = (z > 0.0) & (np.abs(rel @ true_up) <= z * tan_half) & (np.abs(rel @ right) <= z * tan_half)

    keep_tri = inside[mesh.triangles].any(axis=1)
    tri = mesh.triangles[keep_tri]
    used = np.zeros(mesh.vertex_count, dtype=bool)
    used[tri.ravel()] = True
    remap = np.cumsum(used) - 1
    new_tri = remap[tri].astype(np.int32)

    return IndexedMesh(
        positions=mesh.positions[used],
        normals=mesh.normals[used],
        triangles=new_tri,
        rebase_origin=mesh.rebase_origin,
        colors=None if mesh.colors is None else mesh.colors[used],
        triplanar=None if mesh.triplanar is None else mesh.triplanar[used],
    )
