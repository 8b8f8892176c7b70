"""Watertightness, T-junction, and degeneracy audits for triangle meshes.

The audits are deliberately independent of the construction path: they look
only at positions and index triples, counting undirected edge incidences and
scanning points against segments, so they can confirm (or indict) the
tessellator from the outside.
"""

from __future__ import annotations

import numpy as np


def mesh_edges(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Undirected edges and their incidence counts."""
    e = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0, return_counts=True)


def audit_mesh(positions: np.ndarray, triangles: np.ndarray) -> dict:
    """Closed-2-manifold audit: edge incidence, Euler characteristic, area.

    Returns a plain dict (JSON-friendly) with the counts, the Euler
    characteristic, up to 32 boundary or over-shared edges for diagnostics,
    and the zero-area triangle count.
    """
    positions = np.asarray(positions, dtype=np.float64)
    triangles = np.asarray(triangles)
    edges, counts = mesh_edges(triangles)
    v = int(positions.shape[0])
    e = int(edges.shape[0])
    f = int(triangles.shape[0])
    boundary = edges[counts == 1]
    overshared = edges[counts > 2]

    p0 = positions[triangles[:, 0]]
    cross = np.cross(positions[triangles[:, 1]] - p0, positions[triangles[:, 2]] - p0)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    zero_area = int((areas == 0.0).sum())

    closed = bool((counts == 2).all())
    euler = v - e + f
    return {
        "vertices": v,
        "edges": e,
        "triangles": f,
        "euler_characteristic": euler,
        "closed": closed,
        "boundary_edge_count": int(boundary.shape[0]),
        "boundary_edges": boundary[:32].tolist(),
        "nonmanifold_edge_count": int(overshared.shape[0]),
        "nonmanifold_edges": overshared[:32].tolist(),
        "zero_area_triangles": zero_area,
        "min_triangle_area": float(areas.min()) if f else 0.0,
        "watertight": closed and euler == 2 and zero_area == 0,
    }


def find_t_junctions(
    points: np.ndarray, triangles: np.ndarray, tol: float = 1e-9
) -> list[dict]:
    """Brute-force point-on-segment scan; works in 2D parameter or 3D world space.

    A vertex is a T-junction when it lies within tol of a triangle edge's
    interior (strictly away from both endpoints) without being an endpoint of
    it. Quadratic in mesh size by design; intended for desk-scale fixtures.
    """
    pts = np.asarray(points, dtype=np.float64)
    edges, _ = mesh_edges(np.asarray(triangles))
    found: list[dict] = []
    a = pts[edges[:, 0]]
    b = pts[edges[:, 1]]
    ab = b - a
    ab_len2 = (ab * ab).sum(axis=1)
    for vi in range(pts.shape[0]):
        p = pts[vi]
        usable = ab_len2 > 0.0
        t = np.zeros(edges.shape[0])
        t[usable] = ((p - a[usable]) * ab[usable]).sum(axis=1) / ab_len2[usable]
        interior = (t > 0.0) & (t < 1.0)
        proj = a + t[:, None] * ab
        dist = np.linalg.norm(p - proj, axis=1)
        end_a = np.linalg.norm(p - a, axis=1)
        end_b = np.linalg.norm(p - b, axis=1)
        hits = np.flatnonzero(
            usable & interior & (dist <= tol) & (end_a > tol) & (end_b > tol)
            & (edges[:, 0] != vi) & (edges[:, 1] != vi)
        )
        for h in hits:
            found.append({"vertex": int(vi), "edge": [int(edges[h, 0]), int(edges[h, 1])]})
    return found


def patch_t_junctions(patches, tol: float = 1e-9) -> list[dict]:
    """Parameter-space T-junction scan over a joint set of same-face patches.

    Concatenates the patches' (u, v) parameters and index triples and runs
    the point-on-segment scan in 2D. Patches must share one cube face, since
    parameters from different faces are not comparable.
    """
    faces = {int(p.key.face) for p in patches}
    if len(faces) != 1:
        raise ValueError("parameter-space scan requires patches on one face")
    pts = []
    tris = []
    offset = 0
    for p in patches:
        pts.append(p.params)
        tris.append(p.triangles.astype(np.int64) + offset)
        offset += p.vertex_count
    return find_t_junctions(np.vstack(pts), np.vstack(tris), tol=tol)
