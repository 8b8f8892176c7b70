"""OBJ and binary PLY export/import for welded meshes.

OBJ carries positions (with the common unofficial `v x y z r g b` vertex-color
extension when colors exist), normals, and `f v//vn` faces. PLY is binary
little-endian and additionally carries triplanar weights as custom float
properties, making it the lossless interchange format. Float text formatting
uses repr (shortest round-trip), so exports are byte-stable across runs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import HeightmapFormatError, InvalidArgument
from .tessellator import IndexedMesh


def _fmt(x: float) -> str:
    return repr(float(x))


def write_obj(mesh: IndexedMesh, path) -> Path:
    path = Path(path)
    pos = mesh.positions
    nrm = mesh.normals
    col = mesh.colors
    lines = [
        "# planetforge mesh",
        f"# vertices {mesh.vertex_count} triangles {mesh.triangle_count}",
        f"# rebase_origin {_fmt(mesh.rebase_origin[0])} {_fmt(mesh.rebase_origin[1])} {_fmt(mesh.rebase_origin[2])}",
    ]
    if col is None:
        for p in pos:
            lines.append(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    else:
        for p, c in zip(pos, col):
            lines.append(
                f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])} {_fmt(c[0])} {_fmt(c[1])} {_fmt(c[2])}"
            )
    for n in nrm:
        lines.append(f"vn {_fmt(n[0])} {_fmt(n[1])} {_fmt(n[2])}")
    for t in mesh.triangles:
        a, b, c = int(t[0]) + 1, int(t[1]) + 1, int(t[2]) + 1
        lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """Positions (n, 3) float64 and triangles (m, 3) int32 from an OBJ file."""
    path = Path(path)
    positions: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for line in path.read_text(encoding="ascii", errors="replace").splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            positions.append((float(parts[1]), float(parts[2]), float(parts[3])))
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            if len(idx) != 3:
                raise HeightmapFormatError(f"{path}: face with {len(idx)} vertices; only triangles supported")
            faces.append(tuple(idx))
    if not positions or not faces:
        raise HeightmapFormatError(f"{path}: no vertices or faces found")
    return np.array(positions, dtype=np.float64), np.array(faces, dtype=np.int32)


def write_ply(mesh: IndexedMesh, path) -> Path:
    path = Path(path)
    n = mesh.vertex_count
    m = mesh.triangle_count
    has_color = mesh.colors is not None
    has_weights = mesh.triplanar is not None

    header = ["ply", "format binary_little_endian 1.0", "comment planetforge mesh"]
    header.append(
        "comment rebase_origin "
        + " ".join(_fmt(x) for x in mesh.rebase_origin)
    )
    header.append(f"element vertex {n}")
    fields: list[tuple[str, str]] = [("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                                     ("nx", "<f4"), ("ny", "<f4"), ("nz", "<f4")]
    for name, _ in fields:
        header.append(f"property float {name}")
    if has_color:
        for cname in ("red", "green", "blue"):
            header.append(f"property uchar {cname}")
            fields.append((cname, "<u1"))
    if has_weights:
        for wname in ("weight_x", "weight_y", "weight_z"):
            header.append(f"property float {wname}")
            fields.append((wname, "<f4"))
    header.append(f"element face {m}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")

    vdata = np.empty(n, dtype=[(fname, ftype) for fname, ftype in fields])
    vdata["x"], vdata["y"], vdata["z"] = mesh.positions.T
    vdata["nx"], vdata["ny"], vdata["nz"] = mesh.normals.T
    if has_color:
        q = np.clip(np.rint(mesh.colors * 255.0), 0, 255).astype(np.uint8)
        vdata["red"], vdata["green"], vdata["blue"] = q.T
    if has_weights:
        vdata["weight_x"], vdata["weight_y"], vdata["weight_z"] = mesh.triplanar.T

    fdata = np.empty(m, dtype=[("count", "<u1"), ("idx", "<i4", (3,))])
    fdata["count"] = 3
    fdata["idx"] = mesh.triangles

    with path.open("wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(vdata.tobytes())
        fh.write(fdata.tobytes())
    return path


def read_ply(path) -> tuple[np.ndarray, np.ndarray]:
    """Positions (n, 3) float64 and triangles (m, 3) int32 from our PLY subset."""
    path = Path(path)
    raw = path.read_bytes()
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply") or end < 0:
        raise HeightmapFormatError(f"{path}: not a PLY file")
    header = raw[:end].decode("ascii").splitlines()
    body = raw[end + len(b"end_header\n"):]

    if "format binary_little_endian 1.0" not in header:
        raise HeightmapFormatError(f"{path}: only binary_little_endian PLY supported")

    n_vertex = n_face = 0
    vfields: list[tuple[str, str]] = []
    section = None
    type_map = {"float": "<f4", "double": "<f8", "uchar": "<u1", "int": "<i4", "uint": "<u4"}
    for line in header:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "element":
            section = parts[1]
            if section == "vertex":
                n_vertex = int(parts[2])
            elif section == "face":
                n_face = int(parts[2])
        elif parts[0] == "property" and section == "vertex":
            if parts[1] == "list":
                raise HeightmapFormatError(f"{path}: list property on vertices unsupported")
            vfields.append((parts[2], type_map[parts[1]]))
        elif parts[0] == "property" and section == "face":
            if parts[1] != "list" or parts[2] != "uchar" or parts[3] != "int":
                raise HeightmapFormatError(f"{path}: unsupported face property {line!r}")

    vdtype = np.dtype(vfields)
    vbytes = n_vertex * vdtype.itemsize
    verts = np.frombuffer(body[:vbytes], dtype=vdtype, count=n_vertex)
    fdtype = np.dtype([("count", "<u1"), ("idx", "<i4", (3,))])
    faces = np.frombuffer(body[vbytes : vbytes + n_face * fdtype.itemsize], dtype=fdtype, count=n_face)
    if not (faces["count"] == 3).all():
        raise HeightmapFormatError(f"{path}: non-triangle faces present")
    positions = np.stack(
        [verts["x"].astype(np.float64), verts["y"].astype(np.float64), verts["z"].astype(np.float64)],
        axis=1,
    )
    return positions, faces["idx"].astype(np.int32)


def write_mesh(mesh: IndexedMesh, path, fmt: str | None = None) -> Path:
    """Dispatch on format name or file extension."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "obj":
        return write_obj(mesh, path)
    if fmt == "ply":
        return write_ply(mesh, path)
    raise InvalidArgument(f"unknown mesh format {fmt!r}")


def read_mesh(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return read_obj(path)
    if suffix == ".ply":
        return read_ply(path)
    raise HeightmapFormatError(f"{path}: unsupported mesh extension {suffix!r}")
