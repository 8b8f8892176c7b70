"""planetforge: deterministic procedural planets and multi-resolution terrains.

Pipeline: fractal-noise elevation over a cube-to-sphere mapping, camera-driven
restricted-quadtree LOD selection, crack-free adaptive tessellation with
finest-level detail displacement, welding into a watertight mesh, and vertex
shading, all as verifiable CPU passes.
"""

from .noise import NoiseSpec, diamond_square, fbm3, perlin3, tiled_detail
from .heightfield import (
    DiamondSquareParams,
    HeightField,
    export_heightfield,
    generate_heightfield,
    import_heightfield,
    sample_bilinear,
)
from .spheremap import (
    Edge,
    Face,
    FaceCoord,
    PlanetSpec,
    canonical_face_coord,
    face_adjacency,
    face_to_unit_sphere,
    surface_position,
)
from .lodtree import ActiveSet, CameraState, LodConfig, QuadKey, neighbor, restrict, select_lod
from .tessellator import IndexedMesh, PatchMesh, apply_detail, fix_cracks, tessellate_patch, weld
from .shading import ColorRamp, shade_vertices, triplanar_weights
from .pipeline import FrameStats, build_frame, tessellate_active_set
from .config import RunConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "CameraState",
    "ColorRamp",
    "DiamondSquareParams",
    "Edge",
    "Face",
    "FaceCoord",
    "FrameStats",
    "HeightField",
    "IndexedMesh",
    "LodConfig",
    "NoiseSpec",
    "PatchMesh",
    "PlanetSpec",
    "QuadKey",
    "RunConfig",
    "apply_detail",
    "build_frame",
    "canonical_face_coord",
    "diamond_square",
    "export_heightfield",
    "face_adjacency",
    "face_to_unit_sphere",
    "fbm3",
    "fix_cracks",
    "generate_heightfield",
    "import_heightfield",
    "load_config",
    "neighbor",
    "parse_config",
    "perlin3",
    "restrict",
    "sample_bilinear",
    "select_lod",
    "shade_vertices",
    "surface_position",
    "tessellate_active_set",
    "tessellate_patch",
    "triplanar_weights",
    "weld",
]
