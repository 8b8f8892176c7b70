"""Run configuration: strict JSON parsing, defaults, and config hashing.

Schema version 1. Unknown fields anywhere in the document are rejected with
the offending path named, so fixtures detect drift instead of silently
ignoring typos. The config hash is the sha256 of the resolved document in
canonical JSON form and is embedded in every report.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .heightfield import DiamondSquareParams
from .noise import NoiseSpec
from .shading import DEFAULT_AMBIENT_FLOOR, ColorRamp
from .spheremap import PlanetSpec
from .lodtree import LodConfig

_NOISE_FIELDS = {"seed", "octaves", "lacunarity", "gain", "frequency", "amplitude"}


def _check_fields(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)} in {where}")


def _noise_spec(data: dict, where: str) -> NoiseSpec:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    _check_fields(data, _NOISE_FIELDS, where)
    if "seed" not in data:
        raise ConfigError(f"{where}.seed is required")
    try:
        return NoiseSpec(**data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class HeightmapConfig:
    """Inputs for the gen-heightmap command."""

    source: str  # "fbm" or "diamond_square"
    width: int
    height: int
    horizontal_extent: float
    vertical_scale: float = 1.0
    fmt: str = "pgm16"
    noise: NoiseSpec | None = None
    diamond_square: DiamondSquareParams | None = None


@dataclass(frozen=True)
class RunConfig:
    planet: PlanetSpec
    lod: LodConfig
    ramp: ColorRamp
    light_direction: tuple[float, float, float]
    ambient_floor: float
    inner_level: int
    export_format: str
    frustum_cull: bool
    output_dir: str
    heightmap: HeightmapConfig | None
    resolved: dict = field(repr=False, default_factory=dict)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.resolved, sort_keys=True, separators=(",", ":")).encode("utf-8")
        ).hexdigest()


def _parse_planet(data: dict) -> PlanetSpec:
    if not isinstance(data, dict):
        raise ConfigError("planet must be an object")
    _check_fields(
        data,
        {"schema", "base_radius", "oblateness", "max_depth", "elevation_noise", "detail_noise"},
        "planet",
    )
    if data.get("schema", 1) != 1:
        raise ConfigError(f"planet.schema must be 1, got {data.get('schema')!r}")
    for req in ("base_radius", "elevation_noise", "detail_noise"):
        if req not in data:
            raise ConfigError(f"planet.{req} is required")
    try:
        return PlanetSpec(
            base_radius=float(data["base_radius"]),
            oblateness=float(data.get("oblateness", 0.0)),
            max_depth=int(data.get("max_depth", 8)),
            elevation_noise=_noise_spec(data["elevation_noise"], "planet.elevation_noise"),
            detail_noise=_noise_spec(data["detail_noise"], "planet.detail_noise"),
        )
    except ValueError as exc:
        raise ConfigError(f"planet: {exc}") from exc


def _parse_lod(data: dict) -> LodConfig:
    _check_fields(data, {"split_threshold", "max_depth", "viewport_height_px", "vertical_fov"}, "lod")
    try:
        return LodConfig(
            split_threshold=float(data.get("split_threshold", 8.0)),
            max_depth=int(data["max_depth"]) if "max_depth" in data else None,
            viewport_height_px=int(data.get("viewport_height_px", 1080)),
            vertical_fov=float(data.get("vertical_fov", math.pi / 3)),
        )
    except ValueError as exc:
        raise ConfigError(f"lod: {exc}") from exc


def _parse_ramp(data: dict) -> ColorRamp:
    _check_fields(data, {"stops", "slope_rock_threshold", "rock_color", "elevation_range"}, "ramp")
    stops_raw = data.get("stops")
    if not stops_raw:
        raise ConfigError("ramp.stops is required and must be non-empty")
    stops = []
    for i, entry in enumerate(stops_raw):
        try:
            frac, rgb = entry
            stops.append((float(frac), (float(rgb[0]), float(rgb[1]), float(rgb[2]))))
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"ramp.stops[{i}] must be [fraction, [r, g, b]]") from exc
    kwargs = {}
    if "rock_color" in data:
        rc = data["rock_color"]
        kwargs["rock_color"] = (float(rc[0]), float(rc[1]), float(rc[2]))
    if "elevation_range" in data and data["elevation_range"] is not None:
        lo, hi = data["elevation_range"]
        kwargs["elevation_range"] = (float(lo), float(hi))
    try:
        return ColorRamp(
            stops=tuple(stops),
            slope_rock_threshold=float(data.get("slope_rock_threshold", 0.0)),
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError(f"ramp: {exc}") from exc


def _parse_heightmap(data: dict) -> HeightmapConfig:
    _check_fields(
        data,
        {"source", "width", "height", "horizontal_extent", "vertical_scale", "format",
         "noise", "diamond_square"},
        "heightmap",
    )
    source = data.get("source")
    if source not in ("fbm", "diamond_square"):
        raise ConfigError(f"heightmap.source must be 'fbm' or 'diamond_square', got {source!r}")
    noise = None
    ds = None
    if source == "fbm":
        if "noise" not in data:
            raise ConfigError("heightmap.noise is required for source 'fbm'")
        noise = _noise_spec(data["noise"], "heightmap.noise")
    else:
        if "diamond_square" not in data:
            raise ConfigError("heightmap.diamond_square is required for source 'diamond_square'")
        dsd = data["diamond_square"]
        _check_fields(dsd, {"size_exponent", "corners", "roughness", "seed"}, "heightmap.diamond_square")
        try:
            ds = DiamondSquareParams(
                size_exponent=int(dsd["size_exponent"]),
                corners=tuple(float(c) for c in dsd.get("corners", (0.0, 0.0, 0.0, 0.0))),
                roughness=float(dsd.get("roughness", 1.0)),
                seed=int(dsd.get("seed", 0)),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"heightmap.diamond_square: {exc}") from exc
    fmt = data.get("format", "pgm16")
    if fmt not in ("pgm16", "png16"):
        raise ConfigError(f"heightmap.format must be 'pgm16' or 'png16', got {fmt!r}")
    try:
        return HeightmapConfig(
            source=source,
            width=int(data["width"]),
            height=int(data["height"]),
            horizontal_extent=float(data["horizontal_extent"]),
            vertical_scale=float(data.get("vertical_scale", 1.0)),
            fmt=fmt,
            noise=noise,
            diamond_square=ds,
        )
    except KeyError as exc:
        raise ConfigError(f"heightmap.{exc.args[0]} is required") from exc


def parse_config(data: dict, seed_override: int | None = None) -> RunConfig:
    """Validate a config document; optionally override the noise seeds.

    The seed override replaces the elevation seed with N and the detail seed
    with N+1 before hashing, so reports reflect the effective configuration.
    """
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _check_fields(
        data,
        {"schema", "planet", "lod", "ramp", "light", "tessellation", "export", "heightmap", "output"},
        "config",
    )
    if data.get("schema") != 1:
        raise ConfigError(f"config.schema must be 1, got {data.get('schema')!r}")
    if "planet" not in data:
        raise ConfigError("config.planet is required")

    resolved = json.loads(json.dumps(data))  # deep copy
    if seed_override is not None:
        for section, delta in (("elevation_noise", 0), ("detail_noise", 1)):
            if section in resolved.get("planet", {}):
                resolved["planet"][section]["seed"] = (int(seed_override) + delta) % 2**64
        hm = resolved.get("heightmap")
        if hm and hm.get("noise") is not None:
            hm["noise"]["seed"] = int(seed_override) % 2**64
        if hm and hm.get("diamond_square") is not None:
            hm["diamond_square"]["seed"] = int(seed_override) % 2**64

    planet = _parse_planet(resolved["planet"])
    lod = _parse_lod(resolved.get("lod", {}))
    ramp = _parse_ramp(resolved.get("ramp", {"stops": [[0.0, [0.5, 0.5, 0.5]], [1.0, [1.0, 1.0, 1.0]]]}))

    light = resolved.get("light", {})
    _check_fields(light, {"direction", "ambient_floor"}, "light")
    direction = tuple(float(x) for x in light.get("direction", (-1.0, -0.25, -0.5)))
    if len(direction) != 3:
        raise ConfigError("light.direction must be a 3-vector")
    ambient = float(light.get("ambient_floor", DEFAULT_AMBIENT_FLOOR))

    tess = resolved.get("tessellation", {})
    _check_fields(tess, {"inner_level"}, "tessellation")
    inner_level = int(tess.get("inner_level", 4))
    if not 0 <= inner_level <= 6:
        raise ConfigError("tessellation.inner_level must be in [0, 6]")

    export = resolved.get("export", {})
    _check_fields(export, {"format", "frustum_cull"}, "export")
    export_format = export.get("format", "obj")
    if export_format not in ("obj", "ply"):
        raise ConfigError(f"export.format must be 'obj' or 'ply', got {export_format!r}")
    frustum_cull = bool(export.get("frustum_cull", False))

    output = resolved.get("output", {})
    _check_fields(output, {"dir"}, "output")
    output_dir = str(output.get("dir", "out"))

    heightmap = _parse_heightmap(resolved["heightmap"]) if "heightmap" in resolved else None

    return RunConfig(
        planet=planet,
        lod=lod,
        ramp=ramp,
        light_direction=direction,
        ambient_floor=ambient,
        inner_level=inner_level,
        export_format=export_format,
        frustum_cull=frustum_cull,
        output_dir=output_dir,
        heightmap=heightmap,
        resolved=resolved,
    )


def load_config(path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data, seed_override=seed_override)
