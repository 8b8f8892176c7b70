"""Command-line front end: gen-heightmap, gen-planet, flythrough, validate.

Exit codes: 0 success, 1 invariant/validation failure, 2 usage or config
error. Failures emit a machine-readable JSON object on stderr. All commands
are deterministic given (config, seed, trajectory); wall-clock timings are
only emitted when --timings is passed so artifacts stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .errors import HeightmapFormatError, InvalidArgument, OutOfDomain, WeldConsistencyError
from .heightfield import export_heightfield, generate_heightfield
from .lodtree import CameraState
from .meshio import read_mesh, write_mesh
from .pipeline import build_frame, frustum_filter
from .shading import shade_vertices
from .validate import audit_mesh, find_t_junctions

_USAGE_ERRORS = (ConfigError, HeightmapFormatError, InvalidArgument, OutOfDomain)


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")
    return code


def _parse_camera(text: str) -> CameraState:
    parts = [float(x) for x in text.split(",")]
    if len(parts) == 3:
        return CameraState.looking_at_origin(parts)
    if len(parts) == 6:
        fwd = np.array(parts[3:], dtype=np.float64)
        norm = np.linalg.norm(fwd)
        if norm == 0:
            raise ConfigError("camera forward vector must be nonzero")
        fwd /= norm
        ref = np.array([0.0, 0.0, 1.0]) if abs(fwd[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        right = np.cross(fwd, ref)
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return CameraState(tuple(parts[:3]), tuple(fwd), tuple(up))
    raise ConfigError("--camera must be 'x,y,z' or 'x,y,z,fx,fy,fz'")


def cmd_gen_heightmap(cfg: RunConfig, out_path: Path) -> int:
    if cfg.heightmap is None:
        raise ConfigError("config has no 'heightmap' section")
    hm = cfg.heightmap
    source = hm.noise if hm.source == "fbm" else hm.diamond_square
    field = generate_heightfield(
        source, hm.width, hm.height, hm.horizontal_extent, vertical_scale=hm.vertical_scale
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written = export_heightfield(field, out_path, fmt=hm.fmt)
    summary = {
        "out": str(written),
        "sidecar": str(written.with_suffix(".meta.json")),
        "width": field.width,
        "height": field.height,
        "min": float(field.cells.min()),
        "max": float(field.cells.max()),
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def _shade_and_export(cfg: RunConfig, camera: CameraState, mesh, out_path: Path,
                      frustum_cull: bool):
    shaded = shade_vertices(
        mesh, cfg.ramp, cfg.light_direction, cfg.planet, ambient_floor=cfg.ambient_floor
    )
    if frustum_cull:
        shaded = frustum_filter(shaded, camera, cfg.lod.vertical_fov)
    write_mesh(shaded, out_path, fmt=cfg.export_format)
    return shaded


def cmd_gen_planet(cfg: RunConfig, camera: CameraState, out_path: Path,
                   frustum_cull: bool, timings: bool) -> int:
    aset, patches, mesh, stats = build_frame(camera, cfg.planet, cfg=cfg)
    audit = audit_mesh(mesh.world_positions(), mesh.triangles)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _shade_and_export(cfg, camera, mesh, out_path, frustum_cull or cfg.frustum_cull)

    report = {
        "schema": 1,
        "config_hash": cfg.config_hash(),
        "frame": stats.to_row(include_timings=timings),
        "audit": audit,
        "mesh_path": str(out_path),
        "frustum_culled": bool(frustum_cull or cfg.frustum_cull),
    }
    report_path = out_path.with_suffix(".report.json")
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(json.dumps({"mesh": str(out_path), "report": str(report_path)},
                                sort_keys=True) + "\n")
    if not audit["watertight"]:
        return _fail(1, "validation", f"welded planet mesh failed watertight audit: {audit}")
    return 0


def _load_trajectory(path: Path) -> list[CameraState]:
    if not path.exists():
        raise ConfigError(f"trajectory file {path} not found")
    cameras = []
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            pos = row["position"]
            if "forward" in row:
                cam = CameraState(tuple(pos), tuple(row["forward"]), tuple(row["up"]))
            else:
                cam = CameraState.looking_at_origin(pos)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"trajectory line {ln + 1} malformed: {exc}") from exc
        cameras.append(cam)
    if not cameras:
        raise ConfigError(f"trajectory file {path} contains no frames")
    return cameras


def cmd_flythrough(cfg: RunConfig, trajectory: Path, out_dir: Path,
                   emit_meshes: bool, timings: bool) -> int:
    cameras = _load_trajectory(trajectory)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats_path = out_dir / "framestats.jsonl"
    with stats_path.open("w", encoding="utf-8") as fh:
        for idx, camera in enumerate(cameras):
            aset, patches, mesh, stats = build_frame(camera, cfg.planet, cfg=cfg, frame_index=idx)
            fh.write(json.dumps(stats.to_row(include_timings=timings), sort_keys=True) + "\n")
            if emit_meshes:
                _shade_and_export(
                    cfg, camera, mesh,
                    out_dir / f"frame_{idx:04d}.{cfg.export_format}",
                    cfg.frustum_cull,
                )
    sys.stdout.write(json.dumps({"frames": len(cameras), "stats": str(stats_path)},
                                sort_keys=True) + "\n")
    return 0


def cmd_validate(path: Path, checks: list[str]) -> int:
    if not path.exists():
        raise ConfigError(f"path {path} not found")
    if path.suffix.lower() == ".json":
        report = json.loads(path.read_text(encoding="utf-8"))
        audit = report.get("audit")
        if audit is None:
            raise ConfigError(f"{path} is not a planet report (no 'audit' section)")
        result = {"source": str(path), "audit": audit, "passed": bool(audit.get("watertight"))}
        sys.stdout.write(json.dumps(result, sort_keys=True, indent=2) + "\n")
        return 0 if result["passed"] else _fail(1, "validation", "report audit not watertight")

    positions, triangles = read_mesh(path)
    result: dict = {"source": str(path), "checks": checks}
    passed = True
    if "watertight" in checks:
        audit = audit_mesh(positions, triangles)
        result["audit"] = audit
        passed &= audit["closed"] and audit["euler_characteristic"] == 2
    if "degenerate" in checks:
        audit = result.get("audit") or audit_mesh(positions, triangles)
        result["zero_area_triangles"] = audit["zero_area_triangles"]
        passed &= audit["zero_area_triangles"] == 0
    if "tjunction" in checks:
        span = float(np.ptp(positions, axis=0).max()) if len(positions) else 1.0
        tj = find_t_junctions(positions, triangles, tol=1e-9 * max(span, 1.0))
        result["t_junctions"] = tj
        passed &= not tj
    result["passed"] = bool(passed)
    sys.stdout.write(json.dumps(result, sort_keys=True, indent=2) + "\n")
    return 0 if passed else _fail(1, "validation", "mesh failed validation checks")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planetforge",
        description="Deterministic procedural planet and terrain generator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_hm = sub.add_parser("gen-heightmap", help="generate a heightmap plus sidecar")
    p_hm.add_argument("--config", required=True)
    p_hm.add_argument("--seed", type=int, default=None, help="override config noise seeds")
    p_hm.add_argument("--out", required=True)

    p_gp = sub.add_parser("gen-planet", help="generate a planet mesh and report")
    p_gp.add_argument("--config", required=True)
    p_gp.add_argument("--seed", type=int, default=None)
    p_gp.add_argument("--camera", required=True, help="'x,y,z' or 'x,y,z,fx,fy,fz'")
    p_gp.add_argument("--out", required=True)
    p_gp.add_argument("--frustum-cull", action="store_true")
    p_gp.add_argument("--timings", action="store_true", help="include wall times in the report")

    p_ft = sub.add_parser("flythrough", help="replay a camera trajectory, emit frame stats")
    p_ft.add_argument("--config", required=True)
    p_ft.add_argument("--seed", type=int, default=None)
    p_ft.add_argument("--trajectory", required=True, help="JSONL of camera rows")
    p_ft.add_argument("--out", required=True, help="output directory")
    p_ft.add_argument("--emit-meshes", action="store_true")
    p_ft.add_argument("--timings", action="store_true")

    p_val = sub.add_parser("validate", help="audit a mesh or report file")
    p_val.add_argument("path")
    p_val.add_argument(
        "--checks",
        default="watertight,degenerate",
        help="comma list from: watertight, degenerate, tjunction "
        "(tjunction is a quadratic brute-force scan meant for desk-scale fixtures)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "gen-heightmap":
            cfg = load_config(args.config, seed_override=args.seed)
            return cmd_gen_heightmap(cfg, Path(args.out))
        if args.command == "gen-planet":
            cfg = load_config(args.config, seed_override=args.seed)
            camera = _parse_camera(args.camera)
            return cmd_gen_planet(cfg, camera, Path(args.out), args.frustum_cull, args.timings)
        if args.command == "flythrough":
            cfg = load_config(args.config, seed_override=args.seed)
            return cmd_flythrough(cfg, Path(args.trajectory), Path(args.out),
                                  args.emit_meshes, args.timings)
        if args.command == "validate":
            checks = [c.strip() for c in args.checks.split(",") if c.strip()]
            unknown = set(checks) - {"watertight", "degenerate", "tjunction"}
            if unknown:
                raise ConfigError(f"unknown checks: {sorted(unknown)}")
            return cmd_validate(Path(args.path), checks)
        raise ConfigError(f"unknown command {args.command!r}")
    except _USAGE_ERRORS as exc:
        return _fail(2, type(exc).__name__, str(exc))
    except WeldConsistencyError as exc:
        return _fail(1, "WeldConsistencyError", str(exc))


if __name__ == "__main__":
    sys.exit(main())
