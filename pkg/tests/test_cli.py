import json
from pathlib import Path

import numpy as np
import pytest

from planetforge.cli import main
from planetforge.config import ConfigError, load_config, parse_config
from planetforge.errors import InvalidArgument
from planetforge.meshio import read_obj

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def base_config(max_depth=2, inner_level=1, export="obj"):
    return {
        "schema": 1,
        "planet": {
            "base_radius": 1000.0,
            "oblateness": 0.02,
            "max_depth": max_depth,
            "elevation_noise": {
                "seed": 7, "octaves": 3, "lacunarity": 2.0, "gain": 0.5,
                "frequency": 0.002, "amplitude": 15.0,
            },
            "detail_noise": {
                "seed": 8, "octaves": 2, "lacunarity": 2.0, "gain": 0.5,
                "frequency": 0.05, "amplitude": 1.0,
            },
        },
        "lod": {"split_threshold": 8.0},
        "ramp": {
            "stops": [[0.0, [0.1, 0.2, 0.3]], [1.0, [0.9, 0.9, 0.9]]],
            "slope_rock_threshold": 0.5,
        },
        "tessellation": {"inner_level": inner_level},
        "export": {"format": export},
    }


@pytest.fixture
def config_path(tmp_path):
    def write(data) -> Path:
        p = tmp_path / "config.json"
        p.write_text(json.dumps(data))
        return p

    return write


class TestConfigParsing:
    def test_unknown_root_field_rejected(self):
        data = base_config()
        data["surprise"] = 1
        with pytest.raises(ConfigError, match="surprise"):
            parse_config(data)

    def test_unknown_nested_field_rejected(self):
        data = base_config()
        data["planet"]["elevation_noise"]["persistence"] = 0.5
        with pytest.raises(ConfigError, match="persistence"):
            parse_config(data)

    def test_schema_required(self):
        data = base_config()
        data["schema"] = 2
        with pytest.raises(ConfigError, match="schema"):
            parse_config(data)

    def test_invalid_planet_values(self):
        data = base_config()
        data["planet"]["oblateness"] = 0.7
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_seed_override_changes_hash(self):
        data = base_config()
        a = parse_config(data)
        b = parse_config(data, seed_override=12345)
        assert a.config_hash() != b.config_hash()
        assert b.planet.elevation_noise.seed == 12345
        assert b.planet.detail_noise.seed == 12346

    def test_lod_max_depth_defaults_to_planet(self):
        cfg = parse_config(base_config(max_depth=3))
        assert cfg.lod.max_depth is None
        cfg2 = parse_config({**base_config(), "lod": {"split_threshold": 4.0, "max_depth": 2}})
        assert cfg2.lod.max_depth == 2

    def test_demo_config_parses(self):
        cfg = load_config(CONFIG_DIR / "demo_planet.json")
        assert cfg.planet.base_radius == 1000.0
        assert cfg.heightmap is not None


class TestGenPlanet:
    def test_far_camera_max_depth0_topology(self, config_path, tmp_path, capsys):
        cfgp = config_path(base_config(max_depth=0, inner_level=1))
        out = tmp_path / "planet.obj"
        rc = main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1e9",
                   "--out", str(out)])
        assert rc == 0
        report = json.loads(out.with_suffix(".report.json").read_text())
        assert report["frame"]["key_count"] == 6
        assert report["frame"]["triangle_count"] == 48
        assert report["audit"]["watertight"]
        assert report["audit"]["euler_characteristic"] == 2

    def test_byte_identical_across_runs(self, config_path, tmp_path):
        cfgp = config_path(base_config())
        out1 = tmp_path / "a.obj"
        out2 = tmp_path / "b.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--out", str(out1)]) == 0
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        r1 = json.loads(out1.with_suffix(".report.json").read_text())
        r2 = json.loads(out2.with_suffix(".report.json").read_text())
        r1.pop("mesh_path")
        r2.pop("mesh_path")
        assert r1 == r2

    def test_thread_count_independent(self, config_path, tmp_path, monkeypatch):
        cfgp = config_path(base_config())
        monkeypatch.setenv("PLANETFORGE_THREADS", "1")
        out1 = tmp_path / "t1.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--out", str(out1)]) == 0
        monkeypatch.setenv("PLANETFORGE_THREADS", "4")
        out2 = tmp_path / "t4.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_override_changes_mesh(self, config_path, tmp_path):
        cfgp = config_path(base_config())
        out1 = tmp_path / "s1.obj"
        out2 = tmp_path / "s2.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--out", str(out1)]) == 0
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--seed", "999", "--out", str(out2)]) == 0
        assert out1.read_bytes() != out2.read_bytes()

    def test_ply_export(self, config_path, tmp_path):
        cfgp = config_path(base_config(export="ply"))
        out = tmp_path / "p.ply"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1050",
                     "--out", str(out)]) == 0
        assert out.read_bytes().startswith(b"ply\nformat binary_little_endian 1.0")

    def test_frustum_cull_reduces_mesh(self, config_path, tmp_path):
        cfgp = config_path(base_config())
        full = tmp_path / "full.obj"
        culled = tmp_path / "culled.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1100",
                     "--out", str(full)]) == 0
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1100",
                     "--frustum-cull", "--out", str(culled)]) == 0
        pos_full, tris_full = read_obj(full)
        pos_cull, tris_cull = read_obj(culled)
        assert len(tris_cull) < len(tris_full)
        report = json.loads(culled.with_suffix(".report.json").read_text())
        assert report["frustum_culled"] is True
        assert report["audit"]["watertight"]  # audit runs pre-cull

    def test_bad_camera_exit_2(self, config_path, tmp_path, capsys):
        cfgp = config_path(base_config())
        rc = main(["gen-planet", "--config", str(cfgp), "--camera", "1,2",
                   "--out", str(tmp_path / "x.obj")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert "camera" in err["message"]

    def test_missing_config_exit_2(self, tmp_path):
        rc = main(["gen-planet", "--config", str(tmp_path / "nope.json"),
                   "--camera", "0,0,2000", "--out", str(tmp_path / "x.obj")])
        assert rc == 2

    def test_timings_flag_adds_fields(self, config_path, tmp_path):
        cfgp = config_path(base_config(max_depth=1))
        out = tmp_path / "t.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,1100",
                     "--timings", "--out", str(out)]) == 0
        report = json.loads(out.with_suffix(".report.json").read_text())
        assert "select_ms" in report["frame"]


class TestGenHeightmap:
    def test_pgm_bit_identical(self, config_path, tmp_path):
        data = base_config()
        data["heightmap"] = {
            "source": "fbm", "width": 65, "height": 65, "horizontal_extent": 100.0,
            "noise": {"seed": 3, "octaves": 4, "frequency": 0.05, "amplitude": 10.0},
        }
        cfgp = config_path(data)
        out1 = tmp_path / "h1.pgm"
        out2 = tmp_path / "h2.pgm"
        assert main(["gen-heightmap", "--config", str(cfgp), "--out", str(out1)]) == 0
        assert main(["gen-heightmap", "--config", str(cfgp), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_diamond_square_flat_is_constant(self, config_path, tmp_path):
        data = base_config()
        data["heightmap"] = {
            "source": "diamond_square", "width": 257, "height": 257,
            "horizontal_extent": 50.0,
            "diamond_square": {"size_exponent": 8, "corners": [0, 0, 0, 0],
                               "roughness": 0.0, "seed": 1},
        }
        cfgp = config_path(data)
        out = tmp_path / "ds.pgm"
        assert main(["gen-heightmap", "--config", str(cfgp), "--out", str(out)]) == 0
        raw = out.read_bytes()
        pixels = raw.split(b"65535\n", 1)[1]
        assert pixels == b"\x00" * (257 * 257 * 2)

    def test_demo_config_minmax_matches_sidecar(self, tmp_path, capsys):
        out = tmp_path / "demo.pgm"
        rc = main(["gen-heightmap", "--config", str(CONFIG_DIR / "demo_planet.json"),
                   "--out", str(out)])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        meta = json.loads(out.with_suffix(".meta.json").read_text())
        assert summary["min"] == meta["min"]
        assert summary["max"] == meta["max"]
        from planetforge.heightfield import import_heightfield

        back = import_heightfield(out)
        span = meta["max"] - meta["min"]
        assert back.cells.min() >= meta["min"] - span / 65535
        assert back.cells.max() <= meta["max"] + span / 65535

    def test_no_heightmap_section_exit_2(self, config_path, tmp_path):
        cfgp = config_path(base_config())
        rc = main(["gen-heightmap", "--config", str(cfgp), "--out", str(tmp_path / "h.pgm")])
        assert rc == 2


class TestFlythrough:
    def _write_trajectory(self, path: Path, rows):
        path.write_text("\n".join(json.dumps(r) for r in rows) + ("\n" if rows else ""))

    def test_stationary_rows_identical(self, config_path, tmp_path):
        cfgp = config_path(base_config())
        traj = tmp_path / "stat.jsonl"
        self._write_trajectory(traj, [{"position": [0.0, 0.0, 1100.0]}] * 4)
        out = tmp_path / "fly"
        assert main(["flythrough", "--config", str(cfgp), "--trajectory", str(traj),
                     "--out", str(out)]) == 0
        rows = (out / "framestats.jsonl").read_text().splitlines()
        assert len(rows) == 4
        payloads = [json.loads(r) for r in rows]
        for row in payloads:
            row.pop("frame")
        assert all(r == payloads[0] for r in payloads)

    def test_egress_monotone_non_increasing(self, config_path, tmp_path):
        cfgp = config_path(base_config(max_depth=3, inner_level=2))
        traj = tmp_path / "egress.jsonl"
        rows = [{"position": [0.0, 0.0, float(r)]} for r in np.linspace(1030, 9000, 12)]
        self._write_trajectory(traj, rows)
        out = tmp_path / "fly"
        assert main(["flythrough", "--config", str(cfgp), "--trajectory", str(traj),
                     "--out", str(out)]) == 0
        counts = [json.loads(r)["triangle_count"]
                  for r in (out / "framestats.jsonl").read_text().splitlines()]
        assert all(a >= b for a, b in zip(counts, counts[1:])), counts

    def test_empty_trajectory_exit_2(self, config_path, tmp_path, capsys):
        cfgp = config_path(base_config())
        traj = tmp_path / "empty.jsonl"
        traj.write_text("")
        rc = main(["flythrough", "--config", str(cfgp), "--trajectory", str(traj),
                   "--out", str(tmp_path / "fly")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert "no frames" in err["message"]

    def test_emit_meshes(self, config_path, tmp_path):
        cfgp = config_path(base_config(max_depth=1))
        traj = tmp_path / "t.jsonl"
        self._write_trajectory(traj, [{"position": [0.0, 0.0, 2000.0]},
                                      {"position": [0.0, 0.0, 3000.0]}])
        out = tmp_path / "fly"
        assert main(["flythrough", "--config", str(cfgp), "--trajectory", str(traj),
                     "--out", str(out), "--emit-meshes"]) == 0
        assert (out / "frame_0000.obj").exists()
        assert (out / "frame_0001.obj").exists()


class TestValidate:
    def _planet_obj(self, config_path, tmp_path, capsys) -> Path:
        cfgp = config_path(base_config(max_depth=1, inner_level=2))
        out = tmp_path / "v.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,5000",
                     "--out", str(out)]) == 0
        capsys.readouterr()  # drain gen-planet's summary line
        return out

    def test_closed_planet_passes(self, config_path, tmp_path, capsys):
        out = self._planet_obj(config_path, tmp_path, capsys)
        rc = main(["validate", str(out)])
        assert rc == 0
        result = json.loads(capsys.readouterr().out)
        assert result["passed"] is True

    def test_deleted_triangle_names_boundary_edges(self, config_path, tmp_path, capsys):
        out = self._planet_obj(config_path, tmp_path, capsys)
        lines = out.read_text().splitlines()
        f_lines = [i for i, l in enumerate(lines) if l.startswith("f ")]
        del lines[f_lines[7]]
        broken = tmp_path / "broken.obj"
        broken.write_text("\n".join(lines) + "\n")
        rc = main(["validate", str(broken)])
        assert rc == 1
        result = json.loads(capsys.readouterr().out.strip())
        assert result["passed"] is False
        assert result["audit"]["boundary_edge_count"] == 3
        assert len(result["audit"]["boundary_edges"]) == 3

    def test_report_validation(self, config_path, tmp_path, capsys):
        cfgp = config_path(base_config(max_depth=1))
        out = tmp_path / "r.obj"
        assert main(["gen-planet", "--config", str(cfgp), "--camera", "0,0,4000",
                     "--out", str(out)]) == 0
        capsys.readouterr()
        rc = main(["validate", str(out.with_suffix(".report.json"))])
        assert rc == 0

    def test_fig4_fixture_tjunction_check(self, tmp_path, capsys, small_planet):
        # two-patch crack fixture, exported in parameter space (where the
        # T-junction notion and its 1e-9 tolerance live), pre- and post-fix
        from planetforge.lodtree import QuadKey
        from planetforge.tessellator import fix_cracks, tessellate_patch

        coarse = tessellate_patch(QuadKey(0, 1, 0, 0), (1, 2, 1, 1), 1, small_planet)
        fine = tessellate_patch(QuadKey(0, 2, 2, 0), (1, 2, 2, 2), 1, small_planet)

        def joint_obj(a, b, path):
            params = np.vstack([a.params, b.params])
            tris = np.vstack([a.triangles, b.triangles + a.vertex_count])
            lines = [f"v {float(p[0])!r} {float(p[1])!r} 0.0" for p in params]
            lines += [f"f {t[0]+1} {t[1]+1} {t[2]+1}" for t in tris]
            path.write_text("\n".join(lines) + "\n")
            return path

        pre = joint_obj(coarse, fine, tmp_path / "pre.obj")
        rc = main(["validate", str(pre), "--checks", "tjunction"])
        assert rc == 1
        result = json.loads(capsys.readouterr().out.strip())
        assert result["t_junctions"], "unfixed fixture must report T-junctions"

        fixed = fix_cracks(coarse, (1, 2, 1, 1))
        post = joint_obj(fixed, fine, tmp_path / "post.obj")
        rc = main(["validate", str(post), "--checks", "tjunction"])
        assert rc == 0
        result = json.loads(capsys.readouterr().out.strip())
        assert result["t_junctions"] == []

    def test_unknown_check_exit_2(self, config_path, tmp_path, capsys):
        out = self._planet_obj(config_path, tmp_path, capsys)
        assert main(["validate", str(out), "--checks", "sparkles"]) == 2

    def test_missing_path_exit_2(self, tmp_path):
        assert main(["validate", str(tmp_path / "ghost.obj")]) == 2
