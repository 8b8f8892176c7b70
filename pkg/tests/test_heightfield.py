import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planetforge.errors import HeightmapFormatError, InvalidArgument, OutOfDomain
from planetforge.heightfield import (
    DiamondSquareParams,
    HeightField,
    export_heightfield,
    generate_heightfield,
    import_heightfield,
    sample_bilinear,
)
from planetforge.noise import NoiseSpec


def oracle_bilinear(field: HeightField, u: float, v: float) -> float:
    """Independent nearest-4 weighted sum, coded apart from the library path."""
    x = u * (field.width - 1)
    y = v * (field.height - 1)
    j0 = min(int(np.floor(x)), field.width - 2)
    i0 = min(int(np.floor(y)), field.height - 2)
    fx, fy = x - j0, y - i0
    c = field.cells
    return float(
        c[i0, j0] * (1 - fx) * (1 - fy)
        + c[i0, j0 + 1] * fx * (1 - fy)
        + c[i0 + 1, j0] * (1 - fx) * fy
        + c[i0 + 1, j0 + 1] * fx * fy
    )


class TestGenerate:
    def test_zero_amplitude_all_zero(self):
        spec = NoiseSpec(seed=1, octaves=3, amplitude=0.0)
        hf = generate_heightfield(spec, 33, 17, horizontal_extent=100.0)
        assert hf.cells.shape == (17, 33)
        assert np.all(hf.cells == 0.0)

    def test_bit_identical_repeat(self):
        spec = NoiseSpec(seed=123, octaves=4, frequency=0.01, amplitude=5.0)
        a = generate_heightfield(spec, 65, 65, horizontal_extent=500.0)
        b = generate_heightfield(spec, 65, 65, horizontal_extent=500.0)
        assert a.cells.tobytes() == b.cells.tobytes()

    def test_thread_count_independent(self, monkeypatch):
        spec = NoiseSpec(seed=7, octaves=4, frequency=0.01, amplitude=5.0)
        monkeypatch.setenv("PLANETFORGE_THREADS", "1")
        a = generate_heightfield(spec, 600, 600, horizontal_extent=100.0)
        monkeypatch.setenv("PLANETFORGE_THREADS", "4")
        b = generate_heightfield(spec, 600, 600, horizontal_extent=100.0)
        assert a.cells.tobytes() == b.cells.tobytes()

    def test_diamond_square_flat(self):
        params = DiamondSquareParams(size_exponent=8, corners=(0, 0, 0, 0), roughness=0.0, seed=1)
        hf = generate_heightfield(params, 257, 257, horizontal_extent=100.0)
        assert np.all(hf.cells == 0.0)

    def test_diamond_square_dimension_mismatch(self):
        params = DiamondSquareParams(size_exponent=3)
        with pytest.raises(InvalidArgument):
            generate_heightfield(params, 8, 8, horizontal_extent=1.0)
        with pytest.raises(InvalidArgument):
            generate_heightfield(params, 9, 17, horizontal_extent=1.0)

    @pytest.mark.parametrize("w,h", [(1, 10), (10, 1), (8194, 4), (4, 8194)])
    def test_size_range(self, w, h):
        with pytest.raises(InvalidArgument):
            generate_heightfield(NoiseSpec(seed=1), w, h, horizontal_extent=1.0)


class TestSampleBilinear:
    def test_exact_at_nodes(self, rng):
        cells = rng.uniform(-5, 5, size=(7, 9))
        hf = HeightField(cells=cells, horizontal_extent=10.0)
        for i in range(7):
            for j in range(9):
                u = j / 8
                v = i / 6
                assert sample_bilinear(hf, u, v) == cells[i, j]

    def test_row_edge_midpoint(self):
        hf = HeightField(cells=np.array([[0.0, 1.0], [0.0, 1.0]]), horizontal_extent=1.0)
        assert sample_bilinear(hf, 0.5, 0.0) == 0.5

    def test_matches_independent_oracle(self, rng):
        cells = rng.uniform(-100, 100, size=(17, 13))
        hf = HeightField(cells=cells, horizontal_extent=2.0)
        for u, v in rng.uniform(0, 1, size=(200, 2)):
            assert sample_bilinear(hf, u, v) == pytest.approx(oracle_bilinear(hf, u, v), abs=1e-12)

    @given(u=st.floats(0, 1), v=st.floats(0, 1))
    @settings(max_examples=100, deadline=None)
    def test_never_exceeds_neighborhood(self, u, v):
        cells = np.arange(12, dtype=np.float64).reshape(3, 4) ** 2
        hf = HeightField(cells=cells, horizontal_extent=1.0)
        val = sample_bilinear(hf, u, v)
        assert cells.min() <= val <= cells.max()

    @pytest.mark.parametrize("u,v", [(-0.01, 0.5), (1.01, 0.5), (0.5, -1e-9), (0.5, 1.2)])
    def test_out_of_domain(self, u, v):
        hf = HeightField(cells=np.zeros((2, 2)), horizontal_extent=1.0)
        with pytest.raises(OutOfDomain):
            sample_bilinear(hf, u, v)


class TestImportExport:
    def test_roundtrip_error_bound(self, tmp_path, rng):
        cells = rng.uniform(-37.5, 81.25, size=(64, 64))
        hf = HeightField(cells=cells, horizontal_extent=10.0, vertical_scale=2.0)
        path = export_heightfield(hf, tmp_path / "r.pgm", fmt="pgm16")
        back = import_heightfield(path)
        bound = (cells.max() - cells.min()) / 65535 / 2 + 1e-12
        assert np.abs(back.cells - cells).max() <= bound
        assert back.horizontal_extent == 10.0
        assert back.vertical_scale == 2.0

    def test_roundtrip_png16(self, tmp_path, rng):
        cells = rng.uniform(0, 1, size=(64, 64))
        hf = HeightField(cells=cells, horizontal_extent=5.0)
        path = export_heightfield(hf, tmp_path / "r.png", fmt="png16")
        back = import_heightfield(path)
        bound = (cells.max() - cells.min()) / 65535 / 2 + 1e-12
        assert np.abs(back.cells - cells).max() <= bound

    def test_flat_field_exact(self, tmp_path):
        hf = HeightField(cells=np.full((8, 8), 3.75), horizontal_extent=1.0)
        path = export_heightfield(hf, tmp_path / "flat.pgm")
        raw = path.read_bytes()
        assert raw.endswith(b"\x00" * 128)  # all pixels zero
        back = import_heightfield(path)
        assert np.array_equal(back.cells, hf.cells)

    def test_exact_pixel_words_3x2(self, tmp_path):
        # hand-computed: values map to fractions k/5 of 65535 exactly
        cells = np.array([[0.0, 10.0, 20.0], [30.0, 40.0, 50.0]])
        hf = HeightField(cells=cells, horizontal_extent=1.0)
        path = export_heightfield(hf, tmp_path / "h.pgm")
        raw = path.read_bytes()
        assert raw.startswith(b"P5\n3 2\n65535\n")
        expected = np.array([0, 13107, 26214, 39321, 52428, 65535], dtype=">u2")
        assert raw[len(b"P5\n3 2\n65535\n"):] == expected.tobytes()

    def test_sidecar_contents(self, tmp_path):
        hf = HeightField(cells=np.array([[1.0, 2.0], [3.0, 4.0]]),
                         horizontal_extent=7.0, vertical_scale=1.5)
        path = export_heightfield(hf, tmp_path / "s.pgm")
        meta = json.loads(path.with_suffix(".meta.json").read_text())
        assert meta == {"min": 1.0, "max": 4.0, "horizontal_extent": 7.0, "vertical_scale": 1.5}

    def test_missing_sidecar(self, tmp_path):
        hf = HeightField(cells=np.zeros((4, 4)), horizontal_extent=1.0)
        path = export_heightfield(hf, tmp_path / "m.pgm")
        path.with_suffix(".meta.json").unlink()
        with pytest.raises(HeightmapFormatError, match="sidecar"):
            import_heightfield(path)

    def test_wrong_bit_depth(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x01\x02\x03")
        path.with_suffix(".meta.json").write_text(
            json.dumps({"min": 0, "max": 1, "horizontal_extent": 1, "vertical_scale": 1})
        )
        with pytest.raises(HeightmapFormatError, match="bit depth"):
            import_heightfield(path)

    def test_wrong_bit_depth_png(self, tmp_path):
        from PIL import Image

        path = tmp_path / "bad.png"
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(path)
        path.with_suffix(".meta.json").write_text(
            json.dumps({"min": 0, "max": 1, "horizontal_extent": 1, "vertical_scale": 1})
        )
        with pytest.raises(HeightmapFormatError, match="bit depth"):
            import_heightfield(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(HeightmapFormatError, match="unreadable"):
            import_heightfield(tmp_path / "nope.pgm")

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.pgm"
        path.write_bytes(b"P5\n4 4\n65535\n\x00\x01")
        path.with_suffix(".meta.json").write_text(
            json.dumps({"min": 0, "max": 1, "horizontal_extent": 1, "vertical_scale": 1})
        )
        with pytest.raises(HeightmapFormatError, match="truncated"):
            import_heightfield(path)

    def test_export_bytes_deterministic(self, tmp_path, rng):
        cells = rng.uniform(-1, 1, size=(32, 32))
        hf = HeightField(cells=cells, horizontal_extent=4.0)
        p1 = export_heightfield(hf, tmp_path / "a.pgm")
        p2 = export_heightfield(hf, tmp_path / "b.pgm")
        assert p1.read_bytes() == p2.read_bytes()
        p3 = export_heightfield(hf, tmp_path / "a.png", fmt="png16")
        p4 = export_heightfield(hf, tmp_path / "b.png", fmt="png16")
        assert p3.read_bytes() == p4.read_bytes()


class TestHeightFieldInvariants:
    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgument):
            HeightField(cells=np.array([[0.0, np.nan], [0.0, 0.0]]), horizontal_extent=1.0)

    def test_rejects_tiny(self):
        with pytest.raises(InvalidArgument):
            HeightField(cells=np.zeros((1, 5)), horizontal_extent=1.0)

    def test_rejects_bad_extent(self):
        with pytest.raises(InvalidArgument):
            HeightField(cells=np.zeros((4, 4)), horizontal_extent=0.0)

    def test_cells_read_only(self):
        hf = HeightField(cells=np.zeros((4, 4)), horizontal_extent=1.0)
        with pytest.raises(ValueError):
            hf.cells[0, 0] = 1.0
