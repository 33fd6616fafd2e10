import numpy as np
import pytest

from stereoforge.camera import DisparityMap
from stereoforge.errors import FormatError
from stereoforge.imio import (
    disparity_from_pfm,
    disparity_from_png16,
    disparity_to_pfm,
    disparity_to_png16,
    load_bool_png,
    load_gray8,
    load_material_png,
    pfm_read,
    pfm_write,
    rle_decode,
    rle_encode,
    save_bool_png,
    save_gray8,
    save_material_png,
)
from stereoforge.labels import MaterialMask

RNG = np.random.default_rng(2024)

# wire-format vectors shared with the UI test suite; do not edit one side only
RLE_VECTORS = [
    ((2, 4), [], "width=4\nheight=2\nruns=8\n"),
    ((2, 4), [1, 2, 3, 4], "width=4\nheight=2\nruns=1 4 3\n"),
    ((2, 4), [0, 1, 2, 3, 4, 5, 6, 7], "width=4\nheight=2\nruns=0 8\n"),
    ((2, 4), [0, 7], "width=4\nheight=2\nruns=0 1 6 1\n"),
]


class TestPfm:
    def test_round_trip_exact(self, tmp_path):
        arr = RNG.uniform(-5, 100, size=(17, 23)).astype(np.float32)
        path = tmp_path / "x.pfm"
        pfm_write(path, arr)
        back, scale = pfm_read(path)
        assert scale == -1.0
        assert np.array_equal(back, arr)

    def test_byte_exact_rewrite(self, tmp_path):
        arr = RNG.uniform(0, 64, size=(9, 11)).astype(np.float32)
        p1 = tmp_path / "a.pfm"
        p2 = tmp_path / "b.pfm"
        pfm_write(p1, arr)
        back, _ = pfm_read(p1)
        pfm_write(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_big_endian_scale(self, tmp_path):
        arr = RNG.uniform(0, 64, size=(5, 7)).astype(np.float32)
        path = tmp_path / "be.pfm"
        pfm_write(path, arr, scale=1.0)
        back, scale = pfm_read(path)
        assert scale == 1.0
        assert np.array_equal(back, arr)

    def test_row_order_bottom_to_top(self, tmp_path):
        arr = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        path = tmp_path / "rows.pfm"
        pfm_write(path, arr)
        raw = path.read_bytes()
        payload = np.frombuffer(raw.split(b"\n", 3)[3], dtype="<f4")
        assert payload.tolist() == [3.0, 4.0, 1.0, 2.0]

    def test_corrupt_header_names_file(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"Px\n2 2\n-1\n" + b"\x00" * 16)
        with pytest.raises(FormatError, match="bad.pfm"):
            pfm_read(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.pfm"
        path.write_bytes(b"Pf\n4 4\n-1\n" + b"\x00" * 10)
        with pytest.raises(FormatError, match="truncated"):
            pfm_read(path)

    def test_disparity_invalid_as_inf(self, tmp_path):
        vals = np.array([[3.0, 5.0], [7.0, 9.0]])
        valid = np.array([[True, False], [True, True]])
        disp = DisparityMap(values=vals, valid=valid)
        path = tmp_path / "d.pfm"
        disparity_to_pfm(path, disp)
        back = disparity_from_pfm(path)
        assert np.array_equal(back.valid, valid)
        assert np.array_equal(back.values[valid], vals[valid])


class TestPng:
    def test_gray8_round_trip(self, tmp_path):
        img = RNG.integers(0, 256, size=(13, 17)).astype(np.uint8)
        path = tmp_path / "g.png"
        save_gray8(path, img)
        assert np.array_equal(load_gray8(path), img)

    def test_gray8_byte_exact_rewrite(self, tmp_path):
        img = RNG.integers(0, 256, size=(13, 17)).astype(np.uint8)
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        save_gray8(p1, img)
        save_gray8(p2, load_gray8(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_png16_disparity_quantization(self, tmp_path):
        vals = RNG.uniform(0.5, 200, size=(9, 9))
        disp = DisparityMap(values=vals, valid=np.ones((9, 9), bool))
        path = tmp_path / "d16.png"
        disparity_to_png16(path, disp)
        back = disparity_from_png16(path)
        assert np.abs(back.values - vals).max() <= 0.5 / 256 + 1e-9

    def test_material_round_trip(self, tmp_path):
        labels = RNG.choice([0, 1, 2, 3, 255], size=(11, 12)).astype(np.uint8)
        path = tmp_path / "m.png"
        save_material_png(path, MaterialMask(labels=labels))
        assert np.array_equal(load_material_png(path).labels, labels)

    def test_material_rejects_stray_values(self, tmp_path):
        path = tmp_path / "bad.png"
        save_gray8(path, np.full((4, 4), 9, dtype=np.uint8))
        with pytest.raises(FormatError, match="bad.png"):
            load_material_png(path)

    def test_bool_round_trip(self, tmp_path):
        mask = RNG.uniform(size=(10, 10)) > 0.5
        path = tmp_path / "b.png"
        save_bool_png(path, mask)
        assert np.array_equal(load_bool_png(path), mask)


class TestRle:
    def test_shared_wire_vectors(self):
        for (h, w), removed, expected in RLE_VECTORS:
            mask = np.zeros((h, w), dtype=bool)
            for idx in removed:
                mask[idx // w, idx % w] = True
            assert rle_encode(mask) == expected
            assert np.array_equal(rle_decode(expected), mask)

    def test_round_trip_random(self):
        for _ in range(50):
            mask = RNG.uniform(size=(RNG.integers(1, 20), RNG.integers(1, 20))) > 0.5
            assert np.array_equal(rle_decode(rle_encode(mask)), mask)

    def test_run_sum_validation(self):
        with pytest.raises(FormatError, match="sum"):
            rle_decode("width=4\nheight=2\nruns=3 3\n")

    def test_negative_run_rejected(self):
        with pytest.raises(FormatError):
            rle_decode("width=4\nheight=2\nruns=-1 9\n")

    def test_missing_key_rejected(self):
        with pytest.raises(FormatError):
            rle_decode("width=4\nruns=8\n")
