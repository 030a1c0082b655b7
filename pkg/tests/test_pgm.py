"""Binary PGM round-trips and malformed-input rejection."""

import numpy as np
import pytest

from mrftrack.csvio import fmt_float, read_rows, write_rows
from mrftrack.geometry import Frame
from mrftrack.pgm import PgmError, read_pgm, write_pgm


class TestPgmRoundtrip:
    def test_roundtrip_preserves_8bit_values(self, tmp_path):
        rng = np.random.default_rng(0)
        raw = rng.integers(0, 256, size=(17, 23), dtype=np.uint8)
        frame = Frame(raw.astype(np.float32) / 255.0)
        path = tmp_path / "a.pgm"
        write_pgm(frame, path)
        back = read_pgm(path)
        assert (back.width, back.height) == (23, 17)
        np.testing.assert_array_equal(back.pixels, frame.pixels)

    def test_write_rounds_to_nearest_level(self, tmp_path):
        frame = Frame(np.array([[0.0, 0.5, 1.0]], dtype=np.float32))
        path = tmp_path / "b.pgm"
        write_pgm(frame, path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 1\n255\n")
        assert data[-3:] == bytes([0, 128, 255])

    def test_reader_accepts_comments_and_whitespace(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5 # comment\n# another\n  2\t2\n255\n" + bytes([0, 64, 128, 255]))
        frame = read_pgm(path)
        assert (frame.width, frame.height) == (2, 2)
        np.testing.assert_allclose(
            frame.pixels, np.array([[0, 64], [128, 255]]) / 255.0, atol=1e-7
        )


class TestPgmErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(PgmError):
            read_pgm(path)

    def test_unsupported_maxval(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(PgmError):
            read_pgm(path)

    def test_truncated_raster(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(PgmError):
            read_pgm(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n4")
        with pytest.raises(PgmError):
            read_pgm(path)

    def test_non_numeric_header(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\nwide tall\n255\n")
        with pytest.raises(PgmError):
            read_pgm(path)

    def test_bad_dimensions(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n0 4\n255\n")
        with pytest.raises(PgmError):
            read_pgm(path)


class TestCsvIo:
    def test_fmt_float_round_trips_exactly(self):
        rng = np.random.default_rng(1)
        for v in rng.uniform(-1e6, 1e6, 500):
            assert float(fmt_float(float(v))) == float(v)
        assert float(fmt_float(1.0 / 3.0)) == 1.0 / 3.0

    def test_write_read_rows(self, tmp_path):
        path = tmp_path / "t.csv"
        rows = [["1", "0", fmt_float(2.5)], ["1", "1", fmt_float(-0.125)]]
        write_rows(path, ["frame", "id", "value"], rows)
        header, back = read_rows(path)
        assert header == ["frame", "id", "value"]
        assert back == rows

    def test_uses_lf_newlines(self, tmp_path):
        path = tmp_path / "t.csv"
        write_rows(path, ["a"], [["1"], ["2"]])
        data = path.read_bytes()
        assert b"\r" not in data
