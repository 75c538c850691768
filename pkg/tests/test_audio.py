import math
import struct

import numpy as np
import pytest

from sepmetrics.audio import Signal, format_cell, read_wav, rows_to_csv, write_csv, write_wav
from sepmetrics.errors import EmptySignalError, FormatError, IoError


def make_wav(path, payload: bytes, audio_format: int, channels: int, bits: int,
             rate: int = 16000) -> str:
    """Hand-assembled RIFF file, independent of the library's writer."""
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", audio_format, channels, rate, rate * block, block, bits)
    body = (b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(payload)) + payload)
    blob = b"RIFF" + struct.pack("<I", len(body)) + body
    path.write_bytes(blob)
    return str(path)


class TestReadWav:
    def test_pcm16_scaling(self, tmp_path):
        payload = struct.pack("<3h", 0, 16384, -32768)
        sig = read_wav(make_wav(tmp_path / "a.wav", payload, 1, 1, 16))
        assert sig.samples.tolist() == [0.0, 0.5, -1.0]
        assert sig.sample_rate_hz == 16000

    def test_stereo_channel_selection(self, tmp_path):
        payload = struct.pack("<6h", 100, 200, 300, 400, 500, 600)
        path = make_wav(tmp_path / "st.wav", payload, 1, 2, 16)
        left = read_wav(path)
        right = read_wav(path, channel=1)
        assert np.allclose(left.samples * 32768, [100, 300, 500])
        assert np.allclose(right.samples * 32768, [200, 400, 600])

    def test_24_bit_rejected(self, tmp_path):
        path = make_wav(tmp_path / "b.wav", b"\x00" * 9, 1, 1, 24)
        with pytest.raises(FormatError):
            read_wav(path)

    def test_float64_rejected(self, tmp_path):
        path = make_wav(tmp_path / "c.wav", b"\x00" * 16, 3, 1, 64)
        with pytest.raises(FormatError):
            read_wav(path)

    def test_zero_length_audio(self, tmp_path):
        path = make_wav(tmp_path / "d.wav", b"", 1, 1, 16)
        with pytest.raises(EmptySignalError):
            read_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            read_wav(str(tmp_path / "nope.wav"))

    def test_not_riff(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not a wav file at all")
        with pytest.raises(FormatError):
            read_wav(str(path))

    def test_float_nan_payload_rejected(self, tmp_path):
        payload = struct.pack("<2f", 0.5, math.nan)
        path = make_wav(tmp_path / "n.wav", payload, 3, 1, 32)
        with pytest.raises(FormatError):
            read_wav(path)

    def test_channel_out_of_range(self, tmp_path):
        payload = struct.pack("<2h", 1, 2)
        path = make_wav(tmp_path / "e.wav", payload, 1, 1, 16)
        with pytest.raises(FormatError):
            read_wav(path, channel=1)


class TestWriteWav:
    def test_round_trip_identity(self, tmp_path, rng):
        samples = rng.standard_normal(1000).astype(np.float32).astype(np.float64)
        sig = Signal(samples, 22050)
        path = str(tmp_path / "rt.wav")
        write_wav(sig, path)
        back = read_wav(path)
        assert back.sample_rate_hz == 22050
        assert np.array_equal(back.samples, samples)

    def test_above_full_scale_not_clipped(self, tmp_path):
        sig = Signal(np.array([1.5, -2.0, 0.25]), 16000)
        path = str(tmp_path / "hot.wav")
        write_wav(sig, path)
        assert read_wav(path).samples.tolist() == [1.5, -2.0, 0.25]

    def test_unwritable_path(self, tmp_path):
        sig = Signal(np.zeros(4) + 0.1, 16000)
        with pytest.raises(IoError):
            write_wav(sig, str(tmp_path / "no" / "such" / "dir.wav"))


class TestSignal:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Signal(np.array([0.0, np.nan]), 16000)

    def test_rejects_empty(self):
        with pytest.raises(EmptySignalError):
            Signal(np.array([]), 16000)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            Signal(np.array([0.1]), 0)

    def test_casts_to_float64(self):
        sig = Signal([1, 2, 3], 8000)
        assert sig.samples.dtype == np.float64
        assert len(sig) == 3
        assert sig.duration_s == pytest.approx(3 / 8000)


class TestCsv:
    def test_two_line_file(self, tmp_path):
        path = str(tmp_path / "m.csv")
        write_csv([{"gain": 0.5, "snr_db": 3.0103}], path)
        assert open(path).read() == "gain,snr_db\n0.5,3.0103\n"

    def test_sentinels(self):
        text = rows_to_csv([{"a": math.inf, "b": -math.inf, "c": math.nan}])
        assert text == "a,b,c\ninf,-inf,nan\n"

    def test_header_only(self, tmp_path):
        path = str(tmp_path / "h.csv")
        write_csv([], path, columns=["x", "y"])
        assert open(path).read() == "x,y\n"

    def test_nine_significant_digits(self):
        assert format_cell(math.pi) == "3.14159265"
        assert format_cell(1234567891234.0) == "1.23456789e+12"
        assert format_cell(3) == "3"

    def test_mismatched_columns(self):
        with pytest.raises(ValueError):
            rows_to_csv([{"a": 1}, {"b": 2}])

    def test_io_error(self, tmp_path):
        with pytest.raises(IoError):
            write_csv([{"a": 1}], str(tmp_path / "no" / "dir.csv"))
