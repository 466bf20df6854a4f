import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrfuse.image_io import (
    BadMagicError,
    HdrImage,
    InvalidSampleError,
    LdrImage,
    ResolutionError,
    RunLengthError,
    TruncatedDataError,
    UnsupportedFormatError,
    quantize,
    read_hdr_file,
    read_pfm,
    read_ppm,
    read_radiance_hdr,
    rgbe_to_float,
    write_ldr,
    write_pfm,
    write_radiance_hdr,
)

HEADER = b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n"


def flat_hdr(quads, width, height, magic=b"#?RADIANCE"):
    head = magic + b"\nFORMAT=32-bit_rle_rgbe\n\n" + f"-Y {height} +X {width}\n".encode()
    return head + bytes(b for q in quads for b in q)


class TestRgbe:
    @pytest.mark.parametrize("quad, expected", [
        ((0, 0, 0, 0), (0.0, 0.0, 0.0)),
        ((128, 0, 0, 129), (1.0, 0.0, 0.0)),
        ((255, 255, 255, 128), (0.99609375, 0.99609375, 0.99609375)),
        ((200, 100, 50, 0), (0.0, 0.0, 0.0)),
    ])
    def test_quadruple_decoding(self, quad, expected):
        img = read_radiance_hdr(flat_hdr([quad], 1, 1))
        assert img.data[0, 0].tolist() == list(expected)

    def test_rgbe_magic_variant(self):
        img = read_radiance_hdr(flat_hdr([(128, 0, 0, 129)], 1, 1, magic=b"#?RGBE"))
        assert img.data[0, 0, 0] == 1.0

    def test_header_comments_are_skipped(self):
        data = b"#?RADIANCE\n# made by hand\nEXPOSURE=1.0\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 1\n" + bytes((128, 128, 128, 129))
        assert read_radiance_hdr(data).data[0, 0].tolist() == [1.0, 1.0, 1.0]

    def test_row_order_is_top_down(self):
        img = read_radiance_hdr(flat_hdr([(128, 0, 0, 129), (128, 0, 0, 130)], 1, 2))
        assert img.data[:, 0, 0].tolist() == [1.0, 2.0]

    def test_handbuilt_rle_scanline(self):
        width = 8
        # R: run of 8 x 128; G: literal 8 bytes; B: run 4 + literal 4; E: run of 8 x 129
        line = bytes((2, 2, 0, width))
        line += bytes((128 + 8, 128))
        line += bytes((8,)) + bytes(range(0, 256, 32))
        line += bytes((128 + 4, 64, 4, 0, 0, 0, 255))
        line += bytes((128 + 8, 129))
        img = read_radiance_hdr(HEADER + b"-Y 1 +X 8\n" + line)
        np.testing.assert_array_equal(img.data[0, :, 0], np.full(8, 1.0))
        np.testing.assert_array_equal(img.data[0, :, 1], np.arange(0, 256, 32) / 128.0)
        np.testing.assert_array_equal(img.data[0, :, 2], [0.5] * 4 + [0, 0, 0, 255 / 128])

    def test_monotone_in_exponent(self):
        quads = np.array([[[100, 50, 7, e] for e in range(1, 256)]], dtype=np.uint8)
        decoded = rgbe_to_float(quads)[0]
        assert np.all(np.diff(decoded, axis=0) > 0)

    @pytest.mark.parametrize("rle", [True, False])
    def test_write_read_round_trip(self, rle):
        rng = np.random.default_rng(3)
        data = np.exp(rng.normal(0, 3, (5, 37, 3))).astype(np.float32)
        data[0, :9] = data[0, 0]  # force runs
        first = read_radiance_hdr(write_radiance_hdr(HdrImage(data), rle=rle))
        # shared exponent: error bounded by one mantissa step of the brightest channel
        peak = data.max(axis=2, keepdims=True)
        assert np.all(np.abs(first.data - data) <= peak * 2 ** -7)
        second = read_radiance_hdr(write_radiance_hdr(first, rle=rle))
        np.testing.assert_array_equal(second.data, first.data)

    def test_rle_and_flat_decode_identically(self):
        rng = np.random.default_rng(4)
        img = HdrImage(rng.uniform(0, 10, (3, 300, 3)))
        a = read_radiance_hdr(write_radiance_hdr(img, rle=True))
        b = read_radiance_hdr(write_radiance_hdr(img, rle=False))
        np.testing.assert_array_equal(a.data, b.data)

    def test_bad_magic(self):
        with pytest.raises(BadMagicError) as err:
            read_radiance_hdr(b"P6\n1 1\n255\n")
        assert err.value.offset == 0

    def test_unsupported_orientation(self):
        with pytest.raises(ResolutionError) as err:
            read_radiance_hdr(HEADER + b"+Y 1 +X 1\n" + bytes(4))
        assert err.value.offset == len(HEADER)
        assert "byte" in str(err.value)

    def test_truncated_flat_scanline(self):
        with pytest.raises(TruncatedDataError):
            read_radiance_hdr(flat_hdr([(1, 2, 3, 4)], 2, 1))

    def test_truncated_rle_scanline(self):
        with pytest.raises(TruncatedDataError):
            read_radiance_hdr(HEADER + b"-Y 1 +X 8\n" + bytes((2, 2, 0, 8, 128 + 8, 1)))

    def test_rle_width_mismatch(self):
        with pytest.raises(RunLengthError):
            read_radiance_hdr(HEADER + b"-Y 1 +X 8\n" + bytes((2, 2, 0, 9)) + bytes(64))

    def test_rle_run_overflow(self):
        with pytest.raises(RunLengthError):
            read_radiance_hdr(HEADER + b"-Y 1 +X 8\n" + bytes((2, 2, 0, 8, 128 + 9, 1)) + bytes(64))

    def test_unsupported_pixel_format(self):
        with pytest.raises(UnsupportedFormatError):
            read_radiance_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n" + bytes(4))


def pfm_bytes(width, height, values, scale=-1.0, magic=b"PF"):
    fmt = "<" if scale < 0 else ">"
    payload = struct.pack(f"{fmt}{len(values)}f", *values)
    return magic + f"\n{width} {height}\n{scale}\n".encode() + payload


class TestPfm:
    def test_single_pixel(self):
        img = read_pfm(pfm_bytes(1, 1, [0.18, 0.18, 0.18]))
        assert img.data.shape == (1, 1, 3)
        assert img.data[0, 0].tolist() == [np.float32(0.18)] * 3
        assert img.clamped == 0

    def test_big_endian(self):
        img = read_pfm(pfm_bytes(1, 1, [1.5, 2.0, 0.25], scale=1.0))
        assert img.data[0, 0].tolist() == [1.5, 2.0, 0.25]

    def test_bottom_to_top_flip(self):
        img = read_pfm(pfm_bytes(1, 2, [1, 1, 1, 2, 2, 2]))
        assert img.data[0, 0, 0] == 2.0
        assert img.data[1, 0, 0] == 1.0

    def test_negative_clamped_and_counted(self):
        img = read_pfm(pfm_bytes(1, 1, [-0.5, 0.25, 0.25]))
        assert img.data[0, 0].tolist() == [0.0, 0.25, 0.25]
        assert img.clamped == 1

    def test_nan_rejected_with_pixel(self):
        with pytest.raises(InvalidSampleError, match=r"x=1, y=0"):
            read_pfm(pfm_bytes(2, 1, [0, 0, 0, float("nan"), 0, 0]))

    def test_grayscale_unsupported(self):
        with pytest.raises(UnsupportedFormatError):
            read_pfm(pfm_bytes(1, 1, [0.5], magic=b"Pf"))

    def test_truncated(self):
        with pytest.raises(TruncatedDataError):
            read_pfm(pfm_bytes(2, 2, [0.5] * 6))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2 ** 32 - 1))
    def test_round_trip_bit_exact(self, w, h, seed):
        rng = np.random.default_rng(seed)
        data = (rng.exponential(5.0, (h, w, 3)) * rng.integers(0, 2, (h, w, 3))).astype(np.float32)
        back = read_pfm(write_pfm(HdrImage(data)))
        assert back.data.tobytes() == data.tobytes()


class TestLdrOutput:
    @pytest.mark.parametrize("value, byte", [(0.0, 0), (1.0, 255), (0.46137, 118), (0.5, 128)])
    def test_quantize(self, value, byte):
        assert quantize(np.array([value]))[0] == byte

    def test_ppm_layout(self):
        img = LdrImage(np.array([[[0.0, 0.5, 1.0], [1.0, 1.0, 1.0]]]))
        assert write_ldr(img, "ppm") == b"P6\n2 1\n255\n" + bytes((0, 128, 255, 255, 255, 255))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
    def test_ppm_round_trip_bytes(self, w, h, seed):
        rng = np.random.default_rng(seed)
        first = write_ldr(LdrImage(rng.uniform(0, 1, (h, w, 3))), "ppm")
        assert write_ldr(read_ppm(first), "ppm") == first

    def test_png_is_8bit_rgb(self):
        from io import BytesIO

        from PIL import Image

        rng = np.random.default_rng(1)
        img = LdrImage(rng.uniform(0, 1, (4, 6, 3)))
        png = Image.open(BytesIO(write_ldr(img, "png8")))
        assert png.mode == "RGB" and png.size == (6, 4)
        np.testing.assert_array_equal(np.asarray(png), quantize(img.data))

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            write_ldr(LdrImage(np.zeros((1, 1, 3))), "tiff")


def test_read_hdr_file_sniffs_format(tmp_path):
    (tmp_path / "a.pfm").write_bytes(pfm_bytes(1, 1, [1, 2, 3]))
    (tmp_path / "b.hdr").write_bytes(flat_hdr([(128, 0, 0, 129)], 1, 1))
    (tmp_path / "c.bin").write_bytes(b"garbage")
    assert read_hdr_file(tmp_path / "a.pfm").data[0, 0].tolist() == [1, 2, 3]
    assert read_hdr_file(tmp_path / "b.hdr").data[0, 0, 0] == 1.0
    with pytest.raises(BadMagicError):
        read_hdr_file(tmp_path / "c.bin")


def test_hdr_image_invariants():
    with pytest.raises(ValueError):
        HdrImage(np.full((1, 1, 3), -1.0))
    with pytest.raises(ValueError):
        HdrImage(np.full((1, 1, 3), np.inf))
    with pytest.raises(ValueError):
        HdrImage(np.zeros((0, 1, 3)))
    with pytest.raises(ValueError):
        LdrImage(np.full((1, 1, 3), 1.5))
