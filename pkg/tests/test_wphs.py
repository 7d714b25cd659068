import json
import math
import struct

import numpy as np
import pytest

from phasestack.core import PhaseStack, wrap
from phasestack.wphs import (
    HEADER_SIZE,
    StackFormatError,
    read_report,
    read_stack,
    write_report,
    write_stack,
)


def build_file(width=2, height=2, frames=None, mask=None, magic=b"WPHS",
               version=1, dtype=0, reserved=0, frame_count=None):
    """Assemble WPHS bytes by hand, independent of write_stack."""
    if frames is None:
        frames = [np.zeros((height, width), dtype="<f4")]
    if mask is None:
        mask = np.ones((height, width), dtype=np.uint8)
    if frame_count is None:
        frame_count = len(frames)
    header = struct.pack("<4sBBHIII", magic, version, dtype, reserved,
                         width, height, frame_count)
    body = mask.astype(np.uint8).tobytes()
    for f in frames:
        body += np.asarray(f, dtype="<f4").tobytes()
    return header + body


class TestReadStack:
    def test_hand_built_minimal_file(self, tmp_path):
        f = np.array([[0.0, 1.0], [-1.0, 3.0]], dtype="<f4")
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(frames=[f]))
        stack = read_stack(path)
        assert len(stack) == 1
        assert stack.frames.dtype == np.float64
        assert np.array_equal(stack.frames[0], [[0.0, 1.0], [-1.0, 3.0]])
        assert stack.mask.all()

    def test_non_square_row_major_order(self, tmp_path):
        f = np.array([[0.0, 0.5, 1.0], [-1.0, 2.0, -2.0]], dtype="<f4")
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(width=3, height=2, frames=[f]))
        stack = read_stack(path)
        assert stack.shape == (2, 3)
        assert np.array_equal(stack.frames[0], f.astype(np.float64))

    def test_out_of_range_value_wrap_normalized(self, tmp_path):
        f = np.array([[3.2, 0.0], [0.0, 0.0]], dtype="<f4")
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(frames=[f]))
        stack = read_stack(path)
        expect = float(np.float32(3.2)) - 2 * math.pi
        assert stack.frames[0, 0, 0] == pytest.approx(expect, abs=1e-12)

    def test_invalid_pixels_tolerate_garbage_and_read_as_zero(self, tmp_path):
        f = np.array([[np.nan, 0.25], [np.inf, 0.5]], dtype="<f4")
        mask = np.array([[0, 1], [0, 1]], dtype=np.uint8)
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(frames=[f], mask=mask))
        stack = read_stack(path)
        assert stack.frames[0, 0, 0] == 0.0
        assert stack.frames[0, 1, 0] == 0.0
        assert stack.frames[0, 0, 1] == 0.25
        assert not stack.mask[0, 0]

    @pytest.mark.parametrize(
        "kwargs, offset",
        [
            (dict(magic=b"XPHS"), 0),
            (dict(version=2), 4),
            (dict(dtype=1), 5),
            (dict(reserved=7), 6),
            (dict(width=1), 8),
            (dict(frame_count=0), 16),
        ],
    )
    def test_header_field_errors_carry_offsets(self, tmp_path, kwargs, offset):
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(**kwargs))
        with pytest.raises(StackFormatError) as err:
            read_stack(path)
        assert err.value.offset == offset
        assert f"offset {offset}" in str(err.value)

    def test_truncated_file(self, tmp_path):
        data = build_file()
        path = tmp_path / "s.wphs"
        path.write_bytes(data[:-1])
        with pytest.raises(StackFormatError) as err:
            read_stack(path)
        assert err.value.offset == len(data) - 1
        assert "truncated" in str(err.value)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "s.wphs"
        path.write_bytes(b"WPHS\x01")
        with pytest.raises(StackFormatError) as err:
            read_stack(path)
        assert err.value.offset == 5

    def test_trailing_bytes(self, tmp_path):
        data = build_file()
        path = tmp_path / "s.wphs"
        path.write_bytes(data + b"\x00\x00\x00")
        with pytest.raises(StackFormatError) as err:
            read_stack(path)
        assert "3 trailing bytes" in str(err.value)
        assert err.value.offset == len(data)

    def test_bad_mask_byte_offset(self, tmp_path):
        mask = np.array([[1, 1], [1, 2]], dtype=np.uint8)
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(mask=mask))
        with pytest.raises(StackFormatError) as err:
            read_stack(path)
        assert err.value.offset == HEADER_SIZE + 3

    def test_nan_at_valid_pixel_offset(self, tmp_path):
        f = np.array([[0.0, 0.0], [np.nan, 0.0]], dtype="<f4")
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(frames=[f]))
        with pytest.raises(StackFormatError) as err:
            read_stack(path)
        assert err.value.offset == HEADER_SIZE + 4 + 4 * 2

    def test_multi_frame_count_respected(self, tmp_path):
        frames = [np.full((2, 2), v, dtype="<f4") for v in (0.1, 0.2, 0.3)]
        path = tmp_path / "s.wphs"
        path.write_bytes(build_file(frames=frames))
        stack = read_stack(path)
        assert len(stack) == 3
        assert stack.frames[2, 0, 0] == pytest.approx(0.3, abs=1e-6)


class TestWriteStack:
    def test_header_fields_in_written_bytes(self, tmp_path):
        frames = np.zeros((4, 2, 3))
        stack = PhaseStack(frames=frames, mask=np.ones((2, 3), dtype=bool))
        path = tmp_path / "s.wphs"
        write_stack(stack, path)
        data = path.read_bytes()
        magic, version, dtype, reserved, w, h, n = struct.unpack_from("<4sBBHIII", data)
        assert (magic, version, dtype, reserved) == (b"WPHS", 1, 0, 0)
        assert (w, h, n) == (3, 2, 4)
        assert len(data) == HEADER_SIZE + 6 + 4 * 6 * 4

    def test_bitwise_round_trip(self, tmp_path):
        rng = np.random.default_rng(31)
        frames = wrap(rng.uniform(-3.0, 3.0, size=(3, 8, 8)).astype(np.float32)
                      .astype(np.float64))
        mask = np.ones((8, 8), dtype=bool)
        mask[0, 0] = False
        frames[:, 0, 0] = 0.0
        stack = PhaseStack(frames=frames, mask=mask)
        p1 = tmp_path / "a.wphs"
        p2 = tmp_path / "b.wphs"
        write_stack(stack, p1)
        write_stack(read_stack(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestReports:
    def test_round_trip_and_fixpoint(self, tmp_path):
        report = {
            "schema_version": 1,
            "method": "clustered",
            "rmse_rad": 0.123,
            "cluster_sizes_chosen": [5, 3],
            "warnings": [],
            "params": {"cut": 0.5, "modes_removed": ["piston", "power"]},
        }
        p1 = tmp_path / "r.json"
        p2 = tmp_path / "r2.json"
        write_report(report, p1)
        back = read_report(p1)
        assert back == report
        write_report(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_written_file_is_plain_json_with_newline(self, tmp_path):
        p = tmp_path / "r.json"
        write_report({"a": 1}, p)
        text = p.read_text()
        assert text.endswith("\n")
        assert json.loads(text) == {"a": 1}
