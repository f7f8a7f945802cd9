"""Codec tests: golden corpus, scaling oracles, round trips, fuzz."""

from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from v2glink import telemetry as tc
from v2glink.telemetry import (
    MalformedFrame,
    ReadingKind,
    TelemetryFrame,
    UnknownPid,
    decode_response,
    encode_request,
    encode_response,
    soc_from_raw,
)

GOLDEN = Path(__file__).resolve().parents[1] / "golden" / "telemetry_frames.hex"


def iter_golden_lines():
    for line in GOLDEN.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        yield line.split()


def test_encode_request_layouts():
    assert encode_request(ReadingKind.SOC_PERCENT).to_hex() == "7DF#02015B0000000000"
    assert encode_request(ReadingKind.VEHICLE_SPEED_KPH).to_hex() == "7DF#02010D0000000000"
    assert encode_request(ReadingKind.BATTERY_CAPACITY_KWH).to_hex() == "7DF#0322F01500000000"


def test_golden_corpus():
    seen = 0
    for parts in iter_golden_lines():
        tag = parts[0]
        if tag == "REQ":
            kind, frame_text = parts[1], parts[2]
            assert encode_request(ReadingKind(kind)).to_hex() == frame_text
        elif tag == "RSP":
            kind, value, frame_text = parts[1], float(parts[2]), parts[3]
            reading = decode_response(TelemetryFrame.from_hex(frame_text), timestamp_ms=0)
            assert reading.kind is ReadingKind(kind)
            assert reading.value == value
        elif tag == "ERR":
            err_cls = {"MalformedFrame": MalformedFrame, "UnknownPid": UnknownPid}[parts[1]]
            with pytest.raises(err_cls):
                decode_response(TelemetryFrame.from_hex(parts[2]), timestamp_ms=0)
        else:
            raise AssertionError(f"unknown golden tag {tag}")
        seen += 1
    assert seen >= 20


def test_soc_scaling_against_rational_oracle():
    # brute force over every raw byte vs exact rational arithmetic
    for a in range(256):
        assert soc_from_raw(a) == float(Fraction(100 * a, 255))
    assert soc_from_raw(0) == 0.0
    assert soc_from_raw(255) == 100.0
    assert soc_from_raw(51) == 20.0


def test_soc_strictly_increasing():
    values = [soc_from_raw(a) for a in range(256)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_soc_raw_bounds():
    with pytest.raises(ValueError):
        soc_from_raw(-1)
    with pytest.raises(ValueError):
        soc_from_raw(256)


def test_round_trip_soc_and_speed_exhaustive():
    for raw in range(256):
        soc = decode_response(encode_response(ReadingKind.SOC_PERCENT, raw), 5)
        assert soc.value == float(Fraction(100 * raw, 255))
        assert soc.timestamp_ms == 5
        speed = decode_response(encode_response(ReadingKind.VEHICLE_SPEED_KPH, raw), 5)
        assert speed.value == float(raw)


@given(st.integers(min_value=1, max_value=0xFFFF))
def test_round_trip_capacity_sampled(raw):
    reading = decode_response(encode_response(ReadingKind.BATTERY_CAPACITY_KWH, raw), 0)
    assert reading.value == raw / 10.0
    assert reading.kind is ReadingKind.BATTERY_CAPACITY_KWH


def test_request_decode_round_trip():
    for kind in ReadingKind:
        assert tc.decode_request(encode_request(kind)) is kind


def test_request_decode_unknown_pid():
    frame = TelemetryFrame(tc.FUNCTIONAL_REQUEST_ID, bytes([0x02, 0x01, 0x42, 0, 0, 0, 0, 0]))
    with pytest.raises(UnknownPid):
        tc.decode_request(frame)


@given(st.binary(min_size=8, max_size=8))
def test_decode_never_crashes_on_arbitrary_bytes(data):
    frame = TelemetryFrame(tc.ECU_RESPONSE_ID, data)
    try:
        reading = decode_response(frame, 0)
    except (MalformedFrame, UnknownPid):
        return
    assert isinstance(reading.value, float)


@given(st.integers(min_value=0, max_value=0x7FF), st.binary(min_size=8, max_size=8))
def test_decode_classifies_any_frame(can_id, data):
    try:
        decode_response(TelemetryFrame(can_id, data), 0)
    except (MalformedFrame, UnknownPid):
        pass


def test_frame_structural_validation():
    with pytest.raises(MalformedFrame):
        TelemetryFrame(0x800, b"\x00" * 8)
    with pytest.raises(MalformedFrame):
        TelemetryFrame(0x7DF, b"\x00" * 7)
