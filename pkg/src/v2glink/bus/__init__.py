"""Publish/subscribe transport emulation: topic matching, framed wire
format, seeded latency links and the broker core in simulated and
wall-clock flavors."""

from .topics import InvalidFilter, InvalidTopic, topic_matches
from .link import LinkProfile, LinkSampler
from .wire import MAX_PAYLOAD_BYTES, FrameReader, decode_wire_frame, encode_wire_frame
from .broker import (
    BrokerCore,
    BrokerError,
    BusMessage,
    DeliveryReceipt,
    NotConnected,
    PayloadTooLarge,
    QoS,
)
from .realtime import RealTimeClock

__all__ = [
    "BrokerCore",
    "BrokerError",
    "BusMessage",
    "DeliveryReceipt",
    "FrameReader",
    "InvalidFilter",
    "InvalidTopic",
    "LinkProfile",
    "LinkSampler",
    "MAX_PAYLOAD_BYTES",
    "NotConnected",
    "PayloadTooLarge",
    "QoS",
    "RealTimeClock",
    "decode_wire_frame",
    "encode_wire_frame",
    "topic_matches",
]
