"""Charge-point protocol subset: RPC framing, the central-side state
machine and a simulated charge point client."""

from .frames import (
    CALL,
    CALLERROR,
    CALLRESULT,
    BadFrameShape,
    MalformedJson,
    OcppMessage,
    parse_frame,
    serialize_frame,
)
from .gateway import (
    CentralGateway,
    ChargePointStatus,
    ChargingProfile,
    CpState,
    NotInTransaction,
    ProfileRejected,
    ProtocolViolation,
    apply_charging_profile,
    dispatch,
)
from .chargepoint import SimChargePoint

__all__ = [
    "BadFrameShape",
    "CALL",
    "CALLERROR",
    "CALLRESULT",
    "CentralGateway",
    "ChargePointStatus",
    "ChargingProfile",
    "CpState",
    "MalformedJson",
    "NotInTransaction",
    "OcppMessage",
    "ProfileRejected",
    "ProtocolViolation",
    "SimChargePoint",
    "apply_charging_profile",
    "dispatch",
    "parse_frame",
    "serialize_frame",
]
