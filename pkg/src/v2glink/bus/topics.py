"""Topic names and filter matching with MQTT wildcard semantics.

Topics are `/`-separated non-empty literal segments. Filters may use
`+` for exactly one segment and a trailing `#` for any remainder,
including an empty one (`v2g/#` matches `v2g`).

Fixed topic scheme used across the system:

    v2g/{vehicle_id}/telemetry      decoded readings from the in-car relay
    v2g/{vehicle_id}/preferences    driver inputs from the companion app
    v2g/cp/{cp_id}/status           charge point status + OCPP uplink
    v2g/control/schedule            optimizer schedule announcements
"""

from __future__ import annotations


class InvalidTopic(ValueError):
    """Topic is empty, has empty segments, or contains wildcards."""


class InvalidFilter(ValueError):
    """Filter has empty segments, a non-final '#', or an embedded wildcard."""


def telemetry_topic(vehicle_id: str) -> str:
    return f"v2g/{vehicle_id}/telemetry"


def preferences_topic(vehicle_id: str) -> str:
    return f"v2g/{vehicle_id}/preferences"


def charge_point_topic(cp_id: str, channel: str = "status") -> str:
    return f"v2g/cp/{cp_id}/{channel}"


SCHEDULE_TOPIC = "v2g/control/schedule"


def split_topic(topic: str) -> list[str]:
    segments = topic.split("/")
    if any(seg == "" for seg in segments):
        raise InvalidTopic(f"empty segment in topic {topic!r}")
    for seg in segments:
        if "+" in seg or "#" in seg:
            raise InvalidTopic(f"wildcard in topic {topic!r}; wildcards are only legal in filters")
    return segments


def split_filter(topic_filter: str) -> list[str]:
    segments = topic_filter.split("/")
    if any(seg == "" for seg in segments):
        raise InvalidFilter(f"empty segment in filter {topic_filter!r}")
    for i, seg in enumerate(segments):
        if seg == "#" and i != len(segments) - 1:
            raise InvalidFilter(f"'#' must be the final segment in {topic_filter!r}")
        if seg not in ("+", "#") and ("+" in seg or "#" in seg):
            raise InvalidFilter(f"wildcard inside literal segment in {topic_filter!r}")
    return segments


def topic_matches(topic_filter: str, topic: str) -> bool:
    """True when the filter selects the topic under standard semantics."""
    fsegs = split_filter(topic_filter)
    tsegs = split_topic(topic)
    i = 0
    for i, fseg in enumerate(fsegs):
        if fseg == "#":
            return True  # consumes the remainder, possibly empty
        if i >= len(tsegs):
            return False
        if fseg != "+" and fseg != tsegs[i]:
            return False
    return len(fsegs) == len(tsegs)
