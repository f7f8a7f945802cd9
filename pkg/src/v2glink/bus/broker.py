"""Broker core: sessions, routing, QoS and emulated link scheduling.

The core is transport-agnostic. It needs a Clock that can report the
current time and schedule callbacks; the discrete-event engine supplies
a simulated clock and :mod:`v2glink.bus.realtime` a wall-clock one, so
the exact same routing/retry/dedup logic runs in both worlds.

Semantics, deliberately smaller than full MQTT:

* publish reaches the broker reliably (it is a local call); the emulated
  radio link sits on each *delivery* leg broker -> subscriber, with the
  subscriber session's LinkProfile supplying per-delivery delay and loss.
* AT_MOST_ONCE deliveries are attempted once. AT_LEAST_ONCE deliveries
  are retried until the subscriber's ack makes it back (acks ride the
  same lossy link), and subscribers dedup by (publisher, message_id), so
  the application sees each message exactly once.
* per-subscriber deliveries are serialized in enqueue order: a later
  message never overtakes an earlier one on the same session.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Dict, List, Optional, Protocol, Tuple

from .link import LinkProfile, LinkSampler
from .topics import split_filter, split_topic, topic_matches

DEFAULT_RETRY_INTERVAL_MS = 30.0
_DEDUP_WINDOW = 4096


class BrokerError(Exception):
    pass


class NotConnected(BrokerError):
    """Operation on a session that was never opened or already closed."""


class PayloadTooLarge(BrokerError):
    """Payload exceeds the 256 KiB application limit."""


class QoS(IntEnum):
    AT_MOST_ONCE = 0
    AT_LEAST_ONCE = 1


@dataclass(frozen=True)
class BusMessage:
    topic: str
    payload: bytes
    qos: QoS
    message_id: int
    publisher: str
    sent_at_ms: float


@dataclass(frozen=True)
class DeliveryReceipt:
    message_id: int
    matched: int


class TimerHandle(Protocol):
    def cancel(self) -> None: ...


class Clock(Protocol):
    """Scheduling surface the broker needs from its host."""

    def now_ms(self) -> float: ...

    def call_later(self, delay_ms: float, fn: Callable[[], None]) -> TimerHandle: ...


@dataclass
class _Subscription:
    topic_filter: str
    qos: QoS


@dataclass
class _Pending:
    message: BusMessage
    attempts: int = 0
    timer: Optional[TimerHandle] = None


class Session:
    """One client attachment: subscriptions, dedup window, delivery FIFO."""

    def __init__(self, core: "BrokerCore", client_id: str,
                 on_message: Callable[[BusMessage], None], link: LinkProfile,
                 auto_ack: bool):
        self.core = core
        self.client_id = client_id
        self.on_message = on_message
        self.sampler: LinkSampler = link.sampler()
        self.auto_ack = auto_ack
        self.connected = True
        self.subscriptions: List[_Subscription] = []
        self.next_message_id = 1
        # FIFO horizon: earliest time the next delivery may land
        self.fifo_horizon_ms = 0.0
        self.seen: "OrderedDict[Tuple[str, int], None]" = OrderedDict()
        self.pending_in: Dict[Tuple[str, int], _Pending] = {}

    # -- client-facing API -------------------------------------------------

    def subscribe(self, topic_filter: str, qos: QoS = QoS.AT_LEAST_ONCE) -> None:
        self.core.subscribe(self, topic_filter, qos)

    def unsubscribe(self, topic_filter: str) -> None:
        self.core.unsubscribe(self, topic_filter)

    def publish(self, topic: str, payload: bytes, qos: QoS = QoS.AT_MOST_ONCE) -> DeliveryReceipt:
        return self.core.publish(self, topic, payload, qos)

    def ack(self, message: BusMessage) -> None:
        """Acknowledge an AT_LEAST_ONCE delivery (rides the lossy link)."""
        self.core._send_ack(self, message)

    def close(self) -> None:
        self.core.disconnect(self)


class BrokerCore:
    """Routing table plus delivery scheduling over a Clock."""

    def __init__(self, clock: Clock, retry_interval_ms: float = DEFAULT_RETRY_INTERVAL_MS):
        self.clock = clock
        self.retry_interval_ms = retry_interval_ms
        self._lock = threading.RLock()
        self._sessions: Dict[str, Session] = {}
        self.counters = {
            "published": 0,
            "delivered": 0,
            "dropped": 0,
            "retries": 0,
            "duplicates_suppressed": 0,
        }

    # -- session lifecycle ---------------------------------------------------

    def connect(self, client_id: str, on_message: Callable[[BusMessage], None],
                link: Optional[LinkProfile] = None, auto_ack: bool = True) -> Session:
        with self._lock:
            if client_id in self._sessions:
                raise BrokerError(f"client id {client_id!r} already connected")
            session = Session(self, client_id, on_message, link or LinkProfile(0.0), auto_ack)
            self._sessions[client_id] = session
            return session

    def disconnect(self, session: Session) -> None:
        with self._lock:
            session.connected = False
            for pending in session.pending_in.values():
                if pending.timer is not None:
                    pending.timer.cancel()
            session.pending_in.clear()
            self._sessions.pop(session.client_id, None)

    def subscribe(self, session: Session, topic_filter: str, qos: QoS) -> None:
        split_filter(topic_filter)  # raises InvalidFilter
        with self._lock:
            self._require_connected(session)
            for sub in session.subscriptions:
                if sub.topic_filter == topic_filter:
                    sub.qos = qos
                    return
            session.subscriptions.append(_Subscription(topic_filter, qos))

    def unsubscribe(self, session: Session, topic_filter: str) -> None:
        with self._lock:
            self._require_connected(session)
            session.subscriptions = [s for s in session.subscriptions if s.topic_filter != topic_filter]

    # -- publish path ----------------------------------------------------------

    def publish(self, session: Session, topic: str, payload: bytes, qos: QoS) -> DeliveryReceipt:
        split_topic(topic)  # raises InvalidTopic
        if len(payload) > 256 * 1024:
            raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds 256 KiB")
        with self._lock:
            self._require_connected(session)
            message_id = session.next_message_id
            session.next_message_id += 1
            msg = BusMessage(topic, payload, qos, message_id, session.client_id, self.clock.now_ms())
            matched = 0
            for sub_session in list(self._sessions.values()):
                hits = [s for s in sub_session.subscriptions if topic_matches(s.topic_filter, topic)]
                if not hits:
                    continue
                matched += 1
                effective = QoS(min(qos, max(s.qos for s in hits)))
                self._enqueue_delivery(sub_session, msg, effective, first_attempt=True)
            self.counters["published"] += 1
            return DeliveryReceipt(message_id=message_id, matched=matched)

    def _enqueue_delivery(self, sub: Session, msg: BusMessage, qos: QoS, first_attempt: bool) -> None:
        key = (msg.publisher, msg.message_id)
        if qos is QoS.AT_LEAST_ONCE:
            pending = sub.pending_in.get(key)
            if pending is None:
                pending = _Pending(message=msg)
                sub.pending_in[key] = pending
            if not first_attempt:
                self.counters["retries"] += 1
            pending.attempts += 1
            # rearm the retry timer for this attempt
            if pending.timer is not None:
                pending.timer.cancel()
            pending.timer = self.clock.call_later(
                self.retry_interval_ms, lambda: self._retry(sub, key)
            )
        if sub.sampler.should_drop():
            self.counters["dropped"] += 1
            return  # QoS1 recovery comes from the retry timer
        delay = sub.sampler.sample_delay_ms()
        now = self.clock.now_ms()
        deliver_at = max(now + delay, sub.fifo_horizon_ms)
        sub.fifo_horizon_ms = deliver_at
        self.clock.call_later(deliver_at - now, lambda: self._deliver(sub, msg, qos))

    def _retry(self, sub: Session, key: Tuple[str, int]) -> None:
        with self._lock:
            pending = sub.pending_in.get(key)
            if pending is None or not sub.connected:
                return
            self._enqueue_delivery(sub, pending.message, QoS.AT_LEAST_ONCE, first_attempt=False)

    def _deliver(self, sub: Session, msg: BusMessage, qos: QoS) -> None:
        with self._lock:
            if not sub.connected:
                return
            key = (msg.publisher, msg.message_id)
            duplicate = key in sub.seen
            if not duplicate:
                sub.seen[key] = None
                while len(sub.seen) > _DEDUP_WINDOW:
                    sub.seen.popitem(last=False)
            else:
                self.counters["duplicates_suppressed"] += 1
        if not duplicate:
            self.counters["delivered"] += 1
            sub.on_message(msg)
        if qos is QoS.AT_LEAST_ONCE and sub.auto_ack:
            self._send_ack(sub, msg)

    def _send_ack(self, sub: Session, msg: BusMessage) -> None:
        """Ack travels back over the same link: delayed, possibly lost."""
        with self._lock:
            if sub.sampler.should_drop():
                self.counters["dropped"] += 1
                return
            delay = sub.sampler.sample_delay_ms()
            key = (msg.publisher, msg.message_id)
            self.clock.call_later(delay, lambda: self._ack_arrived(sub, key))

    def _ack_arrived(self, sub: Session, key: Tuple[str, int]) -> None:
        with self._lock:
            pending = sub.pending_in.pop(key, None)
            if pending is not None and pending.timer is not None:
                pending.timer.cancel()

    def _require_connected(self, session: Session) -> None:
        if not session.connected or self._sessions.get(session.client_id) is not session:
            raise NotConnected(f"session {session.client_id!r} is not connected")
