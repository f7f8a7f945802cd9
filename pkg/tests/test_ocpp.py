"""Protocol gateway tests: frame parsing goldens, exhaustive transition
enumeration against an independently stated table, profile application,
call pairing under random interleavings, and transcript replay."""

import json
import random
from pathlib import Path

import pytest

from v2glink.ocpp import (
    CALL,
    CALLERROR,
    CALLRESULT,
    BadFrameShape,
    CentralGateway,
    ChargePointStatus,
    ChargingProfile,
    CpState,
    MalformedJson,
    NotInTransaction,
    OcppMessage,
    ProfileRejected,
    SimChargePoint,
    apply_charging_profile,
    dispatch,
    parse_frame,
    serialize_frame,
)
from v2glink.ocpp.gateway import apply_reservation, release_reservation, ProtocolViolation

GOLDEN = Path(__file__).resolve().parents[1] / "golden" / "ocpp_transcript.txt"


class TestParsing:
    def test_minimal_call(self):
        msg = parse_frame('[2,"m1","Heartbeat",{}]')
        assert msg.frame_kind == CALL
        assert msg.message_id == "m1"
        assert msg.action == "Heartbeat"

    def test_call_result(self):
        msg = parse_frame('[3,"m1",{"currentTime":"1970-01-01T00:00:00Z"}]')
        assert msg.frame_kind == CALLRESULT
        assert msg.payload["currentTime"] == "1970-01-01T00:00:00Z"

    def test_bad_kind_tag(self):
        with pytest.raises(BadFrameShape):
            parse_frame('[5,"m1",{}]')

    def test_wrong_arity(self):
        with pytest.raises(BadFrameShape):
            parse_frame('[2,"m1","Heartbeat"]')
        with pytest.raises(BadFrameShape):
            parse_frame('[3,"m1",{},"extra"]')
        with pytest.raises(BadFrameShape):
            parse_frame('[4,"m1","code",{}]')

    def test_not_json(self):
        with pytest.raises(MalformedJson):
            parse_frame("{nope")

    def test_unknown_action_parses(self):
        msg = parse_frame('[2,"m1","FirmwareFrobnicate",{}]')
        assert msg.action == "FirmwareFrobnicate"

    def test_serialize_round_trip(self):
        text = '[2,"m1","Heartbeat",{}]'
        assert serialize_frame(parse_frame(text)) == text
        err = '[4,"m9","ProtocolError","nope",{}]'
        assert serialize_frame(parse_frame(err)) == err


def cp_in_state(state: CpState) -> ChargePointStatus:
    setpoint = {CpState.CHARGING: 5.0, CpState.DISCHARGING: -3.0}.get(state, 0.0)
    txn = 7 if state in (CpState.CHARGING, CpState.DISCHARGING) else None
    vehicle = "ev1" if state in (
        CpState.PREPARING, CpState.CHARGING, CpState.DISCHARGING, CpState.FINISHING
    ) else None
    return ChargePointStatus(
        cp_id="cp1", state=state, connected_vehicle=vehicle,
        active_setpoint_kw=setpoint, rating_kw=11.0, transaction_id=txn, registered=True,
    )


def make_action(name: str) -> OcppMessage:
    payloads = {
        "BootNotification": {},
        "Heartbeat": {},
        "Authorize": {"idTag": "ev1"},
        "StatusNotification:Preparing": {"connectorId": 1, "status": "Preparing", "x_vehicle_id": "ev1"},
        "StatusNotification:Available": {"connectorId": 1, "status": "Available"},
        "StatusNotification:Faulted": {"connectorId": 1, "status": "Faulted"},
        "StartTransaction": {"connectorId": 1, "idTag": "ev1", "x_vehicle_id": "ev1"},
        "StopTransaction": {"transactionId": 7},
        "MeterValues": {"transactionId": 7, "meterValue": []},
    }
    action = name.split(":")[0]
    return OcppMessage.call("t1", action, payloads[name])


# Authoritative table, restated independently of the implementation:
# action -> {from_state: to_state}; pairs absent here must yield
# ProtocolError and leave the state unchanged.
ALL_STATES = list(CpState)
SAME = {s: s for s in ALL_STATES}
TRANSITION_TABLE = {
    "BootNotification": {s: CpState.AVAILABLE for s in ALL_STATES},
    "Heartbeat": SAME,
    "Authorize": SAME,
    "StatusNotification:Preparing": {
        CpState.AVAILABLE: CpState.PREPARING,
        CpState.RESERVED: CpState.PREPARING,
    },
    "StatusNotification:Available": {
        CpState.FINISHING: CpState.AVAILABLE,
        CpState.FAULTED: CpState.AVAILABLE,
        CpState.RESERVED: CpState.AVAILABLE,
    },
    "StatusNotification:Faulted": {s: CpState.FAULTED for s in ALL_STATES},
    "StartTransaction": {CpState.PREPARING: CpState.CHARGING},
    "StopTransaction": {
        CpState.CHARGING: CpState.FINISHING,
        CpState.DISCHARGING: CpState.FINISHING,
    },
    "MeterValues": {
        CpState.CHARGING: CpState.CHARGING,
        CpState.DISCHARGING: CpState.DISCHARGING,
    },
}


class TestTransitionTable:
    def test_exhaustive_state_action_enumeration(self):
        checked = 0
        for action_name, allowed in TRANSITION_TABLE.items():
            for state in ALL_STATES:
                cp = cp_in_state(state)
                new_cp, responses = dispatch(cp, make_action(action_name), allocate_transaction_id=lambda: 99)
                assert len(responses) == 1
                reply = responses[0]
                assert reply.message_id == "t1"
                if state in allowed:
                    assert reply.frame_kind == CALLRESULT, (action_name, state)
                    assert new_cp.state is allowed[state], (action_name, state)
                else:
                    assert reply.frame_kind == CALLERROR, (action_name, state)
                    assert reply.error_code == "ProtocolError"
                    assert new_cp == cp, (action_name, state)
                checked += 1
        assert checked == len(TRANSITION_TABLE) * len(ALL_STATES)

    def test_reservation_transitions(self):
        assert apply_reservation(cp_in_state(CpState.AVAILABLE)).state is CpState.RESERVED
        assert release_reservation(cp_in_state(CpState.RESERVED)).state is CpState.AVAILABLE
        for state in ALL_STATES:
            if state is not CpState.AVAILABLE:
                with pytest.raises(ProtocolViolation):
                    apply_reservation(cp_in_state(state))

    def test_heartbeat_reports_time(self):
        _, (reply,) = dispatch(cp_in_state(CpState.AVAILABLE), make_action("Heartbeat"), now_ms=61_000)
        assert reply.payload == {"currentTime": "1970-01-01T00:01:01.000Z"}

    def test_start_transaction_returns_fresh_id(self):
        ids = iter([41, 42])
        cp, (reply,) = dispatch(cp_in_state(CpState.PREPARING), make_action("StartTransaction"),
                                allocate_transaction_id=lambda: next(ids))
        assert reply.payload["transactionId"] == 41
        assert cp.transaction_id == 41
        assert cp.state is CpState.CHARGING

    def test_stop_without_transaction_is_protocol_error(self):
        cp, (reply,) = dispatch(cp_in_state(CpState.AVAILABLE), make_action("StopTransaction"))
        assert reply.frame_kind == CALLERROR and reply.error_code == "ProtocolError"
        assert cp.state is CpState.AVAILABLE

    def test_unregistered_cp_must_boot_first(self):
        cp = ChargePointStatus(cp_id="cp1", registered=False)
        _, (reply,) = dispatch(cp, make_action("Heartbeat"))
        assert reply.frame_kind == CALLERROR

    def test_unknown_action_rejected_at_dispatch(self):
        _, (reply,) = dispatch(cp_in_state(CpState.AVAILABLE), OcppMessage.call("t1", "Z9", {}))
        assert reply.frame_kind == CALLERROR and reply.error_code == "NotImplemented"

    def test_setpoint_sign_invariants_hold_after_random_walks(self):
        rng = random.Random(2024)
        names = list(TRANSITION_TABLE)
        for _ in range(200):
            cp = cp_in_state(CpState.AVAILABLE)
            for _ in range(12):
                cp, _ = dispatch(cp, make_action(rng.choice(names)), allocate_transaction_id=lambda: 7)
                in_txn = cp.state in (CpState.CHARGING, CpState.DISCHARGING)
                assert in_txn or cp.active_setpoint_kw == 0.0
                assert (cp.state is CpState.DISCHARGING) == (cp.active_setpoint_kw < 0)


class TestChargingProfiles:
    def make_profile(self, periods, valid_from=0.0, valid_to=7_200_000.0):
        return ChargingProfile("cp1", "ev1", tuple(periods), valid_from, valid_to)

    def test_single_period(self):
        cp, setpoint = apply_charging_profile(cp_in_state(CpState.CHARGING),
                                              self.make_profile([(0, 7.0)]), now_ms=10_000)
        assert setpoint == 7.0
        assert cp.state is CpState.CHARGING

    def test_latest_period_rule_flips_to_discharge(self):
        profile = self.make_profile([(0, 7.0), (3600, -5.0)])
        cp, setpoint = apply_charging_profile(cp_in_state(CpState.CHARGING), profile, now_ms=3_600_000)
        assert setpoint == -5.0
        assert cp.state is CpState.DISCHARGING
        assert profile.bidirectional

    def test_expired_profile_rejected(self):
        profile = self.make_profile([(0, 7.0)], valid_from=0.0, valid_to=1000.0)
        with pytest.raises(ProfileRejected):
            apply_charging_profile(cp_in_state(CpState.CHARGING), profile, now_ms=5_000)

    def test_wrong_cp_rejected(self):
        profile = ChargingProfile("other", "ev1", ((0, 5.0),), 0.0, 10_000.0)
        with pytest.raises(ProfileRejected):
            apply_charging_profile(cp_in_state(CpState.CHARGING), profile, now_ms=100)

    def test_rating_enforced(self):
        with pytest.raises(ProfileRejected):
            apply_charging_profile(cp_in_state(CpState.CHARGING),
                                   self.make_profile([(0, 50.0)]), now_ms=100)

    def test_not_in_transaction(self):
        with pytest.raises(NotInTransaction):
            apply_charging_profile(cp_in_state(CpState.AVAILABLE),
                                   self.make_profile([(0, 5.0)]), now_ms=100)

    def test_period_validation(self):
        with pytest.raises(ProfileRejected):
            self.make_profile([(10, 5.0)])
        with pytest.raises(ProfileRejected):
            self.make_profile([(0, 5.0), (0, 3.0)])
        with pytest.raises(ProfileRejected):
            self.make_profile([])

    def test_payload_round_trip(self):
        profile = self.make_profile([(0, 3.0), (3600, -5.0)])
        payload = profile.to_payload()
        assert payload["csChargingProfiles"]["x_bidirectional"] is True
        assert ChargingProfile.from_payload("cp1", payload) == profile


class TestCallPairing:
    def test_duplicate_message_id(self):
        gw = CentralGateway(now_ms=lambda: 0.0)
        gw.register("cp1", 11.0)
        out1 = gw.handle_text("cp1", '[2,"m1","BootNotification",{}]')
        assert json.loads(out1[0])[0] == CALLRESULT
        out2 = gw.handle_text("cp1", '[2,"m1","Heartbeat",{}]')
        doc = json.loads(out2[0])
        assert doc[0] == CALLERROR and doc[2] == "ProtocolError"

    def test_every_call_gets_exactly_one_response(self):
        rng = random.Random(99)
        for _ in range(50):
            gw = CentralGateway(now_ms=lambda: 0.0)
            gw.register("cp1", 11.0)
            n_calls = rng.randint(1, 6)
            pending_ids = []
            for i in range(n_calls):
                mid = f"m{i}"
                action = rng.choice(["Heartbeat", "Authorize", "BootNotification", "MeterValues"])
                out = gw.handle_text("cp1", serialize_frame(OcppMessage.call(mid, action, {})))
                assert len(out) == 1
                assert json.loads(out[0])[1] == mid
                pending_ids.append(mid)
            assert len(set(pending_ids)) == n_calls

    def test_server_call_pairing_random_interleaving(self):
        rng = random.Random(7)
        for _ in range(30):
            gw = CentralGateway(now_ms=lambda: 0.0)
            for cp_id in ("cp1", "cp2"):
                gw.register(cp_id, 11.0)
                gw.handle_text(cp_id, '[2,"boot","BootNotification",{}]')
            calls = []
            for i in range(rng.randint(1, 6)):
                cp_id = rng.choice(["cp1", "cp2"])
                text = gw.reserve_now(cp_id, reservation_id=i, vehicle_id="ev1", expiry_ms=1000.0)
                calls.append((cp_id, json.loads(text)[1]))
            rng.shuffle(calls)
            assert gw.outstanding_calls() == len(calls)
            for cp_id, mid in calls:
                gw.handle_text(cp_id, json.dumps([3, mid, {"status": "Rejected"}]))
            assert gw.outstanding_calls() == 0
            # a stray response must be flagged
            with pytest.raises(ProtocolViolation):
                gw.handle_text("cp1", '[3,"ghost",{}]')


def run_canonical_session(record):
    """Scripted charge/discharge/reserve session; `record` gets every
    (direction, cp_id, frame) in order."""
    clock = {"now": 0.0}
    gw = CentralGateway(now_ms=lambda: clock["now"])
    gw.register("cp1", rating_kw=11.0)

    outbox = []
    cp = SimChargePoint("cp1", rating_kw=11.0, now_ms=lambda: clock["now"], send=outbox.append)

    def pump():
        while outbox:
            frame = outbox.pop(0)
            record(("c2s", "cp1", frame))
            for reply in gw.handle_text("cp1", frame):
                record(("s2c", "cp1", reply))
                for back in cp.handle_text(reply):
                    outbox.append(back)

    def server_call(text):
        record(("s2c", "cp1", text))
        for back in cp.handle_text(text):
            record(("c2s", "cp1", back))
            for reply in gw.handle_text("cp1", back):
                record(("s2c", "cp1", reply))

    cp.boot()
    pump()
    clock["now"] = 1_000.0
    cp.plug_in("ev1", max_charge_kw=7.0, max_discharge_kw=5.0)
    pump()
    clock["now"] = 2_000.0
    profile = ChargingProfile("cp1", "ev1", ((0, 7.0), (1800, -5.0)), 2_000.0, 9_002_000.0)
    server_call(gw.set_charging_profile(profile))
    clock["now"] = 1_802_000.0  # 30 min at 7 kW -> 3.5 kWh
    cp.sample_meter()
    pump()
    cp.refresh_setpoint()  # period boundary: discharge begins
    clock["now"] = 3_602_000.0  # 30 min at -5 kW -> net 1.0 kWh
    cp.stop_transaction()
    pump()
    cp.unplug()
    pump()
    clock["now"] = 5_500_000.0
    server_call(gw.reserve_now("cp1", reservation_id=1, vehicle_id="ev2", expiry_ms=7_000_000.0))
    clock["now"] = 7_000_000.0
    gw.reservation_expired("cp1")
    cp.reservation_expired()
    return gw, cp


class TestTranscript:
    def test_golden_replay_zero_diffs(self):
        lines = []
        run_canonical_session(lambda rec: lines.append(f"{rec[0]} {rec[1]} {rec[2]}"))
        golden = [l for l in GOLDEN.read_text().splitlines() if l and not l.startswith("#")]
        assert lines == golden

    def test_session_end_state(self):
        gw, cp = run_canonical_session(lambda rec: None)
        status = gw.charge_points["cp1"]
        assert status.state is CpState.AVAILABLE
        assert cp.state is CpState.AVAILABLE
        assert gw.outstanding_calls() == 0
        # 0.5 h at +7 kW then 0.5 h at -5 kW
        assert cp.meter_kwh == pytest.approx(3.5 - 2.5, abs=1e-9)
        assert status.reported_energy_kwh == pytest.approx(1.0, abs=1e-9)
