"""Joint EV/EVSE state machine driven by a time-ordered event script.

``step`` is a pure transition function over :class:`SessionState`; ``run_session``
folds a script through it and collects the trace. Every event is applied to the
physical wiring first, then both controllers re-read the lines, so attacker
effects land within the same instant (well inside the 100 ms tick budget).
"""
from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

from . import attacker as atk
from .bms import PAYLOADS, BmsState, ThermalParams, bms_feed, bms_tick
from .circuit import (
    OPEN, Resistor, Switch, divider_voltage, duty_to_current, impedance_at,
    resistance_from_divider,
)
from .errors import ChecksumError, HarnessError, InputError, MalformedBurstError
from .standards import (
    CcClass, CpState, StandardProfile, classify_cc, classify_cp, ev_cp_network, legacy_gun,
)

TICK_MS = 100
UNLOCK_WINDOW_MS = 2000
GUN_TEMP_LIMIT_C = 90.0
MAINS_VOLT = 220.0
BMS_DT_S = 1.0
BMS_SAMPLE_MS = 600_000


class Phase(enum.Enum):
    IDLE = "idle"
    GUN_CONNECTED = "gun-connected"
    HANDSHAKE = "handshake"
    CHARGING = "charging"
    HALTED = "halted"
    SESSION_ENDED = "session-ended"


class HaltReason(enum.Enum):
    CC_FAULT = "cc-fault"
    CP_FAULT = "cp-fault"
    THERMAL_CUTOFF = "thermal-cutoff"
    USER_STOP = "user-stop"
    ATTACK_OBSERVED_DUTY = "attack-observed-duty"


@dataclass(frozen=True)
class EvseState:
    phase: Phase = Phase.IDLE
    current: Optional[float] = None
    reason: Optional[HaltReason] = None

    def __post_init__(self):
        if (self.phase is Phase.CHARGING) != (self.current is not None):
            raise InputError("only the charging state carries a current")
        if (self.phase is Phase.HALTED) != (self.reason is not None):
            raise InputError("only the halted state carries a reason")

    def __str__(self) -> str:
        if self.phase is Phase.CHARGING:
            return f"charging({self.current:g}A)"
        if self.phase is Phase.HALTED:
            return f"halted({self.reason.value})"
        return self.phase.value


@dataclass(frozen=True)
class EvState:
    lock_engaged: bool = False
    cp_state: CpState = CpState.A_NOT_CONNECTED
    lid_open: bool = False
    gun_temp_c: float = 25.0
    cc_class: CcClass = CcClass.OPEN
    press_t: Optional[int] = None


class EventKind(enum.Enum):
    PLUG_IN = "plug-in"
    UNPLUG = "unplug"
    BUTTON_PRESS = "button-press"
    BUTTON_RELEASE = "button-release"
    USER_STOP = "user-stop"
    ATTACKER_CMD = "attacker-cmd"
    TEMP_SET = "temp-set"
    TICK = "tick"


@dataclass(frozen=True)
class SimEvent:
    t: int
    kind: EventKind
    value: Any = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if isinstance(self.value, atk.AttackCommand):
            object.__setattr__(self, "value", self.value.encode())
        if self.kind is EventKind.ATTACKER_CMD and not isinstance(self.value, (bytes, bytearray)):
            raise InputError("attacker-cmd needs a frame")
        if self.kind is EventKind.TEMP_SET and not isinstance(self.value, (int, float)):
            raise InputError("temp-set needs a temperature")

    def to_dict(self) -> dict:
        d = {"t": self.t, "kind": self.kind.value}
        if self.kind is EventKind.ATTACKER_CMD:
            d["frame"] = bytes(self.value).hex()
        elif self.kind is EventKind.TEMP_SET:
            d["celsius"] = self.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimEvent":
        try:
            kind = EventKind(d["kind"])
            t = d["t"]
            if not isinstance(t, int) or isinstance(t, bool):
                raise InputError(f"event time must be an integer millisecond, got {t!r}")
            value = None
            if kind is EventKind.ATTACKER_CMD:
                value = bytes.fromhex(d["frame"])
            elif kind is EventKind.TEMP_SET:
                value = float(d["celsius"])
            return cls(t, kind, value)
        except (KeyError, ValueError, TypeError) as exc:
            raise HarnessError(f"malformed event {d!r}: {exc}") from None


# helpers for writing scripts in code
def at(t: int, kind: str, value=None) -> SimEvent:
    return SimEvent(t, EventKind(kind), value)


def attack(t: int, cmd: atk.AttackCommand) -> SimEvent:
    return SimEvent(t, EventKind.ATTACKER_CMD, cmd.encode())


@dataclass(frozen=True)
class TraceRecord:
    t_ms: int
    source: str
    kind: str
    data: dict = field(default_factory=dict)

    SOURCES = ("ev", "evse", "attacker", "bms", "countermeasure")

    def __post_init__(self):
        if self.source not in self.SOURCES:
            raise InputError(f"unknown trace source {self.source!r}")

    def to_dict(self) -> dict:
        return {"t_ms": self.t_ms, "source": self.source, "kind": self.kind, "data": self.data}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def lid_code_for(seed: int) -> str:
    """The vehicle's fixed lid-opening burst; varies by vehicle, never by trigger."""
    rng = random.Random(seed)
    return atk.encode_lid_burst(rng.getrandbits(atk.SYNC_BITS),
                                tuple(rng.getrandbits(atk.PAYLOAD_BITS) for _ in range(3)))


@dataclass(frozen=True)
class SessionState:
    profile: StandardProfile
    wiring: atk.WiringHarness
    evse: EvseState = EvseState()
    ev: EvState = EvState()
    device: atk.ProgrammableResistor = atk.ProgrammableResistor()
    gun: Callable = legacy_gun
    advertised_duty: float = 50.0
    t_ms: int = 0
    plugged: bool = False
    pressed: bool = False
    delivered_wh: float = 0.0
    lid_code: str = ""
    recorded_burst: str = ""
    bms: Optional[BmsState] = None
    thermal: Optional[ThermalParams] = None
    bms_clock_ms: int = 0
    peak_bms_temp_c: Optional[float] = None
    payloads: Any = None  # index -> list[CanFrame]; None means the built-in table


def _rec(t, source, kind, **data) -> TraceRecord:
    return TraceRecord(t, source, kind, data)


def _r(x, nd=6):
    return None if x is None else round(float(x), nd)


def _ohm_repr(x):
    return "open" if x is OPEN else _r(x, 3)


def _observe_cc(s: SessionState):
    """CC class as the EV derives it: measure the divider voltage, infer resistance."""
    p = s.profile
    if not s.plugged:
        return CcClass.OPEN, p.cc_source_volt
    eff = atk.effective_cc(s.wiring)
    lower = Switch(closed=False) if eff is OPEN else Resistor(eff)
    volts = divider_voltage(p.cc_source_volt, p.cc_pullup_ohm, lower)
    inferred = resistance_from_divider(volts, p.cc_source_volt, p.cc_pullup_ohm)
    return classify_cc(inferred, p), volts


def _observed_duty(s: SessionState) -> float:
    if s.wiring.cp_duty_override is not None:
        return s.wiring.cp_duty_override
    return s.advertised_duty


def _evse_sees_cp(s: SessionState) -> CpState:
    z = impedance_at(ev_cp_network(s.ev.cp_state), 0.0)
    return classify_cp(OPEN if z is OPEN else z.resistance)


def _battery_current(s: SessionState) -> float:
    return s.evse.current if s.evse.phase is Phase.CHARGING else 0.0


def _advance(s: SessionState, t: int, out: list) -> SessionState:
    dt = t - s.t_ms
    if dt <= 0:
        return s
    current = _battery_current(s)
    delivered = s.delivered_wh + current * MAINS_VOLT * dt / 3_600_000.0
    bms, clock, peak = s.bms, s.bms_clock_ms, s.peak_bms_temp_c
    if bms is not None:
        while clock + 1000 <= t:
            before = bms
            bms = bms_tick(bms, current, BMS_DT_S, s.thermal)
            clock += 1000
            peak = max(peak, bms.temp_c)
            if before.mosfet_on and not bms.mosfet_on:
                out.append(_rec(clock, "bms", "mosfet-open", temp_c=_r(bms.temp_c, 3)))
            if clock % BMS_SAMPLE_MS == 0:
                out.append(_rec(clock, "bms", "temp-sample", temp_c=_r(bms.temp_c, 3),
                                mosfet_on=bms.mosfet_on, current_a=_r(current)))
    return replace(s, t_ms=t, delivered_wh=delivered, bms=bms, bms_clock_ms=clock, peak_bms_temp_c=peak)


def _set_genuine(s: SessionState) -> SessionState:
    net = s.gun(s.profile, s.pressed) if s.plugged else Switch(closed=False)
    return replace(s, wiring=replace(s.wiring, genuine_cc=net))


def _set_evse(s: SessionState, evse: EvseState, out: list, **why) -> SessionState:
    if evse == s.evse:
        return s
    out.append(_rec(s.t_ms, "evse", "transition", **{"from": str(s.evse), "to": str(evse)}, **why))
    return replace(s, evse=evse)


def _set_ev(s: SessionState, out: list, kind: str, **changes) -> SessionState:
    ev = replace(s.ev, **changes)
    if ev == s.ev:
        return s
    data = {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in changes.items()}
    out.append(_rec(s.t_ms, "ev", kind, **data))
    return replace(s, ev=ev)


def _apply_command(s: SessionState, frame: bytes, out: list) -> SessionState:
    t = s.t_ms
    try:
        cmd = atk.decode_command(frame)
    except ChecksumError as exc:
        out.append(_rec(t, "attacker", "frame-rejected", frame=bytes(frame).hex(), error=str(exc)))
        return s
    out.append(_rec(t, "attacker", "command", op=cmd.opcode.name.lower(), arg=cmd.arg,
                    frame=frame.hex()))
    w = s.wiring
    if cmd.opcode is atk.Opcode.DISARM:
        return replace(s, wiring=replace(w, attacker_cc_override=None, cp_duty_override=None),
                       device=replace(s.device, armed=False))
    if cmd.opcode is atk.Opcode.SET_CC_RESISTANCE:
        try:
            dev, override = atk.cc_override_for(s.device, cmd.arg)
        except InputError as exc:
            out.append(_rec(t, "attacker", "unreachable", error=str(exc)))
            return s
        out.append(_rec(t, "attacker", "cc-override", ohm=_ohm_repr(override), tap=dev.current_tap))
        return replace(s, device=dev, wiring=replace(w, attacker_cc_override=override))
    if cmd.opcode is atk.Opcode.SET_CP_DUTY:
        duty = cmd.arg / 100.0
        if duty > 100.0:
            out.append(_rec(t, "attacker", "unreachable", error=f"duty {duty} > 100"))
            return s
        return replace(s, wiring=replace(w, cp_duty_override=duty))
    if cmd.opcode is atk.Opcode.TRIGGER_CAN_PAYLOAD:
        if not (w.can_tap and s.plugged):
            out.append(_rec(t, "attacker", "can-unavailable"))
            return s
        frames = (PAYLOADS if s.payloads is None else s.payloads).get(cmd.arg)
        if frames is None:
            out.append(_rec(t, "attacker", "unknown-payload", index=cmd.arg))
            return s
        if s.bms is None:
            out.append(_rec(t, "attacker", "can-no-listener"))
            return s
        bms = s.bms
        for fr in frames:
            before = bms.mosfet_override
            bms = bms_feed(bms, fr)
            out.append(_rec(t, "bms", "can-frame", frame=fr.to_text()))
            if bms.mosfet_override != before:
                out.append(_rec(t, "bms", "override-written", value=bms.mosfet_override))
        return replace(s, bms=bms)
    # replay the recorded lid burst verbatim
    try:
        heard = atk.decode_lid_burst(s.recorded_burst)
    except MalformedBurstError as exc:
        out.append(_rec(t, "attacker", "replay-failed", error=str(exc)))
        return s
    out.append(_rec(t, "attacker", "lid-replay", burst=atk.burst_to_hex(s.recorded_burst)))
    if s.lid_code and heard.encode() == s.lid_code:
        return _set_ev(s, out, "lid", lid_open=True)
    return s


def _apply_event(s: SessionState, e: SimEvent, out: list) -> SessionState:
    t, k = s.t_ms, e.kind
    if k is EventKind.PLUG_IN:
        if s.plugged:
            out.append(_rec(t, "ev", "ignored", event=k.value))
            return s
        out.append(_rec(t, "ev", "plug-in"))
        s = _set_genuine(replace(s, plugged=True, pressed=False))
        s = _set_ev(s, out, "lid", lid_open=True)
        if s.evse.phase in (Phase.HALTED, Phase.SESSION_ENDED):
            s = _set_evse(s, EvseState(Phase.IDLE), out, cause="replug")
        return s
    if k is EventKind.UNPLUG:
        if not s.plugged:
            out.append(_rec(t, "ev", "ignored", event=k.value))
            return s
        if s.ev.lock_engaged:
            out.append(_rec(t, "ev", "unplug-blocked"))
            return s
        out.append(_rec(t, "ev", "unplug"))
        s = _set_genuine(replace(s, plugged=False, pressed=False))
        if s.evse.phase in (Phase.GUN_CONNECTED, Phase.HALTED):
            s = _set_evse(s, EvseState(Phase.SESSION_ENDED), out, cause="unplug")
        return s
    if k in (EventKind.BUTTON_PRESS, EventKind.BUTTON_RELEASE):
        pressed = k is EventKind.BUTTON_PRESS
        out.append(_rec(t, "ev", k.value))
        return _set_genuine(replace(s, pressed=pressed))
    if k is EventKind.USER_STOP:
        out.append(_rec(t, "ev", "user-stop"))
        if s.evse.phase is Phase.CHARGING:
            return _set_evse(s, EvseState(Phase.HALTED, reason=HaltReason.USER_STOP), out)
        return s
    if k is EventKind.ATTACKER_CMD:
        return _apply_command(s, bytes(e.value), out)
    if k is EventKind.TEMP_SET:
        return _set_ev(s, out, "gun-temp", gun_temp_c=float(e.value))
    return s  # tick: time already advanced


def _halt(s, reason, out, **why):
    return _set_evse(s, EvseState(Phase.HALTED, reason=reason), out, **why)


def _react(s: SessionState, out: list) -> SessionState:
    t, p = s.t_ms, s.profile
    cc, volts = _observe_cc(s)
    prev = s.ev.cc_class
    sequence_done = False
    press_t = s.ev.press_t
    if cc is not prev:
        out.append(_rec(t, "ev", "cc-change", **{"from": prev.value, "to": cc.value}, volts=_r(volts)))
        if cc is CcClass.CONNECTED_PRESSED:
            press_t = t
        elif (cc is CcClass.CONNECTED_UNPRESSED and prev is CcClass.CONNECTED_PRESSED
              and press_t is not None and t - press_t <= UNLOCK_WINDOW_MS):
            sequence_done = True
            press_t = None
        else:
            press_t = None
        s = replace(s, ev=replace(s.ev, cc_class=cc, press_t=press_t))

    if not cc.connected and s.ev.lock_engaged:
        s = _set_ev(s, out, "lock", lock_engaged=False)

    phase = s.evse.phase
    if phase is Phase.IDLE:
        if s.plugged and cc.connected:
            s = _set_evse(s, EvseState(Phase.GUN_CONNECTED), out)
            s = _set_ev(s, out, "cp-state", cp_state=CpState.B_CONNECTED)
            if p.has_lock:
                s = _set_ev(s, out, "lock", lock_engaged=True)
        return s

    if phase is Phase.GUN_CONNECTED:
        if not cc.connected:
            return _halt(s, HaltReason.CC_FAULT, out, cc=cc.value)
        if sequence_done:
            s = _set_ev(s, out, "cp-state", cp_state=CpState.C_CHARGING)
            if _evse_sees_cp(s) is not CpState.C_CHARGING:
                return _halt(s, HaltReason.CP_FAULT, out)
            s = _set_evse(s, EvseState(Phase.HANDSHAKE), out)
            duty = _observed_duty(s)
            current = duty_to_current(duty)
            if current is None:
                return _halt(s, HaltReason.CP_FAULT, out, duty=duty)
            s = _set_evse(s, EvseState(Phase.CHARGING, current=current), out, duty=duty)
        return s

    if phase is Phase.CHARGING:
        if s.ev.gun_temp_c >= GUN_TEMP_LIMIT_C:
            s = _halt(s, HaltReason.THERMAL_CUTOFF, out, gun_temp_c=s.ev.gun_temp_c)
        elif not cc.connected:
            s = _halt(s, HaltReason.CC_FAULT, out, cc=cc.value)
        elif _evse_sees_cp(s) is CpState.D_FAULT:
            s = _halt(s, HaltReason.CP_FAULT, out)
        else:
            duty = _observed_duty(s)
            current = duty_to_current(duty)
            if current is None:
                s = _halt(s, HaltReason.ATTACK_OBSERVED_DUTY, out, duty=duty)
            elif current != s.evse.current:
                s = _set_evse(s, EvseState(Phase.CHARGING, current=current), out, duty=duty)
        if s.evse.phase is not Phase.CHARGING:
            s = _set_ev(s, out, "cp-state",
                        cp_state=CpState.B_CONNECTED if s.plugged else CpState.A_NOT_CONNECTED)
        return s

    # halted or ended: only the unlock handshake matters
    if sequence_done and s.ev.lock_engaged:
        s = _set_ev(s, out, "lock", lock_engaged=False)
    if not s.plugged:
        s = _set_ev(s, out, "cp-state", cp_state=CpState.A_NOT_CONNECTED)
    return s


def step(state: SessionState, event: SimEvent):
    """Advance to ``event.t``, apply the event, let both sides react.

    Returns ``(new_state, trace_records)``.
    """
    if event.t < state.t_ms:
        raise HarnessError(f"event at t={event.t} ms precedes current time {state.t_ms} ms")
    out: list = []
    s = _advance(state, event.t, out)
    s = _apply_event(s, event, out)
    s = _react(s, out)
    return s, out


@dataclass(frozen=True)
class SessionOutcome:
    final_evse: EvseState
    final_ev: EvState
    gun_removable: bool
    delivered_wh: float
    trace: tuple
    bms: Optional[BmsState] = None
    peak_bms_temp_c: Optional[float] = None

    def trace_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.trace)

    def records(self, source=None, kind=None):
        return [r for r in self.trace
                if (source is None or r.source == source) and (kind is None or r.kind == kind)]


def initial_state(profile: StandardProfile, wiring: Optional[atk.WiringHarness] = None, seed: int = 0,
                  *, advertised_duty: float = 50.0, thermal: Optional[ThermalParams] = None,
                  gun: Callable = legacy_gun, bms: Optional[BmsState] = None,
                  payloads: Optional[dict] = None) -> SessionState:
    wiring = wiring or atk.WiringHarness(genuine_cc=Switch(closed=False))
    wiring.check(profile)
    if duty_to_current(advertised_duty) is None:
        raise InputError(f"advertised duty {advertised_duty} % is outside the pilot range")
    code = lid_code_for(seed)
    if thermal is not None and bms is None:
        bms = BmsState(temp_c=thermal.ambient_c, ambient_c=thermal.ambient_c)
    return SessionState(
        profile=profile, wiring=wiring, gun=gun, advertised_duty=advertised_duty,
        lid_code=code, recorded_burst=code, bms=bms, thermal=thermal,
        peak_bms_temp_c=None if bms is None else bms.temp_c, payloads=payloads,
    )


def run_session(profile: StandardProfile, script, wiring: Optional[atk.WiringHarness] = None,
                seed: int = 0, **options) -> SessionOutcome:
    """Replay ``script`` until it is exhausted or the session has ended."""
    s = initial_state(profile, wiring, seed, **options)
    trace = [_rec(0, "evse", "session-start", standard=profile.id.value, seed=seed,
                  advertised_duty=s.advertised_duty, lid_burst=atk.burst_to_hex(s.lid_code),
                  bms=s.bms is not None)]
    for event in script:
        if s.evse.phase is Phase.SESSION_ENDED:
            break
        s, records = step(s, event)
        trace.extend(records)
    trace.append(_rec(s.t_ms, "evse", "session-end", state=str(s.evse),
                      delivered_wh=_r(s.delivered_wh), gun_removable=not s.ev.lock_engaged,
                      bms_temp_c=None if s.bms is None else _r(s.bms.temp_c, 3)))
    return SessionOutcome(
        final_evse=s.evse, final_ev=s.ev, gun_removable=not s.ev.lock_engaged,
        delivered_wh=s.delivered_wh, trace=tuple(trace), bms=s.bms,
        peak_bms_temp_c=s.peak_bms_temp_c,
    )
