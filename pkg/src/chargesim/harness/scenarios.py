"""Named attack scenarios, JSON scenario files and outcome predicates."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

from .. import attacker as atk
from ..bms import CanFrame, ThermalParams
from ..circuit import OPEN, Switch
from ..errors import HarnessError, MalformedInputError, UnknownScenarioError
from ..session import SessionOutcome, SimEvent, at, attack, run_session
from ..standards import StandardId, StandardProfile, profile_of

HOUR_MS = 3_600_000
PLUG_T, PRESS_T, RELEASE_T = 0, 1000, 1500
ATTACK_T = 60_000


@dataclass(frozen=True)
class Scenario:
    name: str
    standard: StandardId
    script: tuple
    wiring: atk.WiringHarness = field(default_factory=lambda: atk.WiringHarness(Switch(closed=False)))
    expected: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    description: str = ""

    @property
    def profile(self) -> StandardProfile:
        return profile_of(self.standard)

    def run(self, seed: int = 0) -> SessionOutcome:
        return run_session(self.profile, self.script, self.wiring, seed, **self.options)


def _start_charging():
    return [at(PLUG_T, "plug-in"), at(PRESS_T, "button-press"), at(RELEASE_T, "button-release")]


def _unlock_attempt(t0):
    return [at(t0, "user-stop"), at(t0 + 1000, "button-press"), at(t0 + 1500, "button-release"),
            at(t0 + 2000, "unplug")]


def _dos_value(p: StandardProfile):
    # 0 ohm is the genuine unpressed value on GB/T DC, so cut the line instead
    return OPEN if p.unpressed_ohm == 0 else 0.0


def nominal(p: StandardProfile) -> Scenario:
    script = _start_charging() + _unlock_attempt(RELEASE_T + HOUR_MS)
    return Scenario("nominal", p.id, tuple(script),
                    expected={"final_state": "session-ended", "gun_removable": True,
                              "delivered_wh_min": 32 * 220 - 1},
                    description="plug, confirm, charge one hour, stop, unlock, unplug")


def dos_cc(p: StandardProfile) -> Scenario:
    script = _start_charging() + [attack(ATTACK_T, atk.AttackCommand.set_cc(_dos_value(p))),
                                  at(ATTACK_T + 100, "tick")]
    return Scenario("dos-cc", p.id, tuple(script),
                    expected={"final_state": "halted(cc-fault)", "halt_within_ms": 100},
                    description="attacker shorts (or cuts) CC mid-session")


def dos_cp(p: StandardProfile) -> Scenario:
    script = _start_charging() + [attack(ATTACK_T, atk.AttackCommand.set_cp_duty(5)),
                                  at(ATTACK_T + 100, "tick")]
    return Scenario("dos-cp", p.id, tuple(script),
                    expected={"final_state": "halted(attack-observed-duty)", "halt_within_ms": 100},
                    description="attacker injects a 5 % pilot")


def pwm_inject(p: StandardProfile) -> Scenario:
    script = _start_charging() + [attack(ATTACK_T, atk.AttackCommand.set_cp_duty(85)),
                                  at(ATTACK_T + 60_000, "tick")]
    return Scenario("pwm-inject", p.id, tuple(script),
                    expected={"final_state": "charging(51A)"},
                    description="attacker raises the pilot duty from 50 % to 85 % (32 A -> 51 A)")


def deadlock(p: StandardProfile) -> Scenario:
    pin = atk.AttackCommand.set_cc(p.unpressed_ohm)
    script = _start_charging() + [attack(ATTACK_T, pin)] + _unlock_attempt(600_000)
    return Scenario("deadlock", p.id, tuple(script),
                    expected={"gun_removable": False},
                    description="attacker pins CC at the unpressed value so unlocking never registers")


def thermal(p: StandardProfile) -> Scenario:
    script = _start_charging() + [at(ATTACK_T, "temp-set", 92.0)]
    return Scenario("thermal", p.id, tuple(script),
                    expected={"final_state": "halted(thermal-cutoff)"},
                    description="gun temperature sensor reports 92 degC")


def _can_session(p, name, with_payload, expected, description):
    script = _start_charging()
    if with_payload:
        script.append(attack(2000, atk.AttackCommand.trigger_can(0)))
    script.append(at(2 * HOUR_MS, "tick"))
    return Scenario(name, p.id, tuple(script),
                    wiring=atk.WiringHarness(Switch(closed=False), can_tap=p.exposes_can),
                    expected=expected,
                    options={"advertised_duty": 85.0, "thermal": ThermalParams.calibrated()},
                    description=description)


def can_overheat(p: StandardProfile) -> Scenario:
    return _can_session(p, "can-overheat", True,
                        {"bms_overridden": True, "final_bms_temp_min_c": 56.0,
                         "final_bms_temp_max_c": 56.97},
                        "overflow the BMS staging buffer over S+/S-, then charge at 51 A for 2 h")


def can_baseline(p: StandardProfile) -> Scenario:
    params = ThermalParams.calibrated()
    return _can_session(p, "can-baseline", False,
                        {"bms_overridden": False,
                         "peak_bms_temp_max_c": 40.0 + params.alpha * 51.0 * 1.0},
                        "same 2 h, 51 A session without the exploit")


def lid_replay(p: StandardProfile) -> Scenario:
    return Scenario("lid-replay", p.id, (attack(1000, atk.AttackCommand.replay_lid()),),
                    expected={"lid_open": True},
                    description="replay the recorded open-lid burst at a closed port")


LIBRARY: dict[str, tuple[Callable[[StandardProfile], Scenario], StandardId]] = {
    "nominal": (nominal, StandardId.SAE_J1772),
    "dos-cc": (dos_cc, StandardId.SAE_J1772),
    "dos-cp": (dos_cp, StandardId.SAE_J1772),
    "pwm-inject": (pwm_inject, StandardId.SAE_J1772),
    "deadlock": (deadlock, StandardId.GBT_20234_2),
    "thermal": (thermal, StandardId.GBT_20234_3),
    "can-overheat": (can_overheat, StandardId.NACS),
    "can-baseline": (can_baseline, StandardId.NACS),
    "lid-replay": (lid_replay, StandardId.NACS),
}


def build(name: str, standard=None) -> Scenario:
    try:
        factory, default = LIBRARY[name]
    except KeyError:
        raise UnknownScenarioError(f"unknown scenario {name!r}; known: {', '.join(LIBRARY)}") from None
    return factory(profile_of(standard or default))


# --- predicates ----------------------------------------------------------------

def _halt_latency(o: SessionOutcome):
    cmd = next((r.t_ms for r in o.trace if r.source == "attacker" and r.kind == "command"), None)
    halt = next((r.t_ms for r in o.trace if r.source == "evse" and r.kind == "transition"
                 and r.data["to"].startswith("halted")), None)
    if cmd is None or halt is None:
        return None
    return halt - cmd


def _bms_temp(o):
    return None if o.bms is None else o.bms.temp_c


_PREDICATES: dict[str, tuple[Callable, Callable]] = {
    # name: (actual value from outcome, comparison(actual, expected))
    "final_state": (lambda o: str(o.final_evse), lambda a, e: a == e),
    "final_phase": (lambda o: o.final_evse.phase.value, lambda a, e: a == e),
    "halt_reason": (lambda o: o.final_evse.reason and o.final_evse.reason.value, lambda a, e: a == e),
    "gun_removable": (lambda o: o.gun_removable, lambda a, e: a == e),
    "lid_open": (lambda o: o.final_ev.lid_open, lambda a, e: a == e),
    "delivered_wh_min": (lambda o: o.delivered_wh, lambda a, e: a >= e),
    "final_current_a": (lambda o: o.final_evse.current,
                        lambda a, e: a is not None and math.isclose(a, e, abs_tol=1e-9)),
    "halt_within_ms": (_halt_latency, lambda a, e: a is not None and a <= e),
    "bms_overridden": (lambda o: o.bms is not None and o.bms.compromised, lambda a, e: a == e),
    "final_bms_temp_min_c": (_bms_temp, lambda a, e: a is not None and a >= e),
    "final_bms_temp_max_c": (_bms_temp, lambda a, e: a is not None and a <= e),
    "peak_bms_temp_max_c": (lambda o: o.peak_bms_temp_c, lambda a, e: a is not None and a <= e),
}


@dataclass(frozen=True)
class PredicateResult:
    name: str
    expected: object
    actual: object
    passed: bool


def check(outcome: SessionOutcome, expected: dict) -> list[PredicateResult]:
    results = []
    for name, want in expected.items():
        if name not in _PREDICATES:
            raise HarnessError(f"unknown predicate {name!r}")
        getter, cmp = _PREDICATES[name]
        actual = getter(outcome)
        results.append(PredicateResult(name, want, actual, bool(cmp(actual, want))))
    return results


# --- JSON scenario files ---------------------------------------------------------

def scenario_to_dict(sc: Scenario) -> dict:
    w = sc.wiring
    d = {
        "name": sc.name,
        "standard": sc.standard.value,
        "description": sc.description,
        "wiring": {
            "can_tap": w.can_tap,
            "cc_override": None if w.attacker_cc_override is None else
            ("open" if w.attacker_cc_override is OPEN else w.attacker_cc_override),
            "cp_duty_override": w.cp_duty_override,
        },
        "script": [e.to_dict() for e in sc.script],
        "expected": sc.expected,
    }
    if "advertised_duty" in sc.options:
        d["advertised_duty"] = sc.options["advertised_duty"]
    th = sc.options.get("thermal")
    if th is not None:
        d["thermal"] = {"alpha": th.alpha, "beta": th.beta, "ambient_c": th.ambient_c}
    return d


def scenario_from_dict(d: dict) -> Scenario:
    try:
        standard = StandardId.parse(d["standard"])
        w = d.get("wiring", {})
        override = w.get("cc_override")
        if override == "open":
            override = OPEN
        elif override is not None:
            override = float(override)
        wiring = atk.WiringHarness(Switch(closed=False), attacker_cc_override=override,
                                   cp_duty_override=w.get("cp_duty_override"),
                                   can_tap=bool(w.get("can_tap", False)))
        script = tuple(SimEvent.from_dict(e) for e in d["script"])
        options = {}
        if "advertised_duty" in d:
            options["advertised_duty"] = float(d["advertised_duty"])
        th = d.get("thermal")
        if th == "calibrated":
            options["thermal"] = ThermalParams.calibrated()
        elif th is not None:
            options["thermal"] = ThermalParams(**th)
        if "can_payloads" in d:
            options["payloads"] = {int(k): [CanFrame.from_text(f) for f in frames]
                                   for k, frames in d["can_payloads"].items()}
        expected = dict(d.get("expected", {}))
        for name in expected:
            if name not in _PREDICATES:
                raise MalformedInputError(f"unknown predicate {name!r}")
        return Scenario(str(d.get("name", "custom")), standard, script, wiring, expected, options,
                        str(d.get("description", "")))
    except HarnessError as exc:
        raise MalformedInputError(str(exc)) from None
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise MalformedInputError(f"malformed scenario: {exc!r}") from None


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise MalformedInputError(f"{path}: scenario must be a JSON object")
    return scenario_from_dict(data)
