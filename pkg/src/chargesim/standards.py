"""Per-standard CC/CP constants and the classification rules the EV applies."""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass

from .circuit import OPEN, Network, Parallel, Resistor, Series, Switch
from .errors import UndefinedDeviationError

CC_TOLERANCE_PERCENT = 6.0
CP_TOLERANCE_PERCENT = 5.0

CP_SOURCE_VOLT = 12.0
CP_UPPER_OHM = 1000.0
CC_SOURCE_VOLT = 5.0
CC_PULLUP_OHM = 330.0

CP_STATE_B_OHM = 2740.0
CP_STATE_C_PARALLEL_OHM = 1300.0
CP_VENTILATION_OHM = 240.0
CP_STATE_C_OHM = CP_STATE_B_OHM * CP_STATE_C_PARALLEL_OHM / (CP_STATE_B_OHM + CP_STATE_C_PARALLEL_OHM)


class StandardId(str, enum.Enum):
    SAE_J1772 = "sae-j1772"
    CCS_I = "ccs-i"
    IEC_61851 = "iec-61851"
    CCS_II = "ccs-ii"
    NACS = "nacs"
    GBT_20234_2 = "gbt-20234-2"
    GBT_20234_3 = "gbt-20234-3"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "StandardId":
        key = text.strip().lower().replace("/", "")
        for ch in "_. ":
            key = key.replace(ch, "-")
        for member in cls:
            if key in (member.value, member.name.lower().replace("_", "-")):
                return member
        raise ValueError(f"unknown standard {text!r}; expected one of "
                         + ", ".join(m.value for m in cls))


@dataclass(frozen=True)
class StandardProfile:
    id: StandardId
    unpressed_ohm: float
    pressed_ohm: float
    has_lock: bool
    exposes_can: bool
    tolerance_percent: float = CC_TOLERANCE_PERCENT
    cc_source_volt: float = CC_SOURCE_VOLT
    cc_pullup_ohm: float = CC_PULLUP_OHM
    cp_source_volt: float = CP_SOURCE_VOLT
    cp_upper_ohm: float = CP_UPPER_OHM

    def to_dict(self) -> dict:
        d = asdict(self)
        d["id"] = self.id.value
        return d


_PROFILES = {
    p.id: p for p in (
        StandardProfile(StandardId.SAE_J1772, 480.0, 150.0, has_lock=True, exposes_can=False),
        StandardProfile(StandardId.CCS_I, 480.0, 150.0, has_lock=True, exposes_can=False),
        StandardProfile(StandardId.IEC_61851, 1030.0, 760.0, has_lock=True, exposes_can=False),
        StandardProfile(StandardId.CCS_II, 1030.0, 760.0, has_lock=False, exposes_can=False),
        StandardProfile(StandardId.NACS, 460.0, 400.0, has_lock=True, exposes_can=True),
        StandardProfile(StandardId.GBT_20234_2, 220.0, 3520.0, has_lock=True, exposes_can=False),
        StandardProfile(StandardId.GBT_20234_3, 0.0, 1000.0, has_lock=True, exposes_can=True),
    )
}

# Resistances measured on the spoofing hardware and the deviations printed
# alongside them: (unpressed real, unpressed %, pressed real, pressed %).
MEASURED_SPOOFS = {
    StandardId.SAE_J1772: (487.0, +1.5, 145.0, -3.3),
    StandardId.CCS_I: (487.0, +1.5, 145.0, -3.3),
    StandardId.IEC_61851: (1027.0, -0.3, 768.0, +1.1),
    StandardId.CCS_II: (1027.0, -0.3, 768.0, +1.1),
    StandardId.NACS: (466.0, +1.3, 390.0, -2.5),
    StandardId.GBT_20234_2: (210.0, -4.5, 3511.0, -0.3),
    StandardId.GBT_20234_3: (0.0, 0.0, 1003.0, +0.3),
}


def profile_of(standard) -> StandardProfile:
    if not isinstance(standard, StandardId):
        standard = StandardId.parse(standard)
    return _PROFILES[standard]


def all_profiles() -> list[StandardProfile]:
    return [_PROFILES[s] for s in StandardId]


def profiles_json() -> str:
    return json.dumps([p.to_dict() for p in all_profiles()], indent=2) + "\n"


def export_profiles(path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(profiles_json())


def legacy_gun(profile: StandardProfile, pressed: bool) -> Network:
    """Resistor-plus-travel-switch gun circuit as found in shipping connectors.

    The switch shorts the difference resistor in whichever button state uses the
    lower of the two table values.
    """
    low, high = sorted((profile.unpressed_ohm, profile.pressed_ohm))
    shorted = pressed == (profile.pressed_ohm == low)
    return Series(Resistor(low), Parallel(Switch(closed=shorted), Resistor(high - low)))


class CcClass(enum.Enum):
    OPEN = "open"
    CONNECTED_PRESSED = "connected-pressed"
    CONNECTED_UNPRESSED = "connected-unpressed"
    FAULT = "fault"

    @property
    def connected(self) -> bool:
        return self in (CcClass.CONNECTED_PRESSED, CcClass.CONNECTED_UNPRESSED)


def _within(measured: float, expected: float, tolerance_percent: float) -> bool:
    # inclusive edge; the epsilon absorbs binary rounding of values like 480 * 1.06
    return abs(measured - expected) / max(expected, 1.0) <= tolerance_percent / 100.0 + 1e-12


def classify_cc(measured_ohm, profile: StandardProfile) -> CcClass:
    if measured_ohm is OPEN:
        return CcClass.OPEN
    if _within(measured_ohm, profile.pressed_ohm, profile.tolerance_percent):
        return CcClass.CONNECTED_PRESSED
    if _within(measured_ohm, profile.unpressed_ohm, profile.tolerance_percent):
        return CcClass.CONNECTED_UNPRESSED
    return CcClass.FAULT


def deviation_percent(expected: float, real: float) -> float:
    if expected == 0:
        if real == 0:
            return 0.0
        raise UndefinedDeviationError(f"deviation from 0 ohm is undefined (real={real})")
    return round((real - expected) / expected * 100.0, 1)


class CpState(enum.Enum):
    A_NOT_CONNECTED = "A"
    B_CONNECTED = "B"
    C_CHARGING = "C"
    VENTILATION = "ventilation"
    D_FAULT = "D"

    @property
    def equivalent_resistance(self):
        return _CP_RESISTANCE[self]


_CP_RESISTANCE = {
    CpState.A_NOT_CONNECTED: OPEN,
    CpState.B_CONNECTED: CP_STATE_B_OHM,
    CpState.C_CHARGING: CP_STATE_C_OHM,
    CpState.VENTILATION: CP_VENTILATION_OHM,
    CpState.D_FAULT: 0.0,
}


def classify_cp(equivalent_ohm) -> CpState:
    if equivalent_ohm is OPEN:
        return CpState.A_NOT_CONNECTED
    for state in (CpState.B_CONNECTED, CpState.C_CHARGING, CpState.VENTILATION):
        if _within(equivalent_ohm, state.equivalent_resistance, CP_TOLERANCE_PERCENT):
            return state
    return CpState.D_FAULT


def ev_cp_network(state: CpState) -> Network:
    """The EV-side pull-down that produces ``state`` on the CP line."""
    if state is CpState.A_NOT_CONNECTED:
        return Switch(closed=False)
    if state is CpState.B_CONNECTED:
        return Resistor(CP_STATE_B_OHM)
    if state is CpState.C_CHARGING:
        return Parallel(Resistor(CP_STATE_B_OHM), Resistor(CP_STATE_C_PARALLEL_OHM))
    if state is CpState.VENTILATION:
        return Resistor(CP_VENTILATION_OHM)
    return Switch(closed=True)
