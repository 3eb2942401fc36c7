import json

import pytest

from chargesim.circuit import OPEN, impedance_at
from chargesim.errors import UndefinedDeviationError
from chargesim.standards import (
    CP_STATE_C_OHM, MEASURED_SPOOFS, CcClass, CpState, StandardId, all_profiles, classify_cc,
    classify_cp, deviation_percent, ev_cp_network, export_profiles, legacy_gun, profile_of,
)

EXPECTED = {
    "sae-j1772": (480, 150), "ccs-i": (480, 150), "iec-61851": (1030, 760), "ccs-ii": (1030, 760),
    "nacs": (460, 400), "gbt-20234-2": (220, 3520), "gbt-20234-3": (0, 1000),
}


def test_seven_profiles_with_table_values():
    profiles = all_profiles()
    assert [p.id.value for p in profiles] == list(EXPECTED)
    for p in profiles:
        assert (p.unpressed_ohm, p.pressed_ohm) == EXPECTED[p.id.value]
        assert p.tolerance_percent == 6


def test_capability_flags():
    assert [p.id for p in all_profiles() if not p.has_lock] == [StandardId.CCS_II]
    assert {p.id for p in all_profiles() if p.exposes_can} == {StandardId.NACS, StandardId.GBT_20234_3}


@pytest.mark.parametrize("text, expected", [
    ("GB/T 20234.3", StandardId.GBT_20234_3), ("gbt_20234_2", StandardId.GBT_20234_2),
    ("SAE J1772", StandardId.SAE_J1772), ("ccs-ii", StandardId.CCS_II), ("NACS", StandardId.NACS),
])
def test_parse(text, expected):
    assert StandardId.parse(text) is expected


def test_parse_unknown():
    with pytest.raises(ValueError):
        StandardId.parse("chademo")


@pytest.mark.parametrize("p", all_profiles(), ids=lambda p: p.id.value)
@pytest.mark.parametrize("pressed", [False, True])
def test_legacy_gun_presents_table_value(p, pressed):
    r = impedance_at(legacy_gun(p, pressed), 0).magnitude
    want = p.pressed_ohm if pressed else p.unpressed_ohm
    assert r == pytest.approx(want)
    expected_class = CcClass.CONNECTED_PRESSED if pressed else CcClass.CONNECTED_UNPRESSED
    assert classify_cc(r, p) is expected_class


class TestClassifyCc:
    def test_open(self):
        assert classify_cc(OPEN, profile_of("sae-j1772")) is CcClass.OPEN

    def test_short_is_fault_except_gbt_dc(self):
        assert classify_cc(0.0, profile_of("sae-j1772")) is CcClass.FAULT
        assert classify_cc(0.0, profile_of("gbt-20234-3")) is CcClass.CONNECTED_UNPRESSED

    def test_tolerance_edges(self):
        p = profile_of("sae-j1772")
        assert classify_cc(480 * 1.06, p) is CcClass.CONNECTED_UNPRESSED
        assert classify_cc(480 * 1.061, p) is CcClass.FAULT
        assert classify_cc(150 * 0.94, p) is CcClass.CONNECTED_PRESSED

    def test_measured_spoof_values_classify(self):
        for p in all_profiles():
            u_real, _, p_real, _ = MEASURED_SPOOFS[p.id]
            assert classify_cc(u_real, p) is CcClass.CONNECTED_UNPRESSED
            assert classify_cc(p_real, p) is CcClass.CONNECTED_PRESSED


class TestDeviation:
    @pytest.mark.parametrize("expected, real, dev", [
        (480, 487, 1.5), (150, 145, -3.3), (1030, 1027, -0.3), (760, 768, 1.1),
        (460, 466, 1.3), (400, 390, -2.5), (220, 210, -4.5), (3520, 3511, -0.3), (1000, 1003, 0.3),
    ])
    def test_rounding(self, expected, real, dev):
        assert deviation_percent(expected, real) == dev

    def test_zero_expected(self):
        assert deviation_percent(0, 0) == 0.0
        with pytest.raises(UndefinedDeviationError):
            deviation_percent(0, 3)


class TestControlPilot:
    def test_state_c_value(self):
        assert CP_STATE_C_OHM == pytest.approx(2740 * 1300 / 4040)
        assert abs(CP_STATE_C_OHM - 880) / 880 < 0.005

    @pytest.mark.parametrize("state", list(CpState))
    def test_network_round_trip(self, state):
        z = impedance_at(ev_cp_network(state), 0)
        assert classify_cp(OPEN if z is OPEN else z.resistance) is state

    @pytest.mark.parametrize("ohm, state", [
        (OPEN, CpState.A_NOT_CONNECTED), (2740, CpState.B_CONNECTED), (881.68, CpState.C_CHARGING),
        (240, CpState.VENTILATION), (0, CpState.D_FAULT), (1500, CpState.D_FAULT),
    ])
    def test_classify(self, ohm, state):
        assert classify_cp(ohm) is state


def test_export_profiles(tmp_path):
    path = tmp_path / "profiles.json"
    export_profiles(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert [d["id"] for d in data] == list(EXPECTED)
    assert data[3]["has_lock"] is False
