import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from chargesim.circuit import (
    DUTY_MAX, DUTY_MIN, OPEN, Capacitor, ComplexImpedance, Inductor, Parallel, PilotSignal,
    Resistor, Series, Switch, current_to_duty, divider_voltage, duty_to_current, impedance_at,
    magnitude, resistance_from_divider,
)
from chargesim.errors import InputError, RangeError


def z(net, f=0.0):
    return impedance_at(net, f)


class TestPrimitives:
    def test_resistor_is_frequency_independent(self):
        for f in (0, 50, 1e3, 1e6):
            assert z(Resistor(480), f) == ComplexImpedance(480.0, 0.0)

    def test_inductor_reactance(self):
        # 2*pi*1000*10mH
        assert z(Inductor(0.01), 1000).reactance == pytest.approx(62.83, abs=0.01)
        assert z(Inductor(0.01), 0) == ComplexImpedance(0.0, 0.0)

    def test_capacitor_open_at_dc(self):
        assert z(Capacitor(1e-6), 0) is OPEN

    def test_capacitor_reactance(self):
        assert z(Capacitor(1e-6), 1000).reactance == pytest.approx(-159.155, abs=1e-3)

    def test_switch(self):
        assert z(Switch(closed=True)).magnitude == 0
        assert z(Switch(closed=False)) is OPEN

    @pytest.mark.parametrize("bad", [lambda: Resistor(-1), lambda: Capacitor(0), lambda: Inductor(-1e-3),
                                     lambda: Series(), lambda: Parallel()])
    def test_invalid_construction(self, bad):
        with pytest.raises(InputError):
            bad()

    def test_negative_frequency_rejected(self):
        with pytest.raises(InputError):
            z(Resistor(1), -1)

    def test_open_is_singleton(self):
        import copy
        import pickle
        assert copy.deepcopy(OPEN) is OPEN
        assert pickle.loads(pickle.dumps(OPEN)) is OPEN
        assert magnitude(OPEN) is OPEN


class TestComposition:
    def test_cp_state_c_parallel(self):
        assert z(Parallel(Resistor(2740), Resistor(1300))).magnitude == pytest.approx(881.68, abs=0.01)

    def test_series_with_open_is_open(self):
        assert z(Series(Resistor(100), Switch(closed=False))) is OPEN

    def test_parallel_skips_open_branch(self):
        assert z(Parallel(Resistor(100), Switch(closed=False))).magnitude == pytest.approx(100)

    def test_parallel_short_dominates(self):
        assert z(Parallel(Resistor(100), Switch(closed=True))).magnitude == 0

    def test_all_open_parallel(self):
        assert z(Parallel(Switch(closed=False), Capacitor(1e-6))) is OPEN

    def test_rc_block_against_cmath(self):
        f = 10_000.0
        zc = 1 / (1j * 2 * math.pi * f * 1e-6)
        oracle = 480 + (470 * zc) / (470 + zc)
        got = z(Series(Resistor(480), Parallel(Resistor(470), Capacitor(1e-6))), f)
        assert got.value == pytest.approx(oracle)
        assert abs(got.value) == pytest.approx(480.80, abs=0.01)

    def test_list_form_constructor(self):
        assert Series([Resistor(1), Resistor(2)]) == Series(Resistor(1), Resistor(2))

    def test_series_resonance(self):
        L, C = 1e-3, 1e-6
        f0 = 1 / (2 * math.pi * math.sqrt(L * C))
        got = z(Series(Resistor(10), Inductor(L), Capacitor(C)), f0)
        assert got.value == pytest.approx(10 + 0j, abs=1e-9)


ohms = st.floats(min_value=0.1, max_value=1e5, allow_nan=False)
freqs = st.floats(min_value=0.0, max_value=1e5, allow_nan=False)


def leaf():
    return st.one_of(
        ohms.map(Resistor),
        st.floats(min_value=1e-9, max_value=1e-3).map(Capacitor),
        st.floats(min_value=1e-6, max_value=1e-1).map(Inductor),
    )


def close(a, b):
    if a is OPEN or b is OPEN:
        return a is b
    return cmath.isclose(a.value, b.value, rel_tol=1e-9, abs_tol=1e-9)


class TestProperties:
    @settings(max_examples=200)
    @given(leaf(), leaf(), leaf(), st.floats(min_value=1.0, max_value=1e5))
    def test_series_associative_and_commutative(self, a, b, c, f):
        assert close(z(Series(Series(a, b), c), f), z(Series(a, Series(b, c)), f))
        assert close(z(Series(a, b), f), z(Series(b, a), f))

    @settings(max_examples=200)
    @given(leaf(), leaf(), leaf(), st.floats(min_value=1.0, max_value=1e5))
    def test_parallel_associative_and_commutative(self, a, b, c, f):
        assert close(z(Parallel(Parallel(a, b), c), f), z(Parallel(a, Parallel(b, c)), f))
        assert close(z(Parallel(a, b), f), z(Parallel(b, a), f))

    @given(st.lists(ohms, min_size=1, max_size=5), freqs, freqs)
    def test_resistive_networks_frequency_invariant(self, rs, f1, f2):
        net = Parallel(Series(*map(Resistor, rs)), Resistor(rs[0]))
        assert close(z(net, f1), z(net, f2))

    @given(ohms, ohms)
    def test_divider_monotonic(self, r1, r2):
        lo, hi = sorted((r1, r2))
        assert divider_voltage(12, 1000, Resistor(lo)) <= divider_voltage(12, 1000, Resistor(hi))

    @given(ohms)
    def test_divider_inverts(self, r):
        v = divider_voltage(5, 330, Resistor(r))
        assert resistance_from_divider(v, 5, 330) == pytest.approx(r, rel=1e-9)


class TestDivider:
    def test_state_b_voltage(self):
        assert divider_voltage(12, 1000, Resistor(2740)) == pytest.approx(12 * 2740 / 3740)
        assert divider_voltage(12, 1000, Resistor(2740)) == pytest.approx(8.79, abs=0.01)

    def test_open_and_short(self):
        assert divider_voltage(5, 330, Switch(closed=False)) == 5
        assert divider_voltage(5, 330, Switch(closed=True)) == 0
        assert resistance_from_divider(5, 5, 330) is OPEN
        assert resistance_from_divider(0, 5, 330) == 0


class TestPilot:
    def test_anchors_exact(self):
        assert duty_to_current(50) == 32.0
        assert duty_to_current(85) == 51.0

    @pytest.mark.parametrize("duty", [0, 5, 9.99, 85.01, 100])
    def test_out_of_band_means_no_power(self, duty):
        assert duty_to_current(duty) is None

    @pytest.mark.parametrize("duty", [-1, 100.5])
    def test_invalid_duty(self, duty):
        with pytest.raises(InputError):
            duty_to_current(duty)

    @given(st.floats(min_value=DUTY_MIN, max_value=DUTY_MAX))
    def test_round_trip(self, duty):
        assert current_to_duty(duty_to_current(duty)) == pytest.approx(duty)

    def test_monotonic(self):
        values = [duty_to_current(d / 10) for d in range(100, 851)]
        assert values == sorted(values)

    def test_current_out_of_range(self):
        with pytest.raises(RangeError):
            current_to_duty(60)

    def test_signal_timing(self):
        sig = PilotSignal.from_timing(time_on=0.5e-3, period=1e-3)
        assert sig.duty_percent == pytest.approx(50)
        assert sig.frequency == pytest.approx(1000)
        assert PilotSignal(85).time_on == pytest.approx(0.85e-3)
        with pytest.raises(InputError):
            PilotSignal(101)
