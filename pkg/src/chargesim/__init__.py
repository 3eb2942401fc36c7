"""Simulator for physical-layer attacks on EV charging connectors.

Models the CC/CP analog interface of seven connector standards, an attacker
board that spoofs those signals, a BMS reachable over exposed CAN pins, and an
RC-based dual-check countermeasure. Everything is deterministic given a seed.
"""
from .errors import (
    ChargeSimError, ChecksumError, HarnessError, InputError, MalformedBurstError,
    MalformedInputError, RangeError, UndefinedDeviationError, UnknownScenarioError, UnreachableError,
)
from .circuit import (
    OPEN, Capacitor, Inductor, Parallel, PilotSignal, Resistor, Series, Switch,
    current_to_duty, divider_voltage, duty_to_current, impedance_at,
)
from .standards import (
    CcClass, CpState, StandardId, StandardProfile, all_profiles, classify_cc, classify_cp,
    deviation_percent, legacy_gun, profile_of,
)
from .attacker import AttackCommand, ProgrammableResistor, WiringHarness, decode_lid_burst, encode_lid_burst
from .bms import BmsState, CanFrame, ThermalParams, bms_feed, bms_tick, exploit_sequence
from .countermeasure import ReferenceSignature, Verdict, choose_probe_freqs, dual_check, reference_gun
from .session import EvseState, EvState, SessionOutcome, SimEvent, TraceRecord, run_session, step

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
