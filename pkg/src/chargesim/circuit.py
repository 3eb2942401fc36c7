"""Steady-state impedance of small R/L/C/switch networks, plus the CP/CC helpers.

Networks are trees of frozen dataclasses::

    gun = Series(Resistor(480), Parallel(Resistor(1000), Capacitor(10e-6)))
    impedance_at(gun, 0).magnitude      # 1480.0
    impedance_at(gun, 10_000)            # capacitor shorts the parallel block

An open path evaluates to the ``OPEN`` sentinel rather than ``float('inf')`` so
that comparisons stay exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import InputError, RangeError

__all__ = [
    "OPEN", "OpenCircuit", "ComplexImpedance", "Resistor", "Capacitor", "Inductor",
    "Switch", "Series", "Parallel", "Network", "impedance_at", "magnitude",
    "divider_voltage", "resistance_from_divider", "PilotSignal", "duty_to_current",
    "current_to_duty", "NOMINAL_PILOT_HZ", "DUTY_MIN", "DUTY_MAX",
]


class OpenCircuit:
    """Singleton marker for infinite impedance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OPEN"

    def __reduce__(self):
        return (OpenCircuit, ())


OPEN = OpenCircuit()


@dataclass(frozen=True)
class ComplexImpedance:
    resistance: float
    reactance: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.resistance, self.reactance)

    @property
    def value(self) -> complex:
        return complex(self.resistance, self.reactance)

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexImpedance":
        return cls(z.real, z.imag)


Impedance = Union[ComplexImpedance, OpenCircuit]
ZERO = ComplexImpedance(0.0, 0.0)


@dataclass(frozen=True)
class Resistor:
    ohms: float

    def __post_init__(self):
        if not self.ohms >= 0:
            raise InputError(f"resistance must be >= 0, got {self.ohms}")


@dataclass(frozen=True)
class Capacitor:
    farads: float

    def __post_init__(self):
        if not self.farads > 0:
            raise InputError(f"capacitance must be > 0, got {self.farads}")


@dataclass(frozen=True)
class Inductor:
    henries: float

    def __post_init__(self):
        if not self.henries > 0:
            raise InputError(f"inductance must be > 0, got {self.henries}")


@dataclass(frozen=True)
class Switch:
    closed: bool


@dataclass(frozen=True)
class Series:
    children: tuple

    def __init__(self, *children):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if not children:
            raise InputError("series node needs at least one child")
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Parallel:
    children: tuple

    def __init__(self, *children):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if not children:
            raise InputError("parallel node needs at least one child")
        object.__setattr__(self, "children", tuple(children))


Network = Union[Resistor, Capacitor, Inductor, Switch, Series, Parallel]


def impedance_at(net: Network, f: float) -> Impedance:
    """Complex impedance of ``net`` at frequency ``f`` (Hz), or ``OPEN``."""
    if f < 0:
        raise InputError(f"frequency must be >= 0, got {f}")
    return _eval(net, float(f))


def _eval(net, f):
    w = 2.0 * math.pi * f
    if isinstance(net, Resistor):
        return ComplexImpedance(float(net.ohms), 0.0)
    if isinstance(net, Switch):
        return ZERO if net.closed else OPEN
    if isinstance(net, Inductor):
        return ComplexImpedance(0.0, w * net.henries)
    if isinstance(net, Capacitor):
        if f == 0:
            return OPEN
        return ComplexImpedance(0.0, -1.0 / (w * net.farads))
    if isinstance(net, Series):
        total = 0j
        for child in net.children:
            z = _eval(child, f)
            if z is OPEN:
                return OPEN
            total += z.value
        return ComplexImpedance.from_complex(total)
    if isinstance(net, Parallel):
        admittance = 0j
        for child in net.children:
            z = _eval(child, f)
            if z is OPEN:
                continue
            if z.value == 0:
                return ZERO
            admittance += 1.0 / z.value
        if admittance == 0:
            return OPEN
        return ComplexImpedance.from_complex(1.0 / admittance)
    raise InputError(f"not a circuit node: {net!r}")


def magnitude(z: Impedance):
    """|Z| in ohms, or ``OPEN``."""
    return OPEN if z is OPEN else z.magnitude


def divider_voltage(source: float, upper: float, lower: Network, f: float = 0.0) -> float:
    """Voltage across ``lower`` when fed from ``source`` through ``upper`` ohms."""
    if not source > 0 or not upper > 0:
        raise InputError("source and upper must be positive")
    z = impedance_at(lower, f)
    if z is OPEN:
        return float(source)
    mag = z.magnitude
    if mag == 0:
        return 0.0
    return mag / (upper + mag) * source


def resistance_from_divider(volts: float, source: float, upper: float):
    """Invert ``divider_voltage`` for a resistive lower leg."""
    if volts >= source:
        return OPEN
    if volts <= 0:
        return 0.0
    return upper * volts / (source - volts)


NOMINAL_PILOT_HZ = 1000.0
DUTY_MIN = 10.0
DUTY_MAX = 85.0
# two anchor points: 50 % -> 32 A, 85 % -> 51 A
_ANCHOR_DUTY = 50.0
_ANCHOR_AMPS = 32.0


@dataclass(frozen=True)
class PilotSignal:
    duty_percent: float
    frequency: float = NOMINAL_PILOT_HZ
    high_level: float = 12.0
    low_level: float = -12.0

    def __post_init__(self):
        if not 0.0 <= self.duty_percent <= 100.0:
            raise InputError(f"duty must be within [0, 100], got {self.duty_percent}")
        if not self.frequency > 0:
            raise InputError("pilot frequency must be positive")

    @classmethod
    def from_timing(cls, time_on: float, period: float, **kw) -> "PilotSignal":
        return cls(duty_percent=time_on / period * 100.0, frequency=1.0 / period, **kw)

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def time_on(self) -> float:
        return self.period * self.duty_percent / 100.0


def duty_to_current(duty_percent: float):
    """Advertised current in amperes, or ``None`` meaning no-power/fault."""
    if not 0.0 <= duty_percent <= 100.0:
        raise InputError(f"duty must be within [0, 100], got {duty_percent}")
    if duty_percent < DUTY_MIN or duty_percent > DUTY_MAX:
        return None
    return _ANCHOR_AMPS + (duty_percent - _ANCHOR_DUTY) * 19.0 / 35.0


def current_to_duty(current: float) -> float:
    lo = duty_to_current(DUTY_MIN)
    hi = duty_to_current(DUTY_MAX)
    if not lo <= current <= hi:
        raise RangeError(f"{current} A is outside the pilot range [{lo:.3f}, {hi:.3f}] A")
    return _ANCHOR_DUTY + (current - _ANCHOR_AMPS) * 35.0 / 19.0
