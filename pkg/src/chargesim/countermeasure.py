"""Dual static/dynamic CC authentication.

The upgraded gun puts a parallel RC "memory" block in series with the legacy
CC resistor. At DC the capacitor is open and the block adds ``MEMORY_R_OHM``; at
the probe frequencies the capacitor shorts most of it out. A fixed resistor has
the same magnitude at every frequency, so it cannot sit inside the tolerance
window at DC and at the excited frequencies simultaneously.
"""
from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .circuit import OPEN, Capacitor, Network, Parallel, Resistor, Series, impedance_at
from .errors import InputError
from .standards import CC_TOLERANCE_PERCENT, StandardId, legacy_gun, profile_of

MEMORY_R_OHM = 1000.0
MEMORY_C_FARAD = 10e-6
PROBE_MIN_HZ = 500.0
PROBE_MAX_HZ = 50_000.0
PROBE_MIN_RATIO = 1.2
FLAT_PERCENT = 1.0


class VerdictKind(enum.Enum):
    LEGIT = "legit"
    SPOOFED = "spoofed"
    INCONCLUSIVE = "inconclusive"


class SpoofReason(enum.Enum):
    FLAT_RESPONSE = "flat-response"
    STATIC_MISMATCH = "static-mismatch"
    DYNAMIC_MISMATCH = "dynamic-mismatch"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reason: Optional[SpoofReason] = None
    readings: tuple = field(default=(), compare=False)

    @property
    def spoofed(self) -> bool:
        return self.kind is VerdictKind.SPOOFED

    def __str__(self) -> str:
        if self.reason is None:
            return self.kind.value
        return f"{self.kind.value}({self.reason.value})"


LEGIT = Verdict(VerdictKind.LEGIT)
INCONCLUSIVE = Verdict(VerdictKind.INCONCLUSIVE)


def reference_gun(standard, pressed: bool) -> Network:
    profile = profile_of(standard)
    memory = Parallel(Resistor(MEMORY_R_OHM), Capacitor(MEMORY_C_FARAD))
    return Series(legacy_gun(profile, pressed), memory)


def _mag(net: Network, f: float):
    z = impedance_at(net, f)
    return OPEN if z is OPEN else z.magnitude


def _deviates(reading, expected: float, tolerance_percent: float) -> bool:
    if reading is OPEN:
        return True
    return abs(reading - expected) / max(expected, 1.0) > tolerance_percent / 100.0


def _spread_percent(values: Sequence[float]) -> float:
    lo, hi = min(values), max(values)
    return (hi - lo) / max(lo, 1e-12) * 100.0


@dataclass(frozen=True)
class ReferenceSignature:
    standard: StandardId
    probe_freqs: tuple
    expected_magnitude: tuple
    match_tolerance_percent: float = CC_TOLERANCE_PERCENT
    pressed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "standard", StandardId(self.standard))
        object.__setattr__(self, "probe_freqs", tuple(float(f) for f in self.probe_freqs))
        object.__setattr__(self, "expected_magnitude", tuple(float(m) for m in self.expected_magnitude))
        if len(self.probe_freqs) != len(self.expected_magnitude):
            raise InputError("one expected magnitude per probe frequency")
        if self.probe_freqs.count(0.0) != 1:
            raise InputError("probe set must contain 0 Hz exactly once")
        if len(self.probe_freqs) < 3:
            raise InputError("need the static probe plus at least two dynamic probes")
        # No single resistance may fit inside every tolerance window.
        tol = self.match_tolerance_percent / 100.0
        if max(self.expected_magnitude) * (1 - tol) <= min(self.expected_magnitude) * (1 + tol):
            raise InputError("signature is not frequency-sensitive enough to reject resistors")

    @classmethod
    def of(cls, standard, pressed: bool, probe_freqs: Sequence[float],
           tolerance_percent: float = CC_TOLERANCE_PERCENT) -> "ReferenceSignature":
        gun = reference_gun(standard, pressed)
        return cls(StandardId(standard), tuple(probe_freqs),
                   tuple(_mag(gun, f) for f in probe_freqs), tolerance_percent, pressed)

    @property
    def static_expected(self) -> float:
        return self.expected_magnitude[self.probe_freqs.index(0.0)]

    @property
    def dynamic(self) -> list:
        return [(f, m) for f, m in zip(self.probe_freqs, self.expected_magnitude) if f != 0.0]

    def to_dict(self) -> dict:
        return {
            "standard": self.standard.value,
            "pressed": self.pressed,
            "probe_freqs": list(self.probe_freqs),
            "expected_magnitude": list(self.expected_magnitude),
            "match_tolerance_percent": self.match_tolerance_percent,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceSignature":
        return cls(StandardId(d["standard"]), tuple(d["probe_freqs"]), tuple(d["expected_magnitude"]),
                   d.get("match_tolerance_percent", CC_TOLERANCE_PERCENT), d.get("pressed", False))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ReferenceSignature":
        return cls.from_dict(json.loads(text))


def dual_check(observed: Network, sig: ReferenceSignature) -> Verdict:
    readings = tuple(_mag(observed, f) for f in sig.probe_freqs)
    if all(r is OPEN for r in readings):
        return Verdict(VerdictKind.INCONCLUSIVE, readings=readings)
    tol = sig.match_tolerance_percent
    by_freq = dict(zip(sig.probe_freqs, readings))

    if _deviates(by_freq[0.0], sig.static_expected, tol):
        return Verdict(VerdictKind.SPOOFED, SpoofReason.STATIC_MISMATCH, readings)

    # flat across DC and every excitation while the genuine circuit is not
    if all(r is not OPEN for r in readings) and _spread_percent(readings) <= FLAT_PERCENT:
        if _spread_percent(sig.expected_magnitude) >= 2 * tol:
            return Verdict(VerdictKind.SPOOFED, SpoofReason.FLAT_RESPONSE, readings)

    for f, expected in sig.dynamic:
        if _deviates(by_freq[f], expected, tol):
            return Verdict(VerdictKind.SPOOFED, SpoofReason.DYNAMIC_MISMATCH, readings)
    return Verdict(VerdictKind.LEGIT, readings=readings)


def choose_probe_freqs(seed: int, count: int = 3) -> list[float]:
    """0 Hz plus ``count - 1`` log-uniform draws from [500 Hz, 50 kHz].

    Draws are rounded to 1 Hz and kept pairwise at least 20 % apart.
    """
    max_count = 1 + int(math.log(PROBE_MAX_HZ / PROBE_MIN_HZ) / math.log(PROBE_MIN_RATIO) / 2)
    if count < 3:
        raise InputError("need at least three probes (DC plus two dynamic)")
    if count > max_count:
        raise InputError(f"at most {max_count} probes fit the band with 20 % separation")
    rng = random.Random(seed)
    lo, hi = math.log(PROBE_MIN_HZ), math.log(PROBE_MAX_HZ)
    picked: list[float] = []
    while len(picked) < count - 1:
        f = float(round(math.exp(rng.uniform(lo, hi))))
        if all(max(f, g) / min(f, g) >= PROBE_MIN_RATIO for g in picked):
            picked.append(f)
    return [0.0] + sorted(picked)
