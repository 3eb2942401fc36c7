"""Fixture reproductions: impedance table, attack matrix, countermeasure rates."""
from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import asdict, dataclass, field

from .. import attacker as atk
from ..countermeasure import ReferenceSignature, choose_probe_freqs, dual_check, reference_gun
from ..circuit import Resistor
from ..standards import (
    MEASURED_SPOOFS, CcClass, StandardId, all_profiles, classify_cc, deviation_percent, legacy_gun,
)
from . import scenarios

DEVIATION_TOLERANCE_PP = 0.1


@dataclass(frozen=True)
class Table1Cell:
    standard: str
    column: str
    expected_ohm: float
    measured_ohm: float
    printed_deviation: float
    computed_deviation: float
    achieved_ohm: float
    achieved_deviation: float
    achieved_class: str
    passed: bool


@dataclass
class Table1Report:
    cells: list
    runtime_s: float = 0.0

    @property
    def passed(self) -> int:
        return sum(c.passed for c in self.cells)

    @property
    def ok(self) -> bool:
        return self.passed == len(self.cells) == 14

    def to_dict(self) -> dict:
        return {"cells": [asdict(c) for c in self.cells], "passed": self.passed,
                "total": len(self.cells), "runtime_s": self.runtime_s}

    def render(self) -> str:
        lines = [f"{'standard':<13}{'column':<11}{'expected':>9}{'measured':>10}{'printed':>9}"
                 f"{'computed':>10}{'device':>10}  result"]
        for c in self.cells:
            lines.append(f"{c.standard:<13}{c.column:<11}{c.expected_ohm:>9g}{c.measured_ohm:>10g}"
                         f"{c.printed_deviation:>+9.1f}{c.computed_deviation:>+10.1f}"
                         f"{c.achieved_ohm:>10.1f}  {'pass' if c.passed else 'FAIL'}")
        lines.append(f"{self.passed}/{len(self.cells)} cells pass ({self.runtime_s * 1000:.1f} ms)")
        return "\n".join(lines)


def verify_table1(device: atk.ProgrammableResistor = atk.ProgrammableResistor()) -> Table1Report:
    """Check every spoofed-impedance cell.

    A cell passes when the deviation recomputed from the measured resistance
    matches the printed one to 0.1 pp and the device, tuned to the table value,
    is classified by the EV as the intended button state.
    """
    start = time.perf_counter()
    cells = []
    for p in all_profiles():
        u_real, u_dev, p_real, p_dev = MEASURED_SPOOFS[p.id]
        for column, expected, real, printed, want in (
            ("unpressed", p.unpressed_ohm, u_real, u_dev, CcClass.CONNECTED_UNPRESSED),
            ("pressed", p.pressed_ohm, p_real, p_dev, CcClass.CONNECTED_PRESSED),
        ):
            computed = deviation_percent(expected, real)
            _, achieved = atk.cc_override_for(device, int(round(expected)))
            achieved_dev = deviation_percent(expected, achieved) if expected else (0.0 if achieved == 0 else math.inf)
            got = classify_cc(achieved, p)
            ok = abs(computed - printed) <= DEVIATION_TOLERANCE_PP + 1e-9 and got is want
            cells.append(Table1Cell(p.id.value, column, expected, real, printed, computed,
                                    achieved, achieved_dev, got.value, ok))
    return Table1Report(cells, time.perf_counter() - start)


FAMILIES = ("dos", "deadlock", "pwm", "can")
FAMILY_SCENARIO = {"dos": "dos-cc", "deadlock": "deadlock", "pwm": "pwm-inject", "can": "can-overheat"}
FAMILY_TITLE = {"dos": "DoS", "deadlock": "Deadlock", "pwm": "CP PWM injection", "can": "CAN injection"}

# Effectiveness grid collapsed from per-vehicle rows to per-standard capability.
REFERENCE_GRID = {
    "dos": {s: True for s in StandardId},
    "pwm": {s: True for s in StandardId},
    "deadlock": {s: s is not StandardId.CCS_II for s in StandardId},
    "can": {s: s in (StandardId.NACS, StandardId.GBT_20234_3) for s in StandardId},
}


@dataclass
class MatrixReport:
    grid: dict
    details: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    @property
    def matches_reference(self) -> bool:
        return self.grid == REFERENCE_GRID

    def mismatches(self) -> list:
        return [(fam, s.value) for fam in FAMILIES for s in StandardId
                if self.grid[fam][s] != REFERENCE_GRID[fam][s]]

    def to_dict(self) -> dict:
        return {"grid": {f: {s.value: v for s, v in row.items()} for f, row in self.grid.items()},
                "matches_reference": self.matches_reference, "runtime_s": self.runtime_s}

    def render(self) -> str:
        mark = {True: "✓", False: "✗"}
        header = f"{'standard':<13}" + "".join(f"{FAMILY_TITLE[f]:>18}" for f in FAMILIES)
        lines = [header]
        for s in StandardId:
            lines.append(f"{s.value:<13}" + "".join(f"{mark[self.grid[f][s]]:>18}" for f in FAMILIES))
        verdict = "matches" if self.matches_reference else f"differs at {self.mismatches()}"
        lines.append(f"grid {verdict} the published effectiveness table ({self.runtime_s:.2f} s)")
        return "\n".join(lines)


def matrix(seed: int = 0) -> MatrixReport:
    start = time.perf_counter()
    grid = {f: {} for f in FAMILIES}
    details = {}
    for fam in FAMILIES:
        for s in StandardId:
            sc = scenarios.build(FAMILY_SCENARIO[fam], s)
            results = scenarios.check(sc.run(seed), sc.expected)
            grid[fam][s] = all(r.passed for r in results)
            details[(fam, s)] = results
    return MatrixReport(grid, details, time.perf_counter() - start)


@dataclass
class CountermeasureReport:
    trials: int
    seed: int
    spoofers: int = 0
    detected: int = 0
    genuine: int = 0
    false_positives: int = 0
    legacy: int = 0
    legacy_flagged: int = 0
    reasons: Counter = field(default_factory=Counter)
    per_standard_spoofers: Counter = field(default_factory=Counter)

    @property
    def detection_rate(self) -> float:
        return self.detected / self.spoofers if self.spoofers else 0.0

    @property
    def false_positive_rate(self) -> float:
        return self.false_positives / self.genuine if self.genuine else 0.0

    @property
    def ok(self) -> bool:
        return self.detected == self.spoofers and self.false_positives == 0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials, "seed": self.seed, "spoofers": self.spoofers,
            "detected": self.detected, "detection_rate": self.detection_rate,
            "genuine": self.genuine, "false_positives": self.false_positives,
            "false_positive_rate": self.false_positive_rate, "legacy": self.legacy,
            "legacy_flagged": self.legacy_flagged,
            "reasons": {k: v for k, v in sorted(self.reasons.items())},
        }

    def render(self) -> str:
        reasons = ", ".join(f"{k}={v}" for k, v in sorted(self.reasons.items()))
        return "\n".join([
            f"trials: {self.trials} (seed {self.seed})",
            f"resistive spoofers detected: {self.detected}/{self.spoofers} "
            f"({self.detection_rate * 100:.2f} %)",
            f"reference guns rejected: {self.false_positives}/{self.genuine} "
            f"({self.false_positive_rate * 100:.2f} %)",
            f"legacy resistor-only guns flagged: {self.legacy_flagged}/{self.legacy}",
            f"spoof reasons: {reasons}",
        ])


SPOOF_MIN_OHM = 1.0
SPOOF_MAX_OHM = 20_000.0


def eval_countermeasure(trials: int, seed: int = 0) -> CountermeasureReport:
    """Per trial: fresh probe set, then every standard and button state sees
    its reference gun, one random resistor, the DC-matching resistor and the
    legacy gun."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    rep = CountermeasureReport(trials, seed)
    lo, hi = math.log(SPOOF_MIN_OHM), math.log(SPOOF_MAX_OHM)
    for _ in range(trials):
        probes = choose_probe_freqs(rng.getrandbits(64), 3)
        for p in all_profiles():
            for pressed in (False, True):
                sig = ReferenceSignature.of(p.id, pressed, probes)
                rep.genuine += 1
                if dual_check(reference_gun(p.id, pressed), sig).kind.value != "legit":
                    rep.false_positives += 1
                for r in (math.exp(rng.uniform(lo, hi)), sig.static_expected):
                    verdict = dual_check(Resistor(r), sig)
                    rep.spoofers += 1
                    rep.per_standard_spoofers[p.id.value] += 1
                    if verdict.spoofed:
                        rep.detected += 1
                        rep.reasons[verdict.reason.value] += 1
                rep.legacy += 1
                rep.legacy_flagged += dual_check(legacy_gun(p, pressed), sig).spoofed
    return rep
