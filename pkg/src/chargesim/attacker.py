"""Model of the implanted spoofing device and its 433 MHz command link.

The device sits between the gun's CC pin and the EV. Disarmed, the EV sees the
genuine gun; armed, it sees whatever the digital potentiometer (or the shorting
switch, for 0 ohm) presents. Commands are 4-byte frames::

    opcode | arg_hi | arg_lo | opcode ^ arg_hi ^ arg_lo
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .circuit import OPEN, Network, Resistor, Switch, impedance_at
from .errors import ChecksumError, InputError, MalformedBurstError, UnreachableError

OPEN_ARG = 0xFFFF


class Opcode(enum.IntEnum):
    DISARM = 0x00
    SET_CC_RESISTANCE = 0x01
    SET_CP_DUTY = 0x02
    TRIGGER_CAN_PAYLOAD = 0x03
    REPLAY_LID_SIGNAL = 0x04


@dataclass(frozen=True)
class AttackCommand:
    opcode: Opcode
    arg: int = 0

    def __post_init__(self):
        object.__setattr__(self, "opcode", Opcode(self.opcode))
        if not 0 <= self.arg <= 0xFFFF:
            raise InputError(f"command argument must fit 16 bits, got {self.arg}")

    @property
    def checksum(self) -> int:
        return self.opcode ^ (self.arg >> 8) ^ (self.arg & 0xFF)

    def encode(self) -> bytes:
        return bytes((self.opcode, self.arg >> 8, self.arg & 0xFF, self.checksum))

    @classmethod
    def decode(cls, frame: bytes) -> "AttackCommand":
        frame = bytes(frame)
        if len(frame) != 4:
            raise ChecksumError(f"command frame must be 4 bytes, got {len(frame)}")
        op, hi, lo, check = frame
        if op ^ hi ^ lo != check:
            raise ChecksumError(f"bad checksum in frame {frame.hex()}")
        try:
            opcode = Opcode(op)
        except ValueError:
            raise ChecksumError(f"unknown opcode 0x{op:02x}") from None
        return cls(opcode, (hi << 8) | lo)

    # convenience constructors
    @classmethod
    def disarm(cls):
        return cls(Opcode.DISARM, 0)

    @classmethod
    def set_cc(cls, ohms):
        return cls(Opcode.SET_CC_RESISTANCE, OPEN_ARG if ohms is OPEN else int(round(ohms)))

    @classmethod
    def set_cp_duty(cls, duty_percent: float):
        return cls(Opcode.SET_CP_DUTY, int(round(duty_percent * 100)))

    @classmethod
    def trigger_can(cls, index: int = 0):
        return cls(Opcode.TRIGGER_CAN_PAYLOAD, index)

    @classmethod
    def replay_lid(cls):
        return cls(Opcode.REPLAY_LID_SIGNAL, 0)


def encode_command(cmd: AttackCommand) -> bytes:
    return cmd.encode()


def decode_command(frame: bytes) -> AttackCommand:
    return AttackCommand.decode(frame)


@dataclass(frozen=True)
class ProgrammableResistor:
    """256-position digital rheostat: R = wiper + tap * full_scale / taps."""

    full_scale: float = 5000.0
    taps: int = 256
    wiper_ohm: float = 60.0
    current_tap: int = 0
    armed: bool = False

    @property
    def step(self) -> float:
        return self.full_scale / self.taps

    @property
    def ceiling(self) -> float:
        return self.wiper_ohm + self.full_scale

    def resistance(self, tap: Optional[int] = None) -> float:
        tap = self.current_tap if tap is None else tap
        if not 0 <= tap < self.taps:
            raise InputError(f"tap {tap} outside 0..{self.taps - 1}")
        return self.wiper_ohm + tap * self.step

    def nearest_tap(self, target: float) -> int:
        if target < 0:
            raise InputError(f"negative resistance target {target}")
        if target > self.ceiling:
            raise UnreachableError(f"{target} ohm exceeds device ceiling {self.ceiling} ohm")
        tap = round((target - self.wiper_ohm) / self.step)
        return min(self.taps - 1, max(0, tap))

    def tuned(self, target: float) -> "ProgrammableResistor":
        return replace(self, current_tap=self.nearest_tap(target), armed=True)


def set_cc(dev: ProgrammableResistor, target: float) -> float:
    """Closest achievable resistance to ``target``; targets below the wiper saturate."""
    return dev.resistance(dev.nearest_tap(target))


def cc_override_for(dev: ProgrammableResistor, arg: int):
    """Resolve a SetCcResistance argument to ``(device, override_value)``.

    0xFFFF lifts the line (open); 0 closes the dedicated shorting switch since the
    potentiometer cannot go below its wiper resistance.
    """
    if arg == OPEN_ARG:
        return replace(dev, armed=True), OPEN
    if arg == 0:
        return replace(dev, armed=True), 0.0
    dev = dev.tuned(arg)
    return dev, dev.resistance()


def spoof_network(override) -> Network:
    if override is OPEN:
        return Switch(closed=False)
    if override == 0:
        return Switch(closed=True)
    return Resistor(override)


@dataclass(frozen=True)
class WiringHarness:
    genuine_cc: Network
    attacker_cc_override: object = None
    cp_duty_override: Optional[float] = None
    can_tap: bool = False

    def check(self, profile) -> None:
        if self.can_tap and not profile.exposes_can:
            raise InputError(f"{profile.id} exposes no CAN lines to tap")

    @property
    def armed(self) -> bool:
        return self.attacker_cc_override is not None


def effective_cc(w: WiringHarness):
    """Resistance (or OPEN) the EV's CC detection point observes."""
    if w.attacker_cc_override is not None:
        return w.attacker_cc_override
    z = impedance_at(w.genuine_cc, 0.0)
    return OPEN if z is OPEN else z.resistance


# --- wireless "open lid" burst -------------------------------------------------

SYNC_BITS = 26
PAYLOAD_BITS = 16
PAYLOAD_COUNT = 3
GUARD = "010"
PACKETS_PER_BURST = 10
PACKET_BITS = SYNC_BITS + PAYLOAD_COUNT * PAYLOAD_BITS + (PAYLOAD_COUNT - 1) * len(GUARD) + 1


@dataclass(frozen=True)
class LidPacketBurst:
    sync: int
    payloads: tuple

    def __post_init__(self):
        object.__setattr__(self, "payloads", tuple(self.payloads))
        if not 0 <= self.sync < 1 << SYNC_BITS:
            raise InputError("sync word must fit 26 bits")
        if len(self.payloads) != PAYLOAD_COUNT:
            raise InputError("a lid packet carries exactly three payloads")
        if any(not 0 <= p < 1 << PAYLOAD_BITS for p in self.payloads):
            raise InputError("payloads must fit 16 bits")

    @property
    def packets(self) -> int:
        return PACKETS_PER_BURST

    def encode(self) -> str:
        return encode_lid_burst(self.sync, self.payloads)


def _packet(sync: int, payloads, terminal: str) -> str:
    body = GUARD.join(format(p, f"0{PAYLOAD_BITS}b") for p in payloads)
    return format(sync, f"0{SYNC_BITS}b") + body + terminal


def encode_lid_burst(sync: int, payloads) -> str:
    """Bit string ('0'/'1') for one trigger: ten packets, last terminal bit 0."""
    burst = LidPacketBurst(sync, payloads)
    head = _packet(burst.sync, burst.payloads, "1")
    return head * (PACKETS_PER_BURST - 1) + head[:-1] + "0"


def decode_lid_burst(bits: str) -> LidPacketBurst:
    if set(bits) - {"0", "1"}:
        raise MalformedBurstError("burst must be a string of '0'/'1'")
    if len(bits) % PACKET_BITS:
        raise MalformedBurstError(f"burst length {len(bits)} is not a whole number of packets")
    count = len(bits) // PACKET_BITS
    if count != PACKETS_PER_BURST:
        raise MalformedBurstError(f"expected {PACKETS_PER_BURST} packets, got {count}")
    packets = [bits[i * PACKET_BITS:(i + 1) * PACKET_BITS] for i in range(count)]
    if packets[-1][-1] != "0":
        raise MalformedBurstError("final packet must end with terminal bit 0")
    if any(p[-1] != "1" for p in packets[:-1]):
        raise MalformedBurstError("only the final packet may carry terminal bit 0")
    if any(p[:-1] != packets[0][:-1] for p in packets):
        raise MalformedBurstError("packets in a burst must be identical")
    first = packets[0]
    sync = int(first[:SYNC_BITS], 2)
    pos = SYNC_BITS
    payloads = []
    for i in range(PAYLOAD_COUNT):
        payloads.append(int(first[pos:pos + PAYLOAD_BITS], 2))
        pos += PAYLOAD_BITS
        if i < PAYLOAD_COUNT - 1:
            if first[pos:pos + len(GUARD)] != GUARD:
                raise MalformedBurstError(f"guard {i} mismatch at bit {pos}")
            pos += len(GUARD)
    return LidPacketBurst(sync, tuple(payloads))


def burst_to_hex(bits: str) -> str:
    """Pack MSB-first, zero-padded to a whole byte."""
    pad = (-len(bits)) % 8
    padded = bits + "0" * pad
    return bytes(int(padded[i:i + 8], 2) for i in range(0, len(padded), 8)).hex()


def burst_from_hex(text: str, nbits: int = PACKET_BITS * PACKETS_PER_BURST) -> str:
    bits = "".join(format(b, "08b") for b in bytes.fromhex(text))
    if len(bits) < nbits or set(bits[nbits:]) - {"0"}:
        raise MalformedBurstError("hex burst has the wrong length or nonzero padding")
    return bits[:nbits]
