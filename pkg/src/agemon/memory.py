"""Byte-addressed RAM with injectable functional faults.

Fault semantics (single-fault scenarios, bit granularity):

- stuck-at: reads of the stuck bit return the stuck value regardless of writes
- transition: the specified 0->1 ("rise") or 1->0 ("fall") write is blocked
- address decoder: accesses to ``address`` are redirected to the aliased cell
- coupling: a transition of the aggressor bit flips the victim bit (CFid-style)

Fault injection is purely functional; it never alters timing behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union


class ConfigurationError(ValueError):
    """Invalid fault or memory configuration."""


class FaultKind(Enum):
    STUCK_AT_0 = "stuck_at_0"
    STUCK_AT_1 = "stuck_at_1"
    TRANSITION = "transition"
    ADDRESS_DECODER = "address_decoder"
    COUPLING = "coupling"


RISE = "rise"  # blocked 0 -> 1 write
FALL = "fall"  # blocked 1 -> 0 write


@dataclass(frozen=True)
class MemoryFault:
    kind: FaultKind
    address: int
    # kind-specific: coupled (victim) address for COUPLING, aliased address
    # for ADDRESS_DECODER, transition direction (RISE/FALL) for TRANSITION
    parameter: Optional[Union[int, str]] = None
    bit: int = 0


class FaultableMemory:
    """A bytearray-backed RAM applying injected fault semantics on access."""

    def __init__(self, size: int):
        if size < 1:
            raise ConfigurationError("memory size must be >= 1 byte")
        self.size = size
        self._storage = bytearray(size)
        self.faults: list[MemoryFault] = []
        self._remap: dict[int, int] = {}
        self._stuck0_mask = {}  # addr -> bits forced to 0 on read
        self._stuck1_mask = {}  # addr -> bits forced to 1 on read
        self._transitions = {}  # addr -> [(bit, direction)]
        self._couplings = {}  # aggressor addr -> [(bit, victim addr)]

    def _check_address(self, address: int) -> None:
        if not 0 <= address < self.size:
            raise ConfigurationError(
                f"address {address} out of bounds for {self.size}-byte memory"
            )

    def inject(self, fault: MemoryFault) -> None:
        self._check_address(fault.address)
        if not 0 <= fault.bit < 8:
            raise ConfigurationError(f"bit index {fault.bit} out of range")
        mask = 1 << fault.bit
        if fault.kind is FaultKind.STUCK_AT_0:
            self._stuck0_mask[fault.address] = (
                self._stuck0_mask.get(fault.address, 0) | mask
            )
        elif fault.kind is FaultKind.STUCK_AT_1:
            self._stuck1_mask[fault.address] = (
                self._stuck1_mask.get(fault.address, 0) | mask
            )
        elif fault.kind is FaultKind.TRANSITION:
            if fault.parameter not in (RISE, FALL):
                raise ConfigurationError(
                    f"transition fault needs direction {RISE!r} or {FALL!r}"
                )
            self._transitions.setdefault(fault.address, []).append(
                (fault.bit, fault.parameter)
            )
        elif fault.kind is FaultKind.ADDRESS_DECODER:
            if not isinstance(fault.parameter, int):
                raise ConfigurationError("address decoder fault needs an aliased address")
            self._check_address(fault.parameter)
            self._remap[fault.address] = fault.parameter
        elif fault.kind is FaultKind.COUPLING:
            if not isinstance(fault.parameter, int):
                raise ConfigurationError("coupling fault needs a victim address")
            self._check_address(fault.parameter)
            if fault.parameter == fault.address:
                raise ConfigurationError("coupling addresses must be distinct")
            self._couplings.setdefault(fault.address, []).append(
                (fault.bit, fault.parameter)
            )
        else:  # pragma: no cover
            raise ConfigurationError(f"unknown fault kind {fault.kind}")
        self.faults.append(fault)

    @property
    def has_faults(self) -> bool:
        return bool(self.faults)

    def read(self, address: int) -> int:
        self._check_address(address)
        addr = self._remap.get(address, address)
        value = self._storage[addr]
        value |= self._stuck1_mask.get(addr, 0)
        value &= ~self._stuck0_mask.get(addr, 0) & 0xFF
        return value

    def write(self, address: int, value: int) -> None:
        self._check_address(address)
        addr = self._remap.get(address, address)
        value &= 0xFF
        old = self._storage[addr]
        for bit, direction in self._transitions.get(addr, ()):
            mask = 1 << bit
            if direction == RISE and not old & mask and value & mask:
                value &= ~mask
            elif direction == FALL and old & mask and not value & mask:
                value |= mask
        self._storage[addr] = value
        for bit, victim in self._couplings.get(addr, ()):
            if (old ^ value) & (1 << bit):
                self._storage[victim] ^= 1 << bit

    def clear(self) -> None:
        """Reset contents to the all-zero power-on pattern; faults persist."""
        self._storage = bytearray(self.size)

    def load(self, data: bytes, offset: int = 0) -> None:
        if offset < 0 or offset + len(data) > self.size:
            raise ConfigurationError("load exceeds memory bounds")
        for i, byte in enumerate(data):
            self.write(offset + i, byte)

    def read_block(self, offset: int, length: int) -> bytes:
        return bytes(self.read(offset + i) for i in range(length))
