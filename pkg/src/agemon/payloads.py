"""Self-test payload probes.

Five functional probes (matrix determinant, flash read, RAM read/write,
RAM March C-, CPU test), each with a verifiable result, a subsystem
activation profile, an execution-time model, and timing-error semantics
around the device's analytic frequency limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .device import DeviceConfig, FlashBuffering, SimulatedDevice, Subsystem
from .md5 import md5_digest
from .memory import ConfigurationError, FaultableMemory

REFERENCE_FREQUENCY_HZ = 72e6

MATRIX_DIM = 8
MATRIX_ENTRY_RANGE = (-8, 8)


class PayloadName(Enum):
    MATRIX = "matrix"
    FLASH_READ = "flash_read"
    RAM_RW = "ram_rw"
    RAM_MARCH_C = "ram_march_c"
    CPU_TEST = "cpu_test"


class Status(Enum):
    PASS = "pass"
    COMPUTE_ERROR = "compute_error"
    HANG = "hang"


@dataclass(frozen=True)
class PayloadOutcome:
    status: Status
    detail: Optional[str] = None


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    detail: Optional[str] = None


def smoothstep(x: float) -> float:
    x = min(max(x, 0.0), 1.0)
    return 3.0 * x * x - 2.0 * x * x * x


@dataclass(frozen=True)
class ErrorTransitionModel:
    """Failure probability between the error-free limit and full failure.

    ``onset_fraction`` is the ratio of the all-fail frequency to the
    error-free limit; ``shape`` maps normalized over-frequency position in
    [0, 1] to failure probability, non-decreasing with shape(0)=0 and
    shape(1)=1.
    """

    onset_fraction: float = 1.06
    shape: Callable[[float], float] = smoothstep

    def __post_init__(self) -> None:
        if self.onset_fraction < 1.0:
            raise ValueError("onset_fraction must be >= 1.0")
        if abs(self.shape(0.0)) > 1e-12 or abs(self.shape(1.0) - 1.0) > 1e-12:
            raise ValueError("shape must satisfy shape(0)=0 and shape(1)=1")


DEFAULT_TRANSITION = ErrorTransitionModel()


@dataclass(frozen=True)
class Payload:
    name: PayloadName
    activated_subsystems: FrozenSet[Subsystem]
    executes_from: Subsystem
    base_execution_time: float  # seconds at the reference frequency, buffered
    transition_configs: FrozenSet[FlashBuffering]

    def __post_init__(self) -> None:
        if not self.activated_subsystems:
            raise ValueError("activated_subsystems must be non-empty")

    def has_error_transition(self, config: DeviceConfig) -> bool:
        return config.flash_buffering in self.transition_configs


def _payload(name, subsystems, executes_from, base_time, transitions) -> Payload:
    return Payload(
        name=name,
        activated_subsystems=frozenset(subsystems),
        executes_from=executes_from,
        base_execution_time=base_time,
        transition_configs=frozenset(transitions),
    )


# Activation profiles and base execution times are model calibration; the
# relative time ordering (CPU fastest, RAM R+W slowest, matrix 30% faster
# than flash) is what downstream comparisons rely on.
DEFAULT_PAYLOADS: Dict[PayloadName, Payload] = {
    PayloadName.MATRIX: _payload(
        PayloadName.MATRIX,
        {Subsystem.FLASH, Subsystem.SRAM, Subsystem.ALU, Subsystem.PIPELINE},
        Subsystem.FLASH,
        7.0e-4,
        {FlashBuffering.BUFFERED, FlashBuffering.UNBUFFERED},
    ),
    PayloadName.FLASH_READ: _payload(
        PayloadName.FLASH_READ,
        {Subsystem.FLASH, Subsystem.ALU},
        Subsystem.FLASH,
        1.0e-3,
        {FlashBuffering.UNBUFFERED},
    ),
    PayloadName.RAM_RW: _payload(
        PayloadName.RAM_RW,
        {Subsystem.SRAM, Subsystem.FLASH, Subsystem.ALU},
        Subsystem.FLASH,
        1.6e-3,
        {FlashBuffering.UNBUFFERED},
    ),
    PayloadName.RAM_MARCH_C: _payload(
        PayloadName.RAM_MARCH_C,
        {Subsystem.SRAM, Subsystem.ALU},
        Subsystem.SRAM,
        2.5e-4,
        (),
    ),
    PayloadName.CPU_TEST: _payload(
        PayloadName.CPU_TEST,
        {Subsystem.ALU},
        Subsystem.SRAM,
        8.0e-6,
        (),
    ),
}

_CONFIG_TIME_SCALING = {
    FlashBuffering.BUFFERED: 1.0,
    FlashBuffering.UNBUFFERED: 1.25,
}


def execution_time(payload: Payload, clock: float, config: DeviceConfig) -> float:
    """Wall time of one payload run at ``clock`` under ``config``."""
    if clock <= 0:
        raise ConfigurationError("clock must be > 0 Hz")
    scale = _CONFIG_TIME_SCALING[config.flash_buffering]
    return payload.base_execution_time * (REFERENCE_FREQUENCY_HZ / clock) * scale


# -- flash image -----------------------------------------------------------


@dataclass(frozen=True)
class FlashImage:
    """Deterministic flash content: known pattern region, the two matrix
    operands, and precomputed references the payloads verify against."""

    raw: bytes
    pattern_offset: int
    pattern_length: int
    matrix_a: Tuple[Tuple[int, ...], ...]
    matrix_b: Tuple[Tuple[int, ...], ...]
    reference_determinant: int
    pattern_digest: bytes
    seed: int

    def manifest(self) -> dict:
        """Auditable summary written alongside campaign reports."""
        return {
            "seed": self.seed,
            "pattern_offset": self.pattern_offset,
            "pattern_length": self.pattern_length,
            "pattern_digest_md5": self.pattern_digest.hex(),
            "matrix_a": [list(row) for row in self.matrix_a],
            "matrix_b": [list(row) for row in self.matrix_b],
            "reference_determinant": str(self.reference_determinant),
            "flash_size": len(self.raw),
        }


def bareiss_determinant(matrix: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant by fraction-free Gaussian elimination."""
    n = len(matrix)
    m = [list(map(int, row)) for row in matrix]
    if any(len(row) != n for row in m):
        raise ValueError("matrix must be square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            pivot = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if pivot is None:
                return 0
            m[k], m[pivot] = m[pivot], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def multiply_matrices(
    a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]
) -> List[List[int]]:
    n = len(a)
    return [
        [sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)
    ]


def build_flash_image(
    seed: int, flash_bytes: int = 128 * 1024, pattern_length: int = 1024
) -> FlashImage:
    """Generate the known flash content from a campaign seed."""
    matrix_bytes = 2 * MATRIX_DIM * MATRIX_DIM
    if flash_bytes < pattern_length + matrix_bytes:
        raise ConfigurationError("flash too small for pattern region and matrices")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xF1A5])))
    raw = bytearray(rng.integers(0, 256, size=flash_bytes, dtype=np.uint8).tobytes())
    lo, hi = MATRIX_ENTRY_RANGE
    mat = rng.integers(lo, hi + 1, size=(2, MATRIX_DIM, MATRIX_DIM))
    matrix_a = tuple(tuple(int(v) for v in row) for row in mat[0])
    matrix_b = tuple(tuple(int(v) for v in row) for row in mat[1])
    encoded = bytes(
        (v + 256) % 256 for matrix in (matrix_a, matrix_b) for row in matrix for v in row
    )
    raw[pattern_length : pattern_length + len(encoded)] = encoded
    reference = bareiss_determinant(matrix_a) * bareiss_determinant(matrix_b)
    return FlashImage(
        raw=bytes(raw),
        pattern_offset=0,
        pattern_length=pattern_length,
        matrix_a=matrix_a,
        matrix_b=matrix_b,
        reference_determinant=reference,
        pattern_digest=md5_digest(bytes(raw[:pattern_length])),
        seed=seed,
    )


# -- functional bodies -----------------------------------------------------

_MARCH_ZERO = 0x00
_MARCH_ONE = 0xFF


def march_c(memory: FaultableMemory, start: int = 0, length: Optional[int] = None) -> CheckResult:
    """March C-: {up w0; up r0,w1; up r1,w0; down r0,w1; down r1,w0; down r0}."""
    if length is None:
        length = memory.size - start
    if length < 1:
        raise ConfigurationError("march region must hold at least one word")
    up = range(start, start + length)
    down = range(start + length - 1, start - 1, -1)

    def check(element: int, order, expect: int, write: Optional[int]) -> Optional[CheckResult]:
        for addr in order:
            if expect >= 0:
                got = memory.read(addr)
                if got != expect:
                    return CheckResult(
                        False,
                        f"march element {element}: address {addr} read "
                        f"0x{got:02x}, expected 0x{expect:02x}",
                    )
            if write is not None:
                memory.write(addr, write)
        return None

    elements = [
        (0, up, -1, _MARCH_ZERO),
        (1, up, _MARCH_ZERO, _MARCH_ONE),
        (2, up, _MARCH_ONE, _MARCH_ZERO),
        (3, down, _MARCH_ZERO, _MARCH_ONE),
        (4, down, _MARCH_ONE, _MARCH_ZERO),
        (5, down, _MARCH_ZERO, None),
    ]
    for element, order, expect, write in elements:
        failure = check(element, order, expect, write)
        if failure is not None:
            return failure
    return CheckResult(True)


def ram_pattern(length: int) -> bytes:
    """Deterministic RAM test pattern: byte i = (i * 151 + 17) mod 256."""
    return bytes((i * 151 + 17) % 256 for i in range(length))


_PATTERN_DIGESTS: Dict[int, bytes] = {}


def _pattern_digest(length: int) -> bytes:
    digest = _PATTERN_DIGESTS.get(length)
    if digest is None:
        digest = md5_digest(ram_pattern(length))
        _PATTERN_DIGESTS[length] = digest
    return digest


def ram_rw(memory: FaultableMemory, start: int = 0, length: Optional[int] = None) -> CheckResult:
    """Write the known pattern, read it back, and verify its MD5 digest."""
    if length is None:
        length = memory.size - start
    if length < 64:
        raise ConfigurationError("ram_rw region must be at least 64 bytes")
    pattern = ram_pattern(length)
    for i, byte in enumerate(pattern):
        memory.write(start + i, byte)
    digest = md5_digest(memory.read_block(start, length))
    if digest != _pattern_digest(length):
        return CheckResult(
            False,
            f"ram pattern digest mismatch: got {digest.hex()}, "
            f"expected {_pattern_digest(length).hex()}",
        )
    return CheckResult(True)


def flash_read(
    image: FlashImage, corrupt_bit: Optional[int] = None
) -> CheckResult:
    """Verify the known flash region against its stored MD5 reference.

    ``corrupt_bit`` flips one bit of the read stream, simulating a
    timing-corrupted read in the error-transition region.
    """
    if image.pattern_length < 1:
        raise ConfigurationError("flash pattern region is empty")
    data = bytearray(
        image.raw[image.pattern_offset : image.pattern_offset + image.pattern_length]
    )
    if corrupt_bit is not None:
        data[corrupt_bit // 8] ^= 1 << (corrupt_bit % 8)
    digest = md5_digest(bytes(data))
    if digest != image.pattern_digest:
        return CheckResult(
            False,
            f"flash digest mismatch: got {digest.hex()}, "
            f"expected {image.pattern_digest.hex()}",
        )
    return CheckResult(True)


def _encode_i16(values) -> bytes:
    out = bytearray()
    for v in values:
        out += int(v).to_bytes(2, "little", signed=True)
    return bytes(out)


def matrix_test(
    image: FlashImage, memory: FaultableMemory, start: int = 0
) -> CheckResult:
    """Load the operands from flash into RAM, multiply, and verify the exact
    determinant of the product against the stored reference det(A)*det(B)."""
    dim = MATRIX_DIM
    offset = image.pattern_length
    encoded = image.raw[offset : offset + 2 * dim * dim]

    # stage operands in RAM (signed-byte encoding)
    for i, byte in enumerate(encoded):
        memory.write(start + i, byte)
    staged = memory.read_block(start, 2 * dim * dim)
    decode = [b - 256 if b > 127 else b for b in staged]
    a = [decode[i * dim : (i + 1) * dim] for i in range(dim)]
    b = [decode[dim * dim + i * dim : dim * dim + (i + 1) * dim] for i in range(dim)]

    # product entries are held in RAM as little-endian int16
    product = multiply_matrices(a, b)
    flat = [v for row in product for v in row]
    product_offset = start + 2 * dim * dim
    encoded_product = _encode_i16(flat)
    for i, byte in enumerate(encoded_product):
        memory.write(product_offset + i, byte)
    stored = memory.read_block(product_offset, len(encoded_product))
    entries = [
        int.from_bytes(stored[2 * i : 2 * i + 2], "little", signed=True)
        for i in range(dim * dim)
    ]
    result = bareiss_determinant([entries[i * dim : (i + 1) * dim] for i in range(dim)])
    if result != image.reference_determinant:
        return CheckResult(
            False,
            f"determinant mismatch: got {result}, "
            f"expected {image.reference_determinant}",
        )
    return CheckResult(True)


_MASK32 = 0xFFFFFFFF


def _add32(x: int, y: int) -> Tuple[int, bool, bool]:
    """32-bit add returning (result, carry, signed overflow)."""
    total = x + y
    result = total & _MASK32
    carry = total > _MASK32
    overflow = ((x ^ result) & (y ^ result) & 0x80000000) != 0
    return result, carry, overflow


def cpu_test(_device: Optional[SimulatedDevice] = None) -> CheckResult:
    """Fixed ALU battery: add/sub with flags, logic, shifts, register moves."""
    checks: List[Tuple[str, object, object]] = []

    r, c, v = _add32(0x7FFFFFFF, 1)
    checks += [
        ("add overflow result", r, 0x80000000),
        ("add overflow flag", v, True),
        ("add overflow carry", c, False),
    ]
    r, c, v = _add32(0xFFFFFFFF, 1)
    checks += [
        ("add wrap result", r, 0),
        ("add wrap carry", c, True),
        ("add wrap overflow", v, False),
    ]
    r, c, v = _add32(0x12345678, 0x11111111)
    checks.append(("add plain", r, 0x23456789))
    # subtraction as two's-complement add
    r, c, v = _add32(5, (-7) & _MASK32)
    checks.append(("sub negative", r, (-2) & _MASK32))

    for x in (0x00000000, 0xDEADBEEF, 0xAAAAAAAA, 0x0F0F0F0F):
        checks.append((f"xor self 0x{x:08x}", x ^ x, 0))
        checks.append((f"and self 0x{x:08x}", x & x, x))
        checks.append((f"or zero 0x{x:08x}", x | 0, x))
        checks.append((f"not involution 0x{x:08x}", ~(~x & _MASK32) & _MASK32, x))

    checks += [
        ("shift left", (0x1 << 31) & _MASK32, 0x80000000),
        ("shift left drop", (0x80000000 << 1) & _MASK32, 0),
        ("shift right", 0x80000000 >> 31, 1),
        ("rotate identity", ((0xC0000003 << 4) | (0xC0000003 >> 28)) & _MASK32, 0x3C),
    ]

    registers = [0x11111111 * i for i in range(8)]
    moved = list(registers)
    moved.reverse()
    moved.reverse()
    checks.append(("register move round trip", moved, registers))

    for label, got, expected in checks:
        if got != expected:
            return CheckResult(False, f"cpu check {label!r}: got {got!r}, expected {expected!r}")
    return CheckResult(True)


# -- timed execution -------------------------------------------------------


def _run_body(payload: Payload, device: SimulatedDevice) -> CheckResult:
    image: Optional[FlashImage] = getattr(device, "flash_image", None)
    if image is None:
        raise ConfigurationError(
            f"device {device.device_id} has no flash image attached"
        )
    start, length = getattr(device, "test_region", (0, min(1024, device.sram.size)))
    name = payload.name
    if name is PayloadName.RAM_MARCH_C:
        return march_c(device.sram, start, length)
    if name is PayloadName.RAM_RW:
        return ram_rw(device.sram, start, length)
    if name is PayloadName.FLASH_READ:
        return flash_read(image)
    if name is PayloadName.MATRIX:
        return matrix_test(image, device.sram, start)
    if name is PayloadName.CPU_TEST:
        return cpu_test(device)
    raise ConfigurationError(f"unknown payload {name}")


def run_functional_body(payload: Payload, device: SimulatedDevice) -> CheckResult:
    """Run the payload body against the device memories, memoized until the
    device's fault set changes."""
    cached = device.body_cache.get(payload.name)
    if cached is None:
        cached = _run_body(payload, device)
        device.body_cache[payload.name] = cached
    return cached


def execute(
    payload: Payload,
    device: SimulatedDevice,
    config: DeviceConfig,
    clock: float,
    rng: np.random.Generator,
    transition: ErrorTransitionModel = DEFAULT_TRANSITION,
) -> PayloadOutcome:
    """One payload run at the test clock.

    At or below the device's frequency limit the functional body runs and
    only injected faults can fail it. Above the limit, payloads with an
    error transition in this configuration fail stochastically up to the
    all-fail frequency; payloads without one hang immediately.
    """
    if clock <= 0:
        raise ConfigurationError("clock must be > 0 Hz")
    mef = device.mef_oracle(payload.activated_subsystems, config)
    device.clock = clock
    try:
        if clock <= mef:
            result = run_functional_body(payload, device)
            if result.ok:
                return PayloadOutcome(Status.PASS)
            return PayloadOutcome(Status.COMPUTE_ERROR, result.detail)
        if payload.has_error_transition(config):
            mof = mef * transition.onset_fraction
            if clock > mof:
                return PayloadOutcome(Status.HANG, "past all-fail frequency")
            position = (clock - mef) / (mof - mef) if mof > mef else 1.0
            if rng.random() < transition.shape(position):
                return PayloadOutcome(
                    Status.COMPUTE_ERROR,
                    "timing-corrupted verification artifact",
                )
            return PayloadOutcome(Status.PASS)
        return PayloadOutcome(Status.HANG, "timing violation; no transition region")
    finally:
        # Standby configuration is restored after the run; result
        # verification happens at the standby clock.
        device.clock = device.guard_band_frequency
