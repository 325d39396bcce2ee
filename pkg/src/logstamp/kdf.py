"""Iterated-hash KDF between the Merkle root and the timestamping backend.

The chain is deliberately sequential: d1 = SHA-256(salt || root), then
d_i = SHA-256(d_{i-1}), returning d_repetitions. Each forged-root candidate
an attacker tries therefore costs ``repetitions`` hash evaluations instead
of one. The salt, the repetition count, and the number of timestamped files
are bound together with the chain output in a commitment digest, so none of
them can be varied after the fact.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass

from .errors import BadParamError, DelayBudgetError
from .merkle import DIGEST_SIZE, sha256

SALT_SIZE = 16

# Timed probe length used by calibrate_repetitions (linear extrapolation).
PROBE_ITERATIONS = 10_000


@dataclass(frozen=True)
class KdfParams:
    salt: bytes
    repetitions: int
    n_files: int

    def __post_init__(self) -> None:
        if not isinstance(self.salt, bytes) or len(self.salt) != SALT_SIZE:
            raise BadParamError(f"salt must be exactly {SALT_SIZE} bytes")
        if not 1 <= self.repetitions < 2**64:
            raise BadParamError("repetitions must fit an unsigned 64-bit count >= 1")
        if not 1 <= self.n_files < 2**64:
            raise BadParamError("n_files must fit an unsigned 64-bit count >= 1")


@dataclass(frozen=True)
class Commitment:
    digest: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.digest, bytes) or len(self.digest) != DIGEST_SIZE:
            raise BadParamError("commitment digest must be 32 bytes")


def kdf_chain(root: bytes, salt: bytes, repetitions: int) -> bytes:
    """Run the salted SHA-256 chain; cost is linear in ``repetitions``."""
    if repetitions < 1:
        raise BadParamError("repetitions must be >= 1")
    if len(salt) != SALT_SIZE:
        raise BadParamError(f"salt must be exactly {SALT_SIZE} bytes")
    if len(root) != DIGEST_SIZE:
        raise BadParamError("root must be a 32-byte digest")
    digest = sha256(salt + root)
    for _ in range(repetitions - 1):
        digest = sha256(digest)
    return digest


def _be64(value: int) -> bytes:
    return struct.pack(">Q", value)


def commit(kdf_output: bytes, params: KdfParams) -> Commitment:
    """Bind the chain output to salt, repetitions and file count.

    Integers enter the digest as fixed-width 8-byte big-endian, so the
    encoding is reproducible bit-for-bit across implementations.
    """
    material = kdf_output + params.salt + _be64(params.repetitions) + _be64(params.n_files)
    return Commitment(sha256(material))


def verify_commitment(commitment: Commitment, kdf_output: bytes, params: KdfParams) -> bool:
    return commit(kdf_output, params).digest == commitment.digest


def calibrate_repetitions(
    target_seconds: float,
    max_allowed_seconds: float,
    *,
    seconds_per_iteration: float | None = None,
) -> int:
    """Largest repetition count whose chain runtime fits in ``target_seconds``.

    Measures local throughput with a short burn-in plus a timed
    PROBE_ITERATIONS run and extrapolates linearly; always returns >= 1.
    ``seconds_per_iteration`` overrides the measurement (deterministic use
    in tests, or calibrating for a slower collector than this host).

    Must not run concurrently with other CPU-heavy work: the result is a
    wall-clock measurement.
    """
    if target_seconds <= 0:
        raise BadParamError("target_seconds must be > 0")
    if max_allowed_seconds <= 0:
        raise BadParamError("max_allowed_seconds must be > 0")
    if target_seconds > max_allowed_seconds:
        raise DelayBudgetError(
            f"target {target_seconds}s exceeds allowed delay {max_allowed_seconds}s"
        )
    if seconds_per_iteration is None:
        root = bytes(DIGEST_SIZE)
        salt = bytes(SALT_SIZE)
        kdf_chain(root, salt, PROBE_ITERATIONS // 10)  # burn-in
        start = time.perf_counter()
        kdf_chain(root, salt, PROBE_ITERATIONS)
        elapsed = time.perf_counter() - start
        seconds_per_iteration = elapsed / PROBE_ITERATIONS
    if seconds_per_iteration <= 0:
        raise BadParamError("seconds_per_iteration must be > 0")
    return max(1, int(target_seconds / seconds_per_iteration))
