"""Notarization backends binding one digest to a time attestation.

Two built-ins cover the issuance models the library needs:

  - LedgerBackend: a local append-only file of hash-chained records, usable
    as a test/demo authority. Tampering any historical record is detectable
    because every later chain value depends on it.
  - ExternalTsaStub: a client that frames a correctly shaped request
    (digest + nonce + policy id) for a configurable endpoint and accepts
    any syntactically valid response as evidence. It performs no
    cryptographic validation of the authority; real accredited-TSA
    integration is out of scope.

Clocks are injected so tests are deterministic; nothing in this module
reads wall-clock time except through the injected callable.
"""

from __future__ import annotations

import os
import secrets
import struct
import threading
import time
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

from .errors import BackendRejectedError, BackendUnavailableError, BadParamError
from .merkle import DIGEST_SIZE, sha256

Clock = Callable[[], int]


def _system_clock() -> int:
    return int(time.time())


@dataclass(frozen=True)
class TimestampToken:
    backend_id: str
    attested_digest: bytes
    attested_time: int
    evidence: bytes


def encode_token(token: TimestampToken) -> bytes:
    """Compact binary form: id || NUL || digest(32) || be64(time) || evidence."""
    ident = token.backend_id.encode("utf-8")
    if not ident or b"\x00" in ident:
        raise ValueError("backend_id must be non-empty and NUL-free")
    return ident + b"\x00" + token.attested_digest + struct.pack(">Q", token.attested_time) + token.evidence


def decode_token(raw: bytes) -> TimestampToken:
    ident, sep, rest = raw.partition(b"\x00")
    if not sep or not ident or len(rest) < DIGEST_SIZE + 8:
        raise ValueError("truncated token encoding")
    digest = rest[:DIGEST_SIZE]
    (attested_time,) = struct.unpack(">Q", rest[DIGEST_SIZE : DIGEST_SIZE + 8])
    return TimestampToken(ident.decode("utf-8"), digest, attested_time, rest[DIGEST_SIZE + 8 :])


class TimestampBackend(ABC):
    """Issue and check tokens under one trust anchor."""

    backend_id: str

    @abstractmethod
    def request_timestamp(self, digest: bytes) -> TimestampToken:
        """Bind ``digest`` to the current (injected) time.

        Raises BACKEND_UNAVAILABLE when the authority cannot be reached and
        BACKEND_REJECTED when it refuses the request.
        """

    @abstractmethod
    def verify_token(self, token: TimestampToken, digest: bytes) -> bool:
        """True iff the evidence is authentic here and attests ``digest``."""


# --- local hash-chained ledger ---------------------------------------------

LEDGER_RECORD_SIZE = 8 + 8 + DIGEST_SIZE + DIGEST_SIZE
_CHAIN_SEED = bytes(DIGEST_SIZE)


@dataclass(frozen=True)
class LedgerRecord:
    serial: int
    time: int
    digest: bytes
    chain: bytes


def _pack_fields(serial: int, when: int, digest: bytes) -> bytes:
    # Little-endian fixed-width fields, exactly as stored on disk; the chain
    # hash runs over these same bytes.
    return struct.pack("<QQ", serial, when) + digest


def read_ledger(path: str | os.PathLike[str]) -> list[LedgerRecord]:
    records = []
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) % LEDGER_RECORD_SIZE:
        raise BackendRejectedError(f"ledger size {len(blob)} is not a whole number of records")
    for off in range(0, len(blob), LEDGER_RECORD_SIZE):
        rec = blob[off : off + LEDGER_RECORD_SIZE]
        serial, when = struct.unpack("<QQ", rec[:16])
        records.append(LedgerRecord(serial, when, rec[16:48], rec[48:80]))
    return records


class LedgerBackend(TimestampBackend):
    """Append-only local authority.

    Each record stores {serial, time, digest, chain} where
    chain_i = SHA-256(chain_{i-1} || serial_i || time_i || digest_i) and
    chain_0 is 32 zero bytes. Appends are serialized within the process;
    verification is read-only and freely concurrent.
    """

    backend_id = "ledger"

    def __init__(self, path: str | os.PathLike[str], clock: Clock | None = None):
        self.path = os.fspath(path)
        self._clock = clock or _system_clock
        self._lock = threading.Lock()

    def request_timestamp(self, digest: bytes) -> TimestampToken:
        if len(digest) != DIGEST_SIZE:
            raise BadParamError("digest must be 32 bytes")
        when = int(self._clock())
        if when < 0:
            raise BackendRejectedError("clock returned a pre-epoch time")
        with self._lock:
            try:
                size = os.path.getsize(self.path)
            except FileNotFoundError:
                size = 0
            except OSError as exc:
                raise BackendUnavailableError(f"ledger not reachable: {exc}") from exc
            if size % LEDGER_RECORD_SIZE:
                raise BackendRejectedError("ledger file is corrupt (partial record)")
            serial = size // LEDGER_RECORD_SIZE + 1
            try:
                if size:
                    with open(self.path, "rb") as fh:
                        fh.seek(size - DIGEST_SIZE)
                        prev_chain = fh.read(DIGEST_SIZE)
                else:
                    prev_chain = _CHAIN_SEED
                fields = _pack_fields(serial, when, digest)
                chain = sha256(prev_chain + fields)
                with open(self.path, "ab") as fh:
                    fh.write(fields + chain)
            except OSError as exc:
                raise BackendUnavailableError(f"ledger not reachable: {exc}") from exc
        evidence = struct.pack("<Q", serial) + chain
        return TimestampToken(self.backend_id, digest, when, evidence)

    def verify_token(self, token: TimestampToken, digest: bytes) -> bool:
        if token.backend_id != self.backend_id:
            return False
        if token.attested_digest != digest or len(digest) != DIGEST_SIZE:
            return False
        if len(token.evidence) != 8 + DIGEST_SIZE:
            return False
        (serial,) = struct.unpack("<Q", token.evidence[:8])
        claimed_chain = token.evidence[8:]
        try:
            records = read_ledger(self.path)
        except (OSError, BackendRejectedError):
            return False
        if not 1 <= serial <= len(records):
            return False
        # Recompute the chain from the seed up to the claimed record; a
        # tampered prefix can no longer vouch for this token.
        running = _CHAIN_SEED
        for rec in records[:serial]:
            running = sha256(running + _pack_fields(rec.serial, rec.time, rec.digest))
            if running != rec.chain:
                return False
        entry = records[serial - 1]
        return (
            entry.digest == digest
            and entry.time == token.attested_time
            and entry.chain == claimed_chain
        )

    def audit(self) -> list[bool]:
        """Per-record integrity against a full recomputation from the seed.

        A tamper in any record's serial/time/digest fields falsifies that
        record and every later one (the chain values no longer recompute).
        """
        records = read_ledger(self.path)
        result = []
        running = _CHAIN_SEED
        for rec in records:
            running = sha256(running + _pack_fields(rec.serial, rec.time, rec.digest))
            result.append(running == rec.chain)
        return result


# --- stub client for an external authority ----------------------------------

REQUEST_MAGIC = "tsa-request-v1"
RESPONSE_MAGIC = "tsa-response-v1"

Transport = Callable[[str, bytes], bytes]


def _http_post(endpoint: str, body: bytes) -> bytes:
    req = urllib.request.Request(
        endpoint, data=body, headers={"Content-Type": "text/plain"}, method="POST"
    )
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.read()
    except urllib.error.URLError as exc:
        raise BackendUnavailableError(f"endpoint {endpoint}: {exc}") from exc


def _parse_response(raw: bytes) -> dict[str, str]:
    """Key-value fields of a syntactically valid response, or ValueError."""
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError("response is not UTF-8") from exc
    lines = text.splitlines()
    if not lines or lines[0] != RESPONSE_MAGIC:
        raise ValueError("missing response magic")
    fields: dict[str, str] = {}
    for line in lines[1:]:
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key:
            raise ValueError(f"bad response line {line!r}")
        fields[key] = value
    if "digest" not in fields or "time" not in fields:
        raise ValueError("response lacks digest/time")
    bytes.fromhex(fields["digest"])
    int(fields["time"])
    return fields


class ExternalTsaStub(TimestampBackend):
    """Wire-shape client for a remote authority.

    Sends ``REQUEST_MAGIC`` plus digest/nonce/policy key-value lines to the
    endpoint and treats any syntactically valid response echoing the digest
    as evidence. Signature material in the response is kept opaque.
    """

    backend_id = "external-stub"

    def __init__(
        self,
        endpoint: str,
        *,
        policy_id: str = "logstamp-basic",
        transport: Transport | None = None,
        nonce_source: Callable[[], bytes] | None = None,
    ):
        self.endpoint = endpoint
        self.policy_id = policy_id
        self._transport = transport or _http_post
        self._nonce_source = nonce_source or (lambda: secrets.token_bytes(16))

    def build_request(self, digest: bytes, nonce: bytes) -> bytes:
        lines = [
            REQUEST_MAGIC,
            f"digest={digest.hex()}",
            f"nonce={nonce.hex()}",
            f"policy={self.policy_id}",
        ]
        return ("\n".join(lines) + "\n").encode("utf-8")

    def request_timestamp(self, digest: bytes) -> TimestampToken:
        if len(digest) != DIGEST_SIZE:
            raise BadParamError("digest must be 32 bytes")
        request = self.build_request(digest, self._nonce_source())
        raw = self._transport(self.endpoint, request)
        try:
            fields = _parse_response(raw)
        except ValueError as exc:
            raise BackendRejectedError(f"unusable response: {exc}") from exc
        if fields["digest"] != digest.hex():
            raise BackendRejectedError("response attests a different digest")
        return TimestampToken(self.backend_id, digest, int(fields["time"]), raw)

    def verify_token(self, token: TimestampToken, digest: bytes) -> bool:
        if token.backend_id != self.backend_id:
            return False
        if token.attested_digest != digest:
            return False
        try:
            fields = _parse_response(token.evidence)
        except ValueError:
            return False
        return fields["digest"] == digest.hex() and int(fields["time"]) == token.attested_time
