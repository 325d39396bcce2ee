"""Per-file timestamp markers and the ``.tsm`` interchange format.

A marker is the durable evidence bundle for one log file: the single
timestamped root, the file's membership proof, the KDF parameters, the
parameter commitment, and the backend token. One notarization therefore
covers every file of a rotation batch, and each marker stays independently
verifiable.

Serialization is a canonical text envelope meant to be read by humans in a
dispute as much as by software:

    schema_version=1
    file_name=<name>
    leaf_index=<int>
    n_files=<int>
    root=<64 lowercase hex>
    proof=<steps, semicolon-separated "L:<hex>" / "R:<hex>", leaf side first>
    salt=<32 lowercase hex>
    repetitions=<int>
    commitment=<64 lowercase hex>
    token=<base64>
    created_at=<UTC timestamp, informational only>
    <blank line>

Field order, lowercase hex, LF line endings and the blank-line terminator
are all mandatory, so serialization is byte-identical across runs and
implementations. ``created_at`` is excluded from every cryptographic check;
legal time comes from the token.
"""

from __future__ import annotations

import base64
import binascii
import datetime
from dataclasses import dataclass

from .errors import BadParamError, CountMismatchError, MalformedMarkerError, VersionError
from .kdf import Commitment, KdfParams, kdf_chain, verify_commitment
from .merkle import DIGEST_SIZE, MerkleProof, MerkleTree, ProofStep, Side, ceil_log2, merkle_path, verify_path
from .tsa import TimestampBackend, TimestampToken, decode_token, encode_token

SCHEMA_VERSION = 1
MARKER_SUFFIX = ".tsm"

_FIELD_ORDER = (
    "schema_version",
    "file_name",
    "leaf_index",
    "n_files",
    "root",
    "proof",
    "salt",
    "repetitions",
    "commitment",
    "token",
    "created_at",
)

# Wire-size accounting, used by the storage estimator: one serialized proof
# step costs "L:" + 64 hex + ";" separator; everything else (framing, salt,
# counters, created_at, a base64 ledger token, a ~10-char file name) measures
# out to a fixed surcharge. Real sizes drift by a few bytes with name length
# and counter digits.
PROOF_STEP_WIRE_BYTES = 67
MARKER_FIXED_OVERHEAD_BYTES = 421


@dataclass(frozen=True)
class TimestampMarker:
    schema_version: int
    file_name: str
    leaf_index: int
    proof: MerkleProof
    root: bytes
    kdf_params: KdfParams
    commitment: Commitment
    token: TimestampToken
    created_at: str


@dataclass(frozen=True)
class VerificationReport:
    path_ok: bool
    commitment_ok: bool
    token_ok: bool
    overall: bool
    failure_detail: str | None = None


def _iso_utc(seconds: int) -> str:
    stamp = datetime.datetime.fromtimestamp(seconds, tz=datetime.timezone.utc)
    return stamp.strftime("%Y-%m-%dT%H:%M:%SZ")


def assemble_markers(
    file_names: list[str],
    tree: MerkleTree,
    kdf_params: KdfParams,
    commitment: Commitment,
    token: TimestampToken,
    *,
    created_at: str | None = None,
) -> list[TimestampMarker]:
    """One marker per file, all sharing the same root, commitment and token."""
    if not (len(file_names) == tree.leaf_count == kdf_params.n_files):
        raise CountMismatchError(
            f"{len(file_names)} names vs {tree.leaf_count} leaves vs {kdf_params.n_files} n_files"
        )
    if created_at is None:
        created_at = _iso_utc(token.attested_time)
    return [
        TimestampMarker(
            schema_version=SCHEMA_VERSION,
            file_name=name,
            leaf_index=index,
            proof=merkle_path(tree, index),
            root=tree.root,
            kdf_params=kdf_params,
            commitment=commitment,
            token=token,
            created_at=created_at,
        )
        for index, name in enumerate(file_names)
    ]


def _encode_proof(proof: MerkleProof) -> str:
    return ";".join(f"{step.side.value}:{step.sibling.hex()}" for step in proof.steps)


def serialize_marker(marker: TimestampMarker) -> bytes:
    if marker.schema_version != SCHEMA_VERSION:
        raise BadParamError(f"cannot serialize schema_version {marker.schema_version}")
    for field in ("file_name", "created_at"):
        value = getattr(marker, field)
        if not value or "\n" in value:
            raise BadParamError(f"{field} must be a non-empty single line")
    lines = [
        f"schema_version={marker.schema_version}",
        f"file_name={marker.file_name}",
        f"leaf_index={marker.leaf_index}",
        f"n_files={marker.kdf_params.n_files}",
        f"root={marker.root.hex()}",
        f"proof={_encode_proof(marker.proof)}",
        f"salt={marker.kdf_params.salt.hex()}",
        f"repetitions={marker.kdf_params.repetitions}",
        f"commitment={marker.commitment.digest.hex()}",
        f"token={base64.b64encode(encode_token(marker.token)).decode('ascii')}",
        f"created_at={marker.created_at}",
    ]
    return ("\n".join(lines) + "\n\n").encode("utf-8")


def _parse_hex(field: str, value: str, size: int) -> bytes:
    if len(value) != 2 * size or value != value.lower():
        raise MalformedMarkerError(field, f"expected {2 * size} lowercase hex chars")
    try:
        return bytes.fromhex(value)
    except ValueError as exc:
        raise MalformedMarkerError(field, "invalid hex") from exc


def _parse_int(field: str, value: str, minimum: int) -> int:
    if not value.isdigit():
        raise MalformedMarkerError(field, "expected a decimal integer")
    number = int(value)
    if number < minimum:
        raise MalformedMarkerError(field, f"must be >= {minimum}")
    return number


def _parse_proof(value: str, leaf_index: int, n_files: int) -> MerkleProof:
    steps: list[ProofStep] = []
    if value:
        for chunk in value.split(";"):
            side_mark, sep, hex_digest = chunk.partition(":")
            if not sep or side_mark not in ("L", "R"):
                raise MalformedMarkerError("proof", f"bad step {chunk!r}")
            steps.append(ProofStep(_parse_hex("proof", hex_digest, DIGEST_SIZE), Side(side_mark)))
    if len(steps) != ceil_log2(n_files):
        raise MalformedMarkerError(
            "proof", f"{len(steps)} steps but n_files={n_files} requires {ceil_log2(n_files)}"
        )
    return MerkleProof(leaf_index, tuple(steps))


def parse_marker(raw: bytes) -> TimestampMarker:
    """Strict inverse of serialize_marker.

    Raises MALFORMED_MARKER naming the offending field, or VERSION for an
    unknown schema_version.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedMarkerError("envelope", "not UTF-8") from exc
    lines = text.split("\n")
    if len(lines) != len(_FIELD_ORDER) + 2 or lines[-1] != "" or lines[-2] != "":
        raise MalformedMarkerError("envelope", "framing: expected 11 lines plus blank terminator")
    values: dict[str, str] = {}
    for expected_key, line in zip(_FIELD_ORDER, lines[: len(_FIELD_ORDER)]):
        key, sep, value = line.partition("=")
        if not sep or key != expected_key:
            raise MalformedMarkerError(expected_key, f"expected '{expected_key}=' line, got {line!r}")
        values[key] = value

    version = _parse_int("schema_version", values["schema_version"], 0)
    if version != SCHEMA_VERSION:
        raise VersionError(f"unsupported marker schema_version {version}")
    if not values["file_name"]:
        raise MalformedMarkerError("file_name", "must be non-empty")
    leaf_index = _parse_int("leaf_index", values["leaf_index"], 0)
    n_files = _parse_int("n_files", values["n_files"], 1)
    if leaf_index >= n_files:
        raise MalformedMarkerError("leaf_index", f"{leaf_index} not below n_files={n_files}")
    root = _parse_hex("root", values["root"], DIGEST_SIZE)
    proof = _parse_proof(values["proof"], leaf_index, n_files)
    salt = _parse_hex("salt", values["salt"], 16)
    repetitions = _parse_int("repetitions", values["repetitions"], 1)
    if repetitions >= 1 << 64:
        raise MalformedMarkerError("repetitions", "exceeds 64-bit range")
    commitment = Commitment(_parse_hex("commitment", values["commitment"], DIGEST_SIZE))
    try:
        token = decode_token(base64.b64decode(values["token"], validate=True))
    except (ValueError, binascii.Error) as exc:
        raise MalformedMarkerError("token", str(exc)) from exc
    if len(token.attested_digest) != DIGEST_SIZE:
        raise MalformedMarkerError("token", "attested digest is not 32 bytes")
    if not values["created_at"]:
        raise MalformedMarkerError("created_at", "must be non-empty")

    return TimestampMarker(
        schema_version=version,
        file_name=values["file_name"],
        leaf_index=leaf_index,
        proof=proof,
        root=root,
        kdf_params=KdfParams(salt=salt, repetitions=repetitions, n_files=n_files),
        commitment=commitment,
        token=token,
        created_at=values["created_at"],
    )


def verify_marker(
    content: bytes, marker: TimestampMarker, backend: TimestampBackend
) -> VerificationReport:
    """Run the three independent checks a marker promises.

    path_ok: the content plus the stored proof reproduce the stored root.
    commitment_ok: chaining the stored root through the stored KDF
        parameters recreates the stored commitment.
    token_ok: the backend vouches that the commitment digest was attested.
    """
    params = marker.kdf_params
    path_ok = verify_path(content, marker.proof, marker.root)
    kdf_output = kdf_chain(marker.root, params.salt, params.repetitions)
    commitment_ok = verify_commitment(marker.commitment, kdf_output, params)
    token_ok = backend.verify_token(marker.token, marker.commitment.digest)
    detail = None
    if not path_ok:
        detail = "content and proof do not reproduce the timestamped root"
    elif not commitment_ok:
        detail = "KDF parameters do not match the committed values"
    elif not token_ok:
        detail = "backend does not vouch for the token"
    return VerificationReport(
        path_ok=path_ok,
        commitment_ok=commitment_ok,
        token_ok=token_ok,
        overall=path_ok and commitment_ok and token_ok,
        failure_detail=detail,
    )
