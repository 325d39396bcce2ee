"""Merkle-aggregated, KDF-hardened timestamping for rotated log files.

One notarized digest covers a whole rotation batch; every file keeps an
independently verifiable marker. Includes the retention splitter that
produces the batches and calculators for storage/cost savings and
brute-force feasibility.
"""

from .errors import (
    BackendRejectedError,
    BackendUnavailableError,
    BadParamError,
    CountMismatchError,
    DelayBudgetError,
    EmptyInputError,
    IndexRangeError,
    IoSinkError,
    LogstampError,
    MalformedMarkerError,
    MalformedProofError,
    RuleDuplicateError,
    RuleSyntaxError,
    VersionError,
)
from .estimator import (
    AttackFeasibility,
    CostModel,
    SavingsReport,
    kdf_adjusted_margin,
    savings_report,
    security_margin,
)
from .kdf import Commitment, KdfParams, calibrate_repetitions, commit, kdf_chain, verify_commitment
from .marker import (
    MARKER_SUFFIX,
    TimestampMarker,
    VerificationReport,
    assemble_markers,
    parse_marker,
    serialize_marker,
    verify_marker,
)
from .merkle import (
    MerkleProof,
    MerkleTree,
    ProofStep,
    Side,
    build_tree,
    ceil_log2,
    hash_leaf,
    merkle_path,
    sha256,
    verify_path,
)
from .retention import (
    DirectorySink,
    MemorySink,
    RetentionRule,
    RetentionRuleSet,
    classify_record,
    compile_rules,
    split_stream,
)
from .tsa import ExternalTsaStub, LedgerBackend, TimestampBackend, TimestampToken, read_ledger

__version__ = "0.1.0"

__all__ = [
    "AttackFeasibility",
    "BackendRejectedError",
    "BackendUnavailableError",
    "BadParamError",
    "Commitment",
    "CostModel",
    "CountMismatchError",
    "DelayBudgetError",
    "DirectorySink",
    "EmptyInputError",
    "ExternalTsaStub",
    "IndexRangeError",
    "IoSinkError",
    "KdfParams",
    "LedgerBackend",
    "LogstampError",
    "MARKER_SUFFIX",
    "MalformedMarkerError",
    "MalformedProofError",
    "MemorySink",
    "MerkleProof",
    "MerkleTree",
    "ProofStep",
    "RetentionRule",
    "RetentionRuleSet",
    "RuleDuplicateError",
    "RuleSyntaxError",
    "SavingsReport",
    "Side",
    "TimestampBackend",
    "TimestampMarker",
    "TimestampToken",
    "VerificationReport",
    "VersionError",
    "assemble_markers",
    "build_tree",
    "calibrate_repetitions",
    "ceil_log2",
    "classify_record",
    "commit",
    "compile_rules",
    "hash_leaf",
    "kdf_adjusted_margin",
    "kdf_chain",
    "merkle_path",
    "parse_marker",
    "read_ledger",
    "savings_report",
    "security_margin",
    "serialize_marker",
    "sha256",
    "split_stream",
    "verify_commitment",
    "verify_marker",
    "verify_path",
]
