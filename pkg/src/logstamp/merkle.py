"""Merkle trees over ordered file contents, with membership proofs.

Construction rules:
  - leaf digest = SHA-256 of the raw content bytes, in input order;
  - internal node = SHA-256(left || right) over the two 32-byte children;
  - a node left unpaired at an odd-sized level is concatenated with itself;
  - a single-leaf tree's root is the leaf digest itself.

Proofs use the canonical style: exactly ceil(log2(n)) steps for n >= 2,
one per level, duplicating the running digest at unpaired positions so no
special cases leak into verification.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

from .errors import EmptyInputError, IndexRangeError, MalformedProofError

DIGEST_SIZE = 32


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def ceil_log2(n: int) -> int:
    """Smallest k with 2**k >= n, for n >= 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n - 1).bit_length()


class Side(enum.Enum):
    """Which side of the concatenation the recorded sibling occupies."""

    LEFT = "L"
    RIGHT = "R"


@dataclass(frozen=True)
class ProofStep:
    sibling: bytes
    side: Side


@dataclass(frozen=True)
class MerkleProof:
    """Ordered sibling digests from the leaf level toward the root."""

    leaf_index: int
    steps: tuple[ProofStep, ...]


class MerkleTree:
    """Full level-by-level tree; ``levels[0]`` holds the leaf digests."""

    def __init__(self, levels: list[list[bytes]]):
        self.levels = levels

    @property
    def leaf_count(self) -> int:
        return len(self.levels[0])

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]


def hash_leaf(content: bytes) -> bytes:
    """Digest of one input file's raw bytes (the empty file is allowed)."""
    return sha256(content)


def build_tree(leaves: list[bytes]) -> MerkleTree:
    """Build the tree over ordered contents; raises EMPTY_INPUT on no leaves."""
    if not leaves:
        raise EmptyInputError("nothing to timestamp: no input contents")
    level = [hash_leaf(content) for content in leaves]
    levels = [level]
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level), 2):
            left = level[i]
            right = level[i + 1] if i + 1 < len(level) else level[i]
            nxt.append(sha256(left + right))
        levels.append(nxt)
        level = nxt
    return MerkleTree(levels)


def merkle_path(tree: MerkleTree, leaf_index: int) -> MerkleProof:
    """Canonical membership proof for the leaf at ``leaf_index``.

    Every proof has exactly ceil(log2(n)) steps; at unpaired positions the
    recorded sibling duplicates the node's own digest (side RIGHT, so the
    fold computes H(d || d) like the tree did).
    """
    n = tree.leaf_count
    if not 0 <= leaf_index < n:
        raise IndexRangeError(f"leaf_index {leaf_index} outside 0..{n - 1}")
    steps = []
    index = leaf_index
    for level in tree.levels[:-1]:
        sibling_index = index ^ 1
        if sibling_index < len(level):
            side = Side.LEFT if sibling_index < index else Side.RIGHT
            steps.append(ProofStep(level[sibling_index], side))
        else:
            steps.append(ProofStep(level[index], Side.RIGHT))
        index //= 2
    return MerkleProof(leaf_index, tuple(steps))


def _check_proof_shape(proof: MerkleProof) -> None:
    if not isinstance(proof, MerkleProof):
        raise MalformedProofError("not a MerkleProof")
    if proof.leaf_index < 0:
        raise MalformedProofError("leaf index cannot be negative")
    for step in proof.steps:
        if not isinstance(step, ProofStep):
            raise MalformedProofError("proof step is not a ProofStep")
        if not isinstance(step.sibling, bytes) or len(step.sibling) != DIGEST_SIZE:
            raise MalformedProofError("sibling digest is not 32 bytes")
        if not isinstance(step.side, Side):
            raise MalformedProofError("step side is not LEFT or RIGHT")


def verify_path(content: bytes, proof: MerkleProof, expected_root: bytes) -> bool:
    """True iff folding the content digest through the proof yields the root.

    Structural defects in the proof raise MALFORMED_PROOF; a mere digest
    mismatch returns False.
    """
    _check_proof_shape(proof)
    running = hash_leaf(content)
    for step in proof.steps:
        if step.side is Side.LEFT:
            running = sha256(step.sibling + running)
        else:
            running = sha256(running + step.sibling)
    return running == expected_root
