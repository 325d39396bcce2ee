"""Tree construction, path extraction and path verification."""

from __future__ import annotations

import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logstamp.errors import EmptyInputError, IndexRangeError, MalformedProofError
from logstamp.merkle import (
    MerkleProof,
    ProofStep,
    Side,
    build_tree,
    ceil_log2,
    hash_leaf,
    merkle_path,
    sha256,
    verify_path,
)

# FIPS 180-4 test vectors, frozen.
SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

# Independently recomputed with hashlib only, frozen.
ROOT_AB = "e5a01fee14e0ed5c48714f22180f25ad8365b53f9779f79dc4a3d7e93963f94a"
ROOT_XYZ = "94ee69041d6a31c76688b1da2c00896986f218040c9b41f7118de0b4ee80db98"
ROOT_F1_F6 = "a9ceb1315602f5a2315112fad05a2d283de83ca940d81547f819d7506590fa3b"


def reference_root(contents: list[bytes]) -> bytes:
    """Naive reference: fold levels pairwise, duplicating the odd node."""
    level = [hashlib.sha256(c).digest() for c in contents]
    while len(level) > 1:
        pairs = []
        for i in range(0, len(level), 2):
            right = level[i + 1] if i + 1 < len(level) else level[i]
            pairs.append(hashlib.sha256(level[i] + right).digest())
        level = pairs
    return level[0]


def test_sha256_vectors():
    assert sha256(b"").hex() == SHA256_EMPTY
    assert sha256(b"abc").hex() == SHA256_ABC


def test_hash_leaf_is_content_digest():
    assert hash_leaf(b"abc").hex() == SHA256_ABC


@pytest.mark.parametrize(
    "n,expected",
    [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (6, 3), (7, 3), (8, 3), (9, 4), (16, 4), (17, 5), (1000, 10), (1024, 10), (1025, 11)],
)
def test_ceil_log2(n, expected):
    assert ceil_log2(n) == expected


def test_single_leaf_root_is_leaf_digest():
    tree = build_tree([b"abc"])
    assert tree.root.hex() == SHA256_ABC
    assert tree.leaf_count == 1


def test_two_leaf_root_frozen():
    assert build_tree([b"a", b"b"]).root.hex() == ROOT_AB


def test_three_leaf_root_duplicates_odd_node():
    assert build_tree([b"x", b"y", b"z"]).root.hex() == ROOT_XYZ


def test_six_leaf_root_frozen():
    contents = [f"f{i}".encode() for i in range(1, 7)]
    assert build_tree(contents).root.hex() == ROOT_F1_F6


def test_six_leaf_structure():
    """With six leaves the second level has three nodes and the unpaired
    third one is concatenated with itself one level up."""
    contents = [f"f{i}".encode() for i in range(1, 7)]
    tree = build_tree(contents)
    hs = [hash_leaf(c) for c in contents]
    pair01 = sha256(hs[0] + hs[1])
    pair23 = sha256(hs[2] + hs[3])
    pair45 = sha256(hs[4] + hs[5])
    assert list(tree.levels[1]) == [pair01, pair23, pair45]
    left = sha256(pair01 + pair23)
    lone = sha256(pair45 + pair45)
    assert list(tree.levels[2]) == [left, lone]
    assert tree.root == sha256(left + lone)


def test_empty_input_rejected():
    with pytest.raises(EmptyInputError) as excinfo:
        build_tree([])
    assert excinfo.value.code == "EMPTY_INPUT"


def test_index_out_of_range():
    tree = build_tree([b"a", b"b"])
    for bad in (-1, 2, 99):
        with pytest.raises(IndexRangeError):
            merkle_path(tree, bad)


def test_single_leaf_path_is_empty():
    tree = build_tree([b"only"])
    proof = merkle_path(tree, 0)
    assert proof.steps == ()
    assert verify_path(b"only", proof, tree.root)


def test_unpaired_leaf_records_own_digest_as_sibling():
    tree = build_tree([b"x", b"y", b"z"])
    proof = merkle_path(tree, 2)
    assert len(proof.steps) == 2
    first = proof.steps[0]
    assert first.sibling == hash_leaf(b"z")
    assert first.side is Side.RIGHT


def test_six_leaf_proof_for_fifth_file_carries_duplicated_value():
    """Index 4 of 6: the middle step duplicates the running digest because
    the pair (leaf4, leaf5) has no sibling subtree at the next level."""
    contents = [f"f{i}".encode() for i in range(1, 7)]
    tree = build_tree(contents)
    proof = merkle_path(tree, 4)
    assert len(proof.steps) == 3
    pair45 = sha256(hash_leaf(contents[4]) + hash_leaf(contents[5]))
    assert proof.steps[0].sibling == hash_leaf(contents[5])
    assert proof.steps[0].side is Side.RIGHT
    assert proof.steps[1].sibling == pair45  # the duplicated value
    assert proof.steps[1].side is Side.RIGHT
    assert proof.steps[2].side is Side.LEFT
    assert verify_path(contents[4], proof, tree.root)


@given(
    contents=st.lists(st.binary(min_size=1, max_size=16), min_size=2, max_size=16, unique=True),
    data=st.data(),
)
@settings(max_examples=80, deadline=None)
def test_swapping_two_leaves_changes_root(contents, data):
    i = data.draw(st.integers(min_value=0, max_value=len(contents) - 2))
    j = data.draw(st.integers(min_value=i + 1, max_value=len(contents) - 1))
    swapped = list(contents)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert build_tree(contents).root != build_tree(swapped).root


@given(
    contents=st.lists(st.binary(max_size=64), min_size=1, max_size=40),
    data=st.data(),
)
@settings(max_examples=150, deadline=None)
def test_every_path_verifies(contents, data):
    tree = build_tree(contents)
    index = data.draw(st.integers(min_value=0, max_value=len(contents) - 1))
    proof = merkle_path(tree, index)
    assert len(proof.steps) == ceil_log2(len(contents))
    assert verify_path(contents[index], proof, tree.root)


@given(contents=st.lists(st.binary(min_size=1, max_size=32), min_size=2, max_size=24), data=st.data())
@settings(max_examples=100, deadline=None)
def test_wrong_content_fails(contents, data):
    tree = build_tree(contents)
    index = data.draw(st.integers(min_value=0, max_value=len(contents) - 1))
    proof = merkle_path(tree, index)
    tampered = bytes([contents[index][0] ^ 0x01]) + contents[index][1:]
    assert not verify_path(tampered, proof, tree.root)


def test_root_agrees_with_reference_for_all_small_sizes():
    for n in range(1, 33):
        contents = [bytes([i]) * (i + 1) for i in range(n)]
        assert build_tree(contents).root == reference_root(contents)


def test_malformed_proof_rejected():
    tree = build_tree([b"a", b"b", b"c", b"d"])
    good = merkle_path(tree, 1)
    short_sibling = MerkleProof(1, (ProofStep(b"\x00" * 31, Side.LEFT),) + good.steps[1:])
    with pytest.raises(MalformedProofError):
        verify_path(b"b", short_sibling, tree.root)
    negative_index = MerkleProof(-1, good.steps)
    with pytest.raises(MalformedProofError):
        verify_path(b"b", negative_index, tree.root)


def test_proof_against_wrong_root_fails():
    tree = build_tree([b"a", b"b", b"c"])
    proof = merkle_path(tree, 0)
    assert not verify_path(b"a", proof, bytes(32))
