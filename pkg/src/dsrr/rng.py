"""Deterministic counter-based random streams.

Every random draw in this package is a pure function of (label, seed):
the pair is hashed to a 128-bit Philox key, uniforms come out of
``Generator.random`` (one 64-bit word per float64, four words per Philox
counter block), and Gaussians are produced by the inverse normal CDF
applied to those uniforms. Because the uniform stream is counter
aligned, any block decomposition of a requested range regenerates
bit-identical values, which is what makes lazily regenerated projection
rows match their materialized counterparts exactly.
"""

import hashlib

import numpy as np
from scipy.special import ndtri

# Philox4x64 emits four 64-bit words per counter increment.
_WORDS_PER_BLOCK = 4

# Smallest uniform fed to ndtri; Generator.random can emit exactly 0.0.
_U_FLOOR = 2.0 ** -54


def stream_key(label: str, seed: int) -> int:
    """128-bit Philox key derived from a stream label and an integer seed."""
    digest = hashlib.sha256(f"{label}|{seed}".encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def generator(label: str, seed: int) -> np.random.Generator:
    """Fresh Generator on the (label, seed) stream, positioned at zero."""
    return np.random.Generator(np.random.Philox(key=stream_key(label, seed)))


def uniform_block(key: int, start: int, count: int) -> np.ndarray:
    """Values [start, start+count) of the uniform stream under ``key``.

    The stream is conceptually infinite; ``start`` may be any nonnegative
    offset and the result does not depend on how callers chunk their
    requests.
    """
    if count == 0:
        return np.empty(0)
    block = start // _WORDS_PER_BLOCK
    skip = start - block * _WORDS_PER_BLOCK
    bitgen = np.random.Philox(key=key)
    if block:
        bitgen.advance(block)
    vals = np.random.Generator(bitgen).random(skip + count)
    return vals[skip:]


def normal_block(key: int, start: int, count: int) -> np.ndarray:
    """Standard normals via inverse CDF on the aligned uniform stream."""
    u = np.maximum(uniform_block(key, start, count), _U_FLOOR)
    return ndtri(u)
