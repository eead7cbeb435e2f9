"""Counter-based pseudo-randomness.

Every random quantity in the package is a pure function of an integer
address: a 64-bit seed followed by a tuple of 64-bit words (cycle index,
site coordinates, walker index, step counter, ...).  The address is folded
through a SplitMix64-style finalizer, so draws are reproducible bit for bit
and independent of evaluation order, chunking, or thread count.

Three implementations of the same mixing function live in this codebase:
the scalar one here, the vectorized numpy one here, and a compiled one in
the numba backend.  They agree exactly; tests pin that.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream tags.  Arbitrary fixed constants; they only have to be distinct and
# stable forever.  Derivation paths are reported by the seed manifest.
TAG_WALKER = 0x57A17B3D00000001
TAG_TESTFUNC = 0x57A17B3D00000002
TAG_NORMAL = 0x57A17B3D00000003
TAG_SUBSET = 0x57A17B3D00000004

_INV_2_53 = 1.0 / (1 << 53)


def mix64(h: int) -> int:
    """SplitMix64 finalizer on a 64-bit word (python-int reference)."""
    h = (h + _GOLDEN) & _MASK
    h = ((h ^ (h >> 30)) * _MIX1) & _MASK
    h = ((h ^ (h >> 27)) * _MIX2) & _MASK
    return h ^ (h >> 31)


def hash_words(seed: int, *words: int) -> int:
    """Fold (seed, word0, word1, ...) into one 64-bit hash.

    The seed is finalized before the fold: otherwise raw seed bits cancel
    against the first word, and nearby (seed, tag) pairs alias (e.g. seed
    7 under tag T and seed 3 under tag T ^ 4 would share every stream).
    Each word is then xored into full-entropy state and re-finalized.
    """
    h = mix64(seed & _MASK)
    for w in words:
        h = mix64(h ^ (w & _MASK))
    return h


def u01(h: int) -> float:
    """Map a 64-bit hash to a double in [0, 1) using the top 53 bits."""
    return (h >> 11) * _INV_2_53


def mix64_array(h: np.ndarray) -> np.ndarray:
    """Vectorized mix64 on a uint64 array.  Overflow wraps by design."""
    with np.errstate(over="ignore"):
        h = h + np.uint64(_GOLDEN)
        h = (h ^ (h >> np.uint64(30))) * np.uint64(_MIX1)
        h = (h ^ (h >> np.uint64(27))) * np.uint64(_MIX2)
        return h ^ (h >> np.uint64(31))


def hash_fold_array(seed: int, columns: list[np.ndarray]) -> np.ndarray:
    """Vectorized hash_words: fold word columns of equal length.

    Bit-identical to calling hash_words(seed, *row) for every row.
    """
    n = len(columns[0]) if columns else 0
    h = np.full(n, mix64(seed & _MASK), dtype=np.uint64)
    for col in columns:
        h = mix64_array(h ^ col.astype(np.uint64))
    return h


def u01_array(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * _INV_2_53


def uniforms(seed: int, tag: int, n: int) -> np.ndarray:
    """n uniforms on [0,1) addressed by (seed, tag, 0..n-1)."""
    idx = np.arange(n, dtype=np.uint64)
    return u01_array(hash_fold_array(seed, [np.full(n, tag, dtype=np.uint64), idx]))


def normals(seed: int, tag: int, n: int) -> np.ndarray:
    """n standard normals via Box-Muller on counter-based uniforms.

    Kept in-house (rather than numpy Generator) so test-function draws are
    pinned across numpy versions; streams under distinct (seed, tag) pairs
    are independent.
    """
    m = (n + 1) // 2
    idx = np.arange(m, dtype=np.uint64)
    tags = np.full(m, tag, dtype=np.uint64)
    u1 = u01_array(hash_fold_array(seed, [tags, idx, np.zeros(m, dtype=np.uint64)]))
    u2 = u01_array(hash_fold_array(seed, [tags, idx, np.ones(m, dtype=np.uint64)]))
    r = np.sqrt(-2.0 * np.log1p(-u1))  # u1 in [0,1) so 1-u1 in (0,1], log finite
    theta = 2.0 * np.pi * u2
    out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
    return out[:n]


def substream(tag: int, index: int) -> int:
    """Derived tag for the index-th stream of a tag family.

    Hash-composed rather than tag + index: mix64 is a bijection, so two
    families can only collide at indexes a, b with a ^ b == mix64(tag1)
    ^ mix64(tag2); for the fixed tags those xors exceed 2^52, far above
    any index a run can reach.  Adding the index to the tag instead would
    make family f at index t collide with family f+1 at t-1, and so on.
    """
    return hash_words(tag, index)


def walker_stream(seed: int, walker: int) -> int:
    """Stream seed for one walker, derived from the experiment seed."""
    return hash_words(seed, TAG_WALKER, walker)


def walker_streams(seed: int, n_walkers: int) -> np.ndarray:
    idx = np.arange(n_walkers, dtype=np.uint64)
    tags = np.full(n_walkers, TAG_WALKER, dtype=np.uint64)
    return hash_fold_array(seed, [tags, idx])
