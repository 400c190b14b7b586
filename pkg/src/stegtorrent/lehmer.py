"""Permutation ranking via the Lehmer code, and bit-chunk <-> permutation maps.

Ranks are lexicographic: the Lehmer digit at position ``i`` is the number of
later entries smaller than ``order[i]``, weighted by ``(n-1-i)!``.  Bit chunks
are read as big-endian unsigned integers.  Both conventions are part of the
secret the two endpoints share.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial
from typing import Sequence

from .errors import DomainError, OutOfCodebookError

__all__ = [
    "MIN_SIZE",
    "MAX_SIZE",
    "Permutation",
    "capacity_bits",
    "rank",
    "unrank",
    "bits_to_permutation",
    "permutation_to_bits",
    "relative_order",
    "order_rank",
]

MIN_SIZE = 2
MAX_SIZE = 20


def _check_size(n):
    if not isinstance(n, int) or not MIN_SIZE <= n <= MAX_SIZE:
        raise DomainError(f"package size must be in [{MIN_SIZE}, {MAX_SIZE}], got {n!r}")


class Permutation(tuple):
    """An arrangement of ``0..n-1``; validated on construction."""

    def __new__(cls, order: Sequence[int]):
        self = super().__new__(cls, (int(x) for x in order))
        _check_size(len(self))
        if sorted(self) != list(range(len(self))):
            raise DomainError(f"{tuple(order)!r} is not a permutation of 0..{len(self) - 1}")
        return self

    @property
    def n(self) -> int:
        return len(self)

    def __repr__(self):
        return f"Permutation({list(self)})"


def capacity_bits(n: int) -> int:
    """Exact floor(log2(n!)), the number of secret bits one package carries."""
    _check_size(n)
    return factorial(n).bit_length() - 1


def rank(p: Sequence[int]) -> int:
    p = p if isinstance(p, Permutation) else Permutation(p)
    return _rank(tuple(p))


@lru_cache(maxsize=8192)
def _rank(p: tuple) -> int:
    n = len(p)
    r = 0
    for i, v in enumerate(p):
        smaller_right = sum(1 for w in p[i + 1:] if w < v)
        r += smaller_right * factorial(n - 1 - i)
    return r


def unrank(n: int, r: int) -> Permutation:
    _check_size(n)
    if not isinstance(r, int) or not 0 <= r < factorial(n):
        raise DomainError(f"rank {r!r} outside [0, {n}! - 1]")
    return _unrank(n, r)


@lru_cache(maxsize=8192)
def _unrank(n: int, r: int) -> Permutation:
    pool = list(range(n))
    out = []
    for i in range(n - 1, -1, -1):
        digit, r = divmod(r, factorial(i))
        out.append(pool.pop(digit))
    return Permutation(out)


def _as_bitstring(chunk) -> str:
    if isinstance(chunk, str):
        bits = chunk
    else:
        bits = "".join(str(int(b)) for b in chunk)
    if bits.strip("01"):
        raise DomainError(f"bit chunk may only contain 0 and 1: {chunk!r}")
    return bits


def bits_to_permutation(chunk, n: int) -> Permutation:
    """Map exactly ``capacity_bits(n)`` bits (str or 0/1 sequence) to a permutation."""
    bits = _as_bitstring(chunk)
    cap = capacity_bits(n)
    if len(bits) != cap:
        raise DomainError(f"package of size {n} carries {cap} bits, got {len(bits)}")
    return unrank(n, int(bits, 2))


def permutation_to_bits(p: Sequence[int], package_index=None) -> str:
    p = p if isinstance(p, Permutation) else Permutation(p)
    cap = capacity_bits(len(p))
    r = rank(p)
    if r >= 1 << cap:
        raise OutOfCodebookError(r, cap, package_index)
    return format(r, f"0{cap}b")


def order_rank(values: Sequence) -> int:
    """Rank of the relative order of distinct ``values`` (equals
    ``rank(relative_order(values))`` without building the permutation)."""
    values = tuple(values)
    _check_size(len(values))
    if len(set(values)) != len(values):
        raise DomainError(f"values must be distinct: {values!r}")
    return _rank(values)


def relative_order(symbols: Sequence[int]) -> Permutation:
    """Permutation of ``0..n-1`` with the same relative order as ``symbols``.

    Packages drawn from a pool larger than the package size are decoded by
    the relative order of their pool indices; a package that already is a
    permutation of ``0..n-1`` maps to itself.
    """
    symbols = tuple(symbols)
    ranks = {s: i for i, s in enumerate(sorted(symbols))}
    if len(ranks) != len(symbols):
        raise DomainError(f"package symbols must be distinct: {symbols!r}")
    return Permutation([ranks[s] for s in symbols])
