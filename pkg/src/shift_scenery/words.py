"""Alphabet, finite words, cylinder indexing and the shift metric.

Words are plain tuples of ints in ``0..k-1``.  A "past word" is also a plain
tuple, stored in chronological order, so ``past[-1]`` is the symbol
immediately before time zero.  The empty tuple denotes the full space.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Iterator

Word = tuple  # tuple[int, ...]

_MAX_SYMBOLS = 64
_MAX_INDEX = 2**53


class Alphabet:
    """The symbol set ``{0, ..., k-1}``.

    ``k`` is capped at 64 so that full depth-m cylinder enumerations stay
    desk-scale.
    """

    __slots__ = ("k",)

    def __init__(self, k: int):
        if not isinstance(k, int) or k < 2 or k > _MAX_SYMBOLS:
            raise ValueError(f"alphabet size must be an int in [2, {_MAX_SYMBOLS}], got {k!r}")
        self.k = k

    def __repr__(self):
        return f"Alphabet(k={self.k})"

    def __eq__(self, other):
        return isinstance(other, Alphabet) and other.k == self.k

    def __hash__(self):
        return hash(("Alphabet", self.k))

    def word(self, symbols: Iterable[int]) -> Word:
        """Validate and normalize a sequence of symbols into a word tuple."""
        w = tuple(symbols)
        k = self.k
        for s in w:
            if not 0 <= s < k:
                raise ValueError(f"symbol {s!r} outside alphabet of size {k}")
        return w

    def concat(self, past: Iterable[int], future: Iterable[int]) -> Word:
        """Concatenate a past window and a future word into one word."""
        return self.word(past) + self.word(future)

    def cylinder_index(self, w: Word) -> int:
        """Base-k big-endian encoding of a word, in ``0..k^len(w)-1``."""
        m = len(w)
        if self.k**m > _MAX_INDEX:
            raise ValueError(f"k^m = {self.k}^{m} exceeds the 2^53 indexing range")
        idx = 0
        for s in w:
            if not 0 <= s < self.k:
                raise ValueError(f"symbol {s!r} outside alphabet of size {self.k}")
            idx = idx * self.k + s
        return idx

    def cylinder_word(self, index: int, length: int) -> Word:
        """Inverse of :meth:`cylinder_index` for fixed word length."""
        total = self.k**length
        if total > _MAX_INDEX:
            raise ValueError(f"k^m = {self.k}^{length} exceeds the 2^53 indexing range")
        if not 0 <= index < total:
            raise ValueError(f"index {index} out of range for length {length}")
        out = [0] * length
        for pos in range(length - 1, -1, -1):
            index, out[pos] = divmod(index, self.k)
        return tuple(out)

    def all_words(self, length: int) -> Iterator[Word]:
        """All words of a given length, in cylinder-index order."""
        return product(range(self.k), repeat=length)


def shift_distance(x: Word, y: Word) -> float:
    """Metric ``2^-n`` where ``n`` is the last index of full agreement.

    Defined on equal-length nonempty words (finite-prefix stand-ins for
    sequences).  Equal words have distance 0.  Disagreement at index 0 gives
    ``n = -1`` and so distance 2, which keeps the formula total and the
    metric an ultrametric.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) == 0:
        raise ValueError("shift_distance needs nonempty words")
    for i, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return 2.0 ** (1 - i)  # n = i - 1
    return 0.0
