"""
Positional fuzzy-match scoring of documents against a query.

A window of the document scores the number of positions where it equals the
query; a document scores the best window. score_document_naive is the
reference loop. score_document_fast computes the same result bit-parallel:
for each code point of the query it builds an equality bitmask over the
document, shifts it by the query offsets where that code point occurs, and
adds the shifted masks into bit-sliced counters (one integer per counter
bit, one bit per window). The maximum and its lowest window are then read
off the counter planes from the most significant bit down.
"""

from __future__ import annotations

import operator
import unicodedata
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import EmptyQuery, LengthMismatch
from .types import Score


@dataclass(frozen=True)
class NormalizedText:
    """Lowercased, whitespace-collapsed NFC text.

    origin_map[i] is the index in the NFC form of the source string that
    produced chars[i].
    """

    chars: str
    origin_map: Optional[tuple[int, ...]] = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.chars)

    def __str__(self) -> str:
        return self.chars

    def origin_span(self, start: int, end: int) -> tuple[int, int]:
        """Map a normalized half-open range back to the NFC source."""
        if self.origin_map is None or start >= end:
            return start, end
        return self.origin_map[start], self.origin_map[end - 1] + 1


TextLike = Union[NormalizedText, str]


def normalize_text(s: str) -> NormalizedText:
    """NFC, lowercase, collapse whitespace runs to one space, trim."""
    nfc = unicodedata.normalize("NFC", s)
    chars: list[str] = []
    origin: list[int] = []
    space_at = -1
    for i, ch in enumerate(nfc):
        if ch.isspace():
            if chars and space_at < 0:
                space_at = i
            continue
        if space_at >= 0:
            chars.append(" ")
            origin.append(space_at)
            space_at = -1
        for low in ch.lower():
            chars.append(low)
            origin.append(i)
    return NormalizedText("".join(chars), tuple(origin))


def _chars(text: TextLike) -> str:
    return text.chars if isinstance(text, NormalizedText) else text


def text_codes(text: TextLike) -> np.ndarray:
    """Code points of text as a uint32 array."""
    raw = _chars(text).encode("utf-32-le", errors="surrogatepass")
    return np.frombuffer(raw, dtype="<u4")


def score_part(part: TextLike, query: TextLike) -> int:
    """Number of positions where part and query hold the same code point.

    Raises:
        LengthMismatch: part and query differ in length.
    """
    p, q = _chars(part), _chars(query)
    if len(p) != len(q):
        raise LengthMismatch(len(p), len(q))
    return sum(map(operator.eq, p, q))


def score_document_naive(doc: TextLike, query: TextLike, *, strict: bool = False) -> Score:
    """Best window score of doc against query, checking every window.

    When doc is shorter than query the roles are swapped and best_offset is
    the position of doc inside query. strict keeps the literal loop instead,
    which never runs in that case and scores 0.

    Raises:
        EmptyQuery: query is empty.
    """
    d, q = _chars(doc), _chars(query)
    if not q:
        raise EmptyQuery()
    if len(d) < len(q):
        if strict or not d:
            return Score(0, 0)
        d, q = q, d

    width = len(q)
    best, best_offset = 0, 0
    for i in range(len(d) - width + 1):
        part_score = score_part(d[i : i + width], q)
        if part_score > best:
            best, best_offset = part_score, i
    return Score(best, best_offset)


@dataclass(frozen=True)
class CompiledQuery:
    """Query-side plan shared by every document scored against one query.

    alphabet holds the distinct code points of the query; positions[i] the
    query offsets where alphabet[i] occurs. Only these code points ever get
    an equality mask.
    """

    text: str
    codes: np.ndarray = field(repr=False, compare=False)
    alphabet: np.ndarray = field(repr=False, compare=False)
    positions: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def compile(cls, query: TextLike) -> "CompiledQuery":
        text = _chars(query)
        if not text:
            raise EmptyQuery()
        buckets: dict[str, list[int]] = {}
        for offset, ch in enumerate(text):
            buckets.setdefault(ch, []).append(offset)
        alphabet = np.array([ord(ch) for ch in buckets], dtype=np.uint32)
        return cls(
            text=text,
            codes=text_codes(text),
            alphabet=alphabet,
            positions=tuple(tuple(p) for p in buckets.values()),
        )

    def __len__(self) -> int:
        return len(self.text)

    def score(self, doc: TextLike, *, codes: Optional[np.ndarray] = None,
              strict: bool = False) -> Score:
        """Same result as score_document_naive(doc, self.text, strict=strict)."""
        d = _chars(doc)
        if len(d) < len(self.text):
            if strict or not d:
                return Score(0, 0)
            return CompiledQuery.compile(d).score_codes(self.codes)
        return self.score_codes(codes if codes is not None else text_codes(d))

    def score_codes(self, codes: np.ndarray) -> Score:
        """Score a document given as code points; requires len(codes) >= len(self)."""
        width = len(self.text)
        n_windows = len(codes) - width + 1
        n_planes = width.bit_length()
        planes = [0] * n_planes

        equal = codes[np.newaxis, :] == self.alphabet[:, np.newaxis]
        present = np.flatnonzero(equal.any(axis=1))
        packed = np.packbits(equal[present], axis=1, bitorder="little")

        for row, bucket in zip(packed, present):
            mask = int.from_bytes(row.tobytes(), "little")
            for offset in self.positions[bucket]:
                carry = mask >> offset
                for p in range(n_planes):
                    plane = planes[p]
                    planes[p] = plane ^ carry
                    carry &= plane
                    if not carry:
                        break

        candidates = (1 << n_windows) - 1
        value = 0
        for p in reversed(range(n_planes)):
            hit = candidates & planes[p]
            if hit:
                candidates = hit
                value |= 1 << p
        best_offset = (candidates & -candidates).bit_length() - 1
        return Score(value, best_offset)


def score_document_fast(doc: TextLike, query: TextLike, *, strict: bool = False) -> Score:
    """Bit-parallel equivalent of score_document_naive.

    Raises:
        EmptyQuery: query is empty.
    """
    return CompiledQuery.compile(query).score(doc, strict=strict)
