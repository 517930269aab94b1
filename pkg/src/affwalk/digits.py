"""Exact arithmetic on finitely supported two-sided digit sequences over Z/q.

A ``Digits`` value is a formal sum ``sum_i d_i t^i`` with ``d_i`` in Z/q and
finitely many nonzero coefficients.  Addition is coefficientwise mod q (no
carry), ``shift`` multiplies by ``t^n``.  Values are immutable, canonical
(zero digits never stored) and hashable, so they can key histograms and
coset tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

# Indices live in a 64-bit range; walks of 1e5 steps stay far inside it.
_INDEX_BOUND = 2**63


class ModulusMismatchError(ValueError):
    """Raised when two values with different moduli are combined."""


@dataclass(frozen=True)
class Digits:
    """Finitely supported map index -> digit in [1, q-1], zeros elided."""

    q: int
    entries: tuple[tuple[int, int], ...]  # sorted by index, canonical

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"modulus must be >= 2, got {self.q}")
        prev = None
        for idx, d in self.entries:
            if not (-_INDEX_BOUND < idx < _INDEX_BOUND):
                raise ValueError(f"index {idx} outside 64-bit range")
            if not (1 <= d <= self.q - 1):
                raise ValueError(f"digit {d} not in [1, {self.q - 1}]")
            if prev is not None and idx <= prev:
                raise ValueError("entries must be strictly increasing by index")
            prev = idx

    @classmethod
    def from_map(cls, q: int, mapping: Mapping[int, int] | Iterable[tuple[int, int]]) -> "Digits":
        """Build a canonical value; digits are reduced mod q, zeros dropped."""
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        acc: dict[int, int] = {}
        for idx, d in items:
            v = (acc.get(idx, 0) + d) % q
            if v:
                acc[idx] = v
            else:
                acc.pop(idx, None)
        return cls(q, tuple(sorted(acc.items())))

    def to_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def digit(self, idx: int) -> int:
        for i, d in self.entries:
            if i == idx:
                return d
        return 0

    def is_zero(self) -> bool:
        return not self.entries

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    def __str__(self) -> str:
        return format_digits(self)


def zero(q: int) -> Digits:
    return Digits(q, ())


def _check_moduli(a: Digits, b: Digits) -> None:
    if a.q != b.q:
        raise ModulusMismatchError(f"modulus mismatch: {a.q} != {b.q}")


def add(a: Digits, b: Digits) -> Digits:
    """Pointwise sum mod q."""
    _check_moduli(a, b)
    acc = dict(a.entries)
    for idx, d in b.entries:
        v = (acc.get(idx, 0) + d) % a.q
        if v:
            acc[idx] = v
        else:
            acc.pop(idx, None)
    return Digits(a.q, tuple(sorted(acc.items())))


def negate(a: Digits) -> Digits:
    return Digits(a.q, tuple((i, a.q - d) for i, d in a.entries))


def sub(a: Digits, b: Digits) -> Digits:
    return add(a, negate(b))


def shift(a: Digits, n: int) -> Digits:
    """Move the entry at index i to i + n (multiplication by t^n)."""
    return Digits(a.q, tuple((i + n, d) for i, d in a.entries))


def truncate_below(a: Digits, k: int) -> Digits:
    """Keep exactly the entries with index < k."""
    return Digits(a.q, tuple((i, d) for i, d in a.entries if i < k))


def truncate_from(a: Digits, k: int) -> Digits:
    """Keep exactly the entries with index >= k (the part discarded above)."""
    return Digits(a.q, tuple((i, d) for i, d in a.entries if i >= k))


def valuation(a: Digits) -> int | float:
    """Minimum stored index; +inf for the zero value."""
    return a.entries[0][0] if a.entries else math.inf


def format_digits(a: Digits) -> str:
    """Text form ``q:{i1:d1,i2:d2,...}`` with indices ascending."""
    body = ",".join(f"{i}:{d}" for i, d in a.entries)
    return f"{a.q}:{{{body}}}"


def parse_digits(text: str) -> Digits:
    """Inverse of :func:`format_digits`; whitespace tolerant."""
    s = text.strip()
    head, sep, body = s.partition(":")
    if not sep:
        raise ValueError(f"bad digits literal {text!r}")
    q = int(head)
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ValueError(f"bad digits literal {text!r}")
    inner = body[1:-1].strip()
    if not inner:
        return zero(q)
    pairs = []
    for part in inner.split(","):
        i_s, _, d_s = part.partition(":")
        pairs.append((int(i_s), int(d_s)))
    return Digits.from_map(q, pairs)
