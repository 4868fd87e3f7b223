"""Symbols and multi-indices.

A symbol is identified by (kind, name, index).  The index is a symmetric
multi-index over named variables: ``u[x,x]`` is the second x-derivative
jet of u, ``Z.X[u]`` is the group jet X_u.  The fixed total order on
symbols (kind, then name, then graded index) determines every serialized
form in the package, so reports are byte-stable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction


class Kind(enum.IntEnum):
    BASE = 0       # base coordinate of E, z = (x, u)
    JET = 1        # submanifold jet u^a_J (and lifted invariants, '@'-prefixed)
    GROUP = 2      # pseudo-group jet Z^a_A
    PARAM = 3      # free named constant
    FLAT = 4       # flat coordinate (y, w) of a section


@dataclass(frozen=True)
class MultiIndex:
    """Symmetric derivative multi-index, stored sparsely as sorted (name, count) pairs."""

    pairs: tuple = ()

    def __post_init__(self):
        total = sum(c for _, c in self.pairs)
        object.__setattr__(self, "_order", total)
        object.__setattr__(self, "_key", (total, self.pairs))

    @staticmethod
    def of(*names):
        counts = {}
        for nm in names:
            counts[nm] = counts.get(nm, 0) + 1
        return MultiIndex(tuple(sorted(counts.items())))

    @staticmethod
    def from_counts(counts):
        return MultiIndex(tuple(sorted((n, c) for n, c in counts.items() if c)))

    @property
    def order(self):
        return self._order

    def count(self, name):
        for n, c in self.pairs:
            if n == name:
                return c
        return 0

    def bump(self, name):
        """Index raised by one derivative in direction ``name``."""
        counts = dict(self.pairs)
        counts[name] = counts.get(name, 0) + 1
        return MultiIndex(tuple(sorted(counts.items())))

    def add(self, other):
        counts = dict(self.pairs)
        for n, c in other.pairs:
            counts[n] = counts.get(n, 0) + c
        return MultiIndex(tuple(sorted(counts.items())))

    def drop(self, name):
        """Index lowered by one derivative in direction ``name``."""
        counts = dict(self.pairs)
        if counts.get(name, 0) <= 0:
            raise KeyError(name)
        counts[name] -= 1
        return MultiIndex.from_counts(counts)

    def contains(self, other):
        """True when this index dominates ``other`` componentwise."""
        return all(self.count(n) >= c for n, c in other.pairs)

    def names(self):
        """Index expanded to the sorted list of variable names with multiplicity."""
        out = []
        for n, c in self.pairs:
            out.extend([n] * c)
        return out

    def splits(self):
        """Decompositions (B, C, mult) with B + C = self; mult is the number of
        ways to pick the sub-multiset C, i.e. a product of per-variable
        binomials.  This is the convention that makes d(d mu) = 0."""
        from math import comb
        items = self.pairs
        results = []

        def rec(i, left, right, mult):
            if i == len(items):
                results.append(
                    (MultiIndex.from_counts(dict(left)),
                     MultiIndex.from_counts(dict(right)), mult)
                )
                return
            n, c = items[i]
            for take in range(c + 1):
                left[n] = take
                right[n] = c - take
                rec(i + 1, left, right, mult * comb(c, c - take))
            del left[n], right[n]

        rec(0, {}, {}, 1)
        return results

    @property
    def key(self):
        return self._key

    def __str__(self):
        return ",".join(self.names())


EMPTY = MultiIndex()


@dataclass(frozen=True)
class Sym:
    """A scalar symbol.  (kind, name, index) identifies it uniquely."""

    kind: Kind
    name: str
    index: MultiIndex = EMPTY

    def __post_init__(self):
        object.__setattr__(self, "_key", (int(self.kind), self.name, self.index.key))
        object.__setattr__(self, "_hash", hash(self._key))

    @property
    def key(self):
        return self._key

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Sym) and self._key == other._key

    @property
    def order(self):
        return self.index.order

    def __lt__(self, other):
        return self.key < other.key

    def __str__(self):
        if self.kind == Kind.GROUP:
            body = "Z." + self.name.upper()
        else:
            body = self.name
        if self.index.order:
            return "%s[%s]" % (body, self.index)
        return body

    __repr__ = __str__


def base(name):
    return Sym(Kind.BASE, name)


def jet(name, index=EMPTY):
    return Sym(Kind.JET, name, index)


def groupjet(name, index=EMPTY):
    return Sym(Kind.GROUP, name, index)


def param(name):
    return Sym(Kind.PARAM, name)


def flat(name, index=EMPTY):
    return Sym(Kind.FLAT, name, index)


def lifted(name, index=EMPTY):
    """Lifted invariant of a jet coordinate; '@'-prefixed to keep it apart from source jets."""
    return Sym(Kind.JET, "@" + name, index)


def is_lifted(s):
    return s.kind == Kind.JET and s.name.startswith("@")


def fraction_str(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)
