"""Reduced Cartan characters and Cartan's involutivity test.

The tableau of a coframe's structure equations is read off the terms
w^j ^ (free generator): contracting with a direction v in the horizontal
space gives one matrix row block per equation, with one column per free
generator.  The k-th reduced character is the rank gain of stacking a
k-th generic direction; genericity is sampled with exact rational
directions and certified by recorded witnesses.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import MonotonicityViolation
from .expr import Expr, ZERO, eval_rational
from .forms import Form, GenKind
from .symbols import Sym, groupjet


@dataclass(frozen=True)
class TableauInput:
    """Structure equations with a declared ordering of unknown generators.

    ``equations``: list of 2-forms (d omega or d mu on the frame).
    ``free``: ordered Maurer-Cartan generators treated as unknown 1-forms
    (the ordering fixes matrix columns).
    ``horizontal``: ordered horizontal generators spanning contraction
    directions.
    """

    equations: tuple
    free: tuple
    horizontal: tuple

    def isolated_generators(self):
        used = set()
        for eq in self.equations:
            used.update(eq.generators())
        return [g for g in self.free if g not in used]


def character_matrix(t: TableauInput, direction):
    """Rows: one per equation; columns: free generators; entry (i, r) is the
    coefficient of mu_r in the contraction of equation i with ``direction``
    (a vector over t.horizontal)."""
    rows = []
    for eq in t.equations:
        row = []
        for g in t.free:
            entry = ZERO
            for j, h in enumerate(t.horizontal):
                vj = direction[j]
                if isinstance(vj, (int, Fraction)):
                    vj = Expr.const(vj)
                c = _wedge_coeff(eq, h, g)
                if not c.is_zero_expr():
                    entry = entry + vj * c
            row.append(entry)
        rows.append(row)
    return rows


def _wedge_coeff(eq: Form, h, g) -> Expr:
    """Coefficient of h ^ g in a 2-form, with orientation sign."""
    if h.key < g.key:
        return eq.terms.get((h, g), ZERO)
    if g.key < h.key:
        c = eq.terms.get((g, h), ZERO)
        return -c
    return ZERO


def _rational_matrix(rows, point=None):
    out = []
    for row in rows:
        out.append([eval_rational(c, point or {}) if not c.is_const() else c.const_value()
                    for c in row])
    return out


def fraction_free_rank(m) -> int:
    """Exact rank by fraction-free (Bareiss-style) elimination on a copy."""
    if not m or not m[0]:
        return 0
    m = [[Fraction(v) for v in row] for row in m]
    nrows, ncols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(ncols):
        piv = next((r for r in range(row, nrows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = 1 / m[row][col]
        for r in range(row + 1, nrows):
            if m[r][col]:
                f = m[r][col] * inv
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        row += 1
        rank += 1
        if row == nrows:
            break
    return rank


DIRECTION_BOUND = 10
DEFAULT_TRIALS = 32
STABLE_STREAK = 8


def reduced_characters(t: TableauInput, seed=0, trials=DEFAULT_TRIALS):
    """Characters s^(1)_k via stacked generic directions, with witnesses.

    Returns (characters, witnesses): characters has one entry per equation;
    witnesses[k] is the list of directions achieving the k-th stacked rank.
    """
    rng = random.Random(seed)
    n = len(t.horizontal)
    neq = len(t.equations)
    symbolic = [[[_wedge_coeff(eq, h, g) for g in t.free] for h in t.horizontal]
                for eq in t.equations]

    def matrix_for(directions):
        rows = []
        for d in directions:
            for ie in range(neq):
                row = []
                for col in range(len(t.free)):
                    v = Fraction(0)
                    for j in range(n):
                        c = symbolic[ie][j][col]
                        if not c.is_zero_expr():
                            v += d[j] * c.const_value()
                    row.append(v)
                rows.append(row)
        return rows

    for ie in range(neq):
        for j in range(n):
            for col in range(len(t.free)):
                c = symbolic[ie][j][col]
                if not c.is_const():
                    raise ValueError("tableau coefficients must be constant on the frame")

    characters = []
    witnesses = []
    prev_rank = 0
    prev_dirs = []
    for k in range(neq):
        if k >= 1 and characters and characters[-1] == 0:
            characters.append(0)
            witnesses.append(list(prev_dirs))
            continue
        best_rank = prev_rank
        best_dirs = None
        stable = 0
        for _ in range(trials):
            d = [Fraction(rng.randint(-DIRECTION_BOUND, DIRECTION_BOUND),
                          rng.randint(1, DIRECTION_BOUND)) for _ in range(n)]
            rank = fraction_free_rank(matrix_for(prev_dirs + [d]))
            if rank > best_rank:
                best_rank = rank
                best_dirs = prev_dirs + [d]
                stable = 0
            else:
                stable += 1
                if stable >= STABLE_STREAK and best_dirs is not None:
                    break
        if best_dirs is None:
            best_dirs = prev_dirs + [[Fraction(0)] * n]
        characters.append(best_rank - prev_rank)
        witnesses.append(list(best_dirs))
        prev_rank = best_rank
        prev_dirs = best_dirs
    return characters, witnesses


@dataclass(frozen=True)
class CartanReport:
    characters: tuple
    free_param_count: int
    involutive: bool
    degree_sum: int
    witnesses: tuple = ()

    def as_dict(self):
        return {
            "characters": list(self.characters),
            "r": self.free_param_count,
            "sum_k_k_sk": self.degree_sum,
            "involutive": self.involutive,
            "witnesses": [[[str(v) for v in d] for d in w] for w in self.witnesses],
        }


def cartan_test(characters, free_param_count, witnesses=()) -> CartanReport:
    """Involutive iff r = sum_k k*s_k; characters must be non-increasing."""
    chars = list(characters)
    for a, b in zip(chars, chars[1:]):
        if b > a:
            raise MonotonicityViolation("characters %s are not non-increasing" % chars)
    degree_sum = sum((k + 1) * s for k, s in enumerate(chars))
    return CartanReport(tuple(chars), free_param_count,
                        degree_sum == free_param_count, degree_sum,
                        tuple(tuple(tuple(d) for d in w) for w in witnesses))


def free_parameter_count(system, state, order) -> int:
    """Order-``order`` parametric group jets not solved in the frame state."""
    return len(state.free_parameters(order, exact=True))
