"""Exact sparse linear algebra over the rationals.

Vectors are dictionaries ``{column: Fraction}`` holding only non-zero
entries. The echelon form is kept fully reduced, so reducing a new row
against it takes a single pass.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

SparseVector = dict[int, Fraction]


class EchelonBasis:
    """Row space of a growing set of sparse rational rows, in reduced row echelon form."""

    def __init__(self):
        self.pivots: dict[int, SparseVector] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: Mapping[int, Fraction]) -> SparseVector:
        """Remainder of ``row`` after elimination against the current pivots."""
        out = {c: Fraction(v) for c, v in row.items() if v}
        for col in [c for c in out if c in self.pivots]:
            factor = out.get(col)
            if not factor:
                continue
            for c, v in self.pivots[col].items():
                nv = out.get(c, 0) - factor * v
                if nv:
                    out[c] = nv
                else:
                    out.pop(c, None)
        return out

    def add(self, row: Mapping[int, Fraction]) -> bool:
        """Insert a row; returns True when it increased the rank."""
        rem = self.reduce(row)
        if not rem:
            return False
        col = min(rem)
        inv = 1 / rem[col]
        rem = {c: v * inv for c, v in rem.items()}
        for other in self.pivots.values():
            factor = other.get(col)
            if factor:
                for c, v in rem.items():
                    nv = other.get(c, 0) - factor * v
                    if nv:
                        other[c] = nv
                    else:
                        other.pop(c, None)
        self.pivots[col] = rem
        return True


def rank(rows: Iterable[Mapping[int, Fraction]]) -> int:
    basis = EchelonBasis()
    for row in rows:
        basis.add(row)
    return basis.rank


def nullspace(rows: Iterable[Mapping[int, Fraction]], ncols: int) -> list[SparseVector]:
    """Basis of {x : row . x = 0 for every row}, one vector per free column, in column order."""
    basis = EchelonBasis()
    for row in rows:
        basis.add(row)
        if basis.rank == ncols:
            return []
    free = [c for c in range(ncols) if c not in basis.pivots]
    by_free: dict[int, SparseVector] = {f: {f: Fraction(1)} for f in free}
    for p, prow in basis.pivots.items():
        for c, v in prow.items():
            if c != p:
                by_free[c][p] = -v
    return [by_free[f] for f in free]


def apply(rows: Iterable[Mapping[int, Fraction]], x: Mapping[int, Fraction]) -> list[Fraction]:
    """Matrix-vector product for sparse rows."""
    return [sum((v * x.get(c, 0) for c, v in row.items()), Fraction(0)) for row in rows]
