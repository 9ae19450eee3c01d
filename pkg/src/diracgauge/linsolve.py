"""Sparse exact Gaussian elimination over the rationals.

Rows are dicts {column: Fraction}.  The right-hand side, when present, is
carried as the extra column ``ncols``.  Elimination always proceeds on the
smallest pivot column first, so results are deterministic given the column
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional

Row = Dict[int, Fraction]


class EchelonSystem:
    """Incrementally built echelon form of a linear system A x = b."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.pivots: Dict[int, Row] = {}
        self.inconsistent = False
        self.witness: Optional[Row] = None

    def _reduce(self, row: Row) -> Row:
        pivots = self.pivots
        while True:
            hit = [c for c in row if c in pivots]
            if not hit:
                return row
            c = min(hit)
            f = row[c]
            for k, v in pivots[c].items():
                nv = row.get(k, 0) - f * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)

    def add_row(self, row: Row, rhs: Fraction | int = 0) -> bool:
        """Insert an equation; returns True when it was independent."""
        r = {c: Fraction(v) for c, v in row.items() if v}
        if rhs:
            r[self.ncols] = Fraction(rhs)
        r = self._reduce(r)
        if not r:
            return False
        lead = min(r)
        if lead == self.ncols:
            self.inconsistent = True
            if self.witness is None:
                self.witness = dict(row)
            return False
        inv = 1 / r[lead]
        if inv != 1:
            r = {k: v * inv for k, v in r.items()}
        self.pivots[lead] = r
        return True

    def add_rows(self, rows: Iterable[Row]) -> None:
        for r in rows:
            self.add_row(r)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def rref(self) -> Dict[int, Row]:
        """Fully reduced rows keyed by pivot column."""
        rows = {c: dict(r) for c, r in self.pivots.items()}
        for c in sorted(rows, reverse=True):
            pr = rows[c]
            for c2 in sorted(rows):
                if c2 >= c:
                    break
                r2 = rows[c2]
                f = r2.get(c)
                if not f:
                    continue
                for k, v in pr.items():
                    nv = r2.get(k, 0) - f * v
                    if nv:
                        r2[k] = nv
                    else:
                        r2.pop(k, None)
        return rows

    def solve(self) -> "Solution":
        if self.inconsistent:
            return Solution(self.ncols, None, [], self.rank, self.witness)
        rows = self.rref()
        particular = {c: r[self.ncols] for c, r in rows.items() if r.get(self.ncols)}
        free = [c for c in range(self.ncols) if c not in rows]
        dependents: Dict[int, List] = {f: [] for f in free}
        for c, r in rows.items():
            for k, v in r.items():
                if k != self.ncols and k != c:
                    dependents[k].append((c, v))
        basis = []
        for f in free:
            vec = {f: Fraction(1)}
            for c, v in dependents[f]:
                vec[c] = -v
            basis.append(vec)
        return Solution(self.ncols, particular, basis, self.rank, None)


@dataclass
class Solution:
    ncols: int
    particular: Optional[Row]
    basis: List[Row] = field(default_factory=list)
    rank: int = 0
    witness: Optional[Row] = None

    @property
    def consistent(self) -> bool:
        return self.particular is not None

    @property
    def dimension(self) -> int:
        return len(self.basis)


def solve_system(rows: Iterable[Row], ncols: int, rhs: Iterable[Fraction] | None = None) -> Solution:
    sys = EchelonSystem(ncols)
    if rhs is None:
        for r in rows:
            sys.add_row(r)
    else:
        for r, b in zip(rows, rhs):
            sys.add_row(r, b)
    return sys.solve()


def nullspace(rows: Iterable[Row], ncols: int) -> List[Row]:
    return solve_system(rows, ncols).basis


class ColumnBuilder:
    """Assemble a system column by column from linear images keyed by equation labels.

    Equation labels are tuples; rows are emitted in sorted label order so the
    assembled system does not depend on insertion order.
    """

    def __init__(self):
        self.entries: Dict[tuple, Dict[int, Fraction]] = {}
        self.rhs: Dict[tuple, Fraction] = {}
        self.ncols = 0

    def add_column(self, col: int, image: Dict[tuple, Fraction]) -> None:
        self.ncols = max(self.ncols, col + 1)
        for key, v in image.items():
            if v:
                self.entries.setdefault(key, {})[col] = Fraction(v)

    def add_rhs(self, image: Dict[tuple, Fraction]) -> None:
        for key, v in image.items():
            if v:
                self.rhs[key] = self.rhs.get(key, 0) + Fraction(v)
                self.entries.setdefault(key, {})

    def feed(self, system: EchelonSystem) -> None:
        for key in sorted(self.entries, key=repr):
            system.add_row(self.entries[key], self.rhs.get(key, 0))

    def solve(self, ncols: int | None = None) -> Solution:
        sys = EchelonSystem(ncols if ncols is not None else self.ncols)
        self.feed(sys)
        return sys.solve()
