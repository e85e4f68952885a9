# polyvocab/simplex.py
"""
Exact bounded-variable simplex over ``fractions.Fraction``.

Every constraint row ``lo <= a·x <= hi`` is carried as a slack variable
``r = a·x`` whose bounds are ``[lo, hi]``, so the tableau is homogeneous and
all right-hand sides live in variable bounds. Rows are kept in dictionary
form: each basic variable maps to a sparse ``{nonbasic: coefficient}`` row.
Bounds use ``None`` for infinity.

The primal method prices by the largest reduced cost and falls back to
Bland's rule (lowest index first) after a run of degenerate pivots; the dual
method drops the most violated row. Ties always go to the lowest index, so
every run is deterministic. An optional ``deadline`` (a ``time.monotonic``
value) is checked inside every pivot loop and raises :class:`SolverTimeout`.
"""

import logging
import time
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .exceptions import SolverContractError, SolverTimeout

logger = logging.getLogger(__name__)

Bound = Optional[Fraction]
SparseRow = Dict[int, Fraction]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
STALLED = "stalled"

ZERO = Fraction(0)
# Degenerate pivots tolerated before pricing switches to Bland's rule.
BLAND_AFTER = 50
# Pivots between two clock reads.
CLOCK_EVERY = 16


class LinearProgram:
    """
    Mutable LP state: bounds, current values, basis rows and reduced costs.

    Build one with :meth:`from_rows`, then call :meth:`set_objective` and
    :meth:`primal`. Branch-and-bound drives it through :meth:`tighten`,
    :meth:`dual` (after bounds or rows change), :meth:`primal` (after the
    objective changes), :meth:`snapshot` and :meth:`restore`.
    """

    max_iterations = 200000

    def __init__(self, lower: Sequence[Bound], upper: Sequence[Bound], deadline: Optional[float] = None):
        self.deadline = deadline
        self.lower: List[Bound] = list(lower)
        self.upper: List[Bound] = list(upper)
        self.n_structural = len(self.lower)
        self.value: List[Fraction] = [_start_value(lo, hi) for lo, hi in zip(self.lower, self.upper)]
        self.rows: Dict[int, SparseRow] = {}
        self.cost_row: SparseRow = {}
        self.costs: Dict[int, Fraction] = {}
        self.artificials: List[int] = []

    # -- construction -----------------------------------------------------

    @classmethod
    def from_rows(cls, lower: Sequence[Bound], upper: Sequence[Bound],
                  rows: Iterable[Tuple[Dict[int, Fraction], Bound, Bound]],
                  deadline: Optional[float] = None) -> Optional["LinearProgram"]:
        """Build the LP and run phase one; ``None`` when it is infeasible."""
        lp = cls(lower, upper, deadline)
        for lo, hi in zip(lp.lower, lp.upper):
            if lo is not None and hi is not None and lo > hi:
                return None
        for coeffs, lo, hi in rows:
            lp.add_row(coeffs, lo, hi)
        if not lp.phase_one():
            return None
        return lp

    def _new_var(self, lo: Bound, hi: Bound, value: Fraction) -> int:
        self.lower.append(lo)
        self.upper.append(hi)
        self.value.append(value)
        return len(self.lower) - 1

    def substitute(self, coeffs: Dict[int, Fraction]) -> SparseRow:
        """Express ``coeffs·x`` over the current nonbasic variables."""
        row: SparseRow = {}
        for j, a in coeffs.items():
            if a == 0:
                continue
            basic = self.rows.get(j)
            if basic is None:
                row[j] = row.get(j, ZERO) + a
            else:
                for k, d in basic.items():
                    row[k] = row.get(k, ZERO) + a * d
        return {k: v for k, v in row.items() if v != 0}

    def add_row(self, coeffs: Dict[int, Fraction], lo: Bound, hi: Bound) -> int:
        """Append ``lo <= coeffs·x <= hi`` as a new basic slack; returns its index."""
        row = self.substitute(coeffs)
        value = sum((self.value[k] * d for k, d in row.items()), ZERO)
        r = self._new_var(lo, hi, value)
        self.rows[r] = row
        return r

    def phase_one(self) -> bool:
        """Reach a feasible basis through artificial variables."""
        artificial_cost: SparseRow = {}
        for r in sorted(self.rows):
            val = self.value[r]
            target = _violated_bound(val, self.lower[r], self.upper[r])
            if target is None:
                continue
            # r leaves the basis at the violated bound, an artificial absorbs the gap
            sigma = Fraction(1) if val > target else Fraction(-1)
            row = self.rows.pop(r)
            self.value[r] = target
            art_row = {k: d / sigma for k, d in row.items()}
            art_row[r] = art_row.get(r, ZERO) - 1 / sigma
            art = self._new_var(ZERO, None, (val - target) / sigma)
            self.rows[art] = {k: v for k, v in art_row.items() if v != 0}
            self.artificials.append(art)
            for k, d in self.rows[art].items():
                artificial_cost[k] = artificial_cost.get(k, ZERO) + d
        if not self.artificials:
            return True
        self.costs = {a: Fraction(1) for a in self.artificials}
        self.cost_row = {k: v for k, v in artificial_cost.items() if v != 0}
        status = self.primal()
        if status != OPTIMAL:
            raise SolverContractError("phase one did not terminate at an optimum")
        if any(self.value[a] != 0 for a in self.artificials):
            return False
        for a in self.artificials:
            self.upper[a] = ZERO
            if a not in self.rows:
                self._drop_column(a)
        self.costs = {}
        self.cost_row = {}
        return True

    def _drop_column(self, j: int) -> None:
        for row in self.rows.values():
            row.pop(j, None)
        self.cost_row.pop(j, None)

    # -- objective ----------------------------------------------------------

    def set_objective(self, costs: Dict[int, Fraction]) -> None:
        """Minimize ``costs·x``."""
        self.costs = {j: Fraction(c) for j, c in costs.items() if c != 0}
        self.cost_row = self.substitute(self.costs)

    def objective_value(self) -> Fraction:
        return sum((self.value[j] * c for j, c in self.costs.items()), ZERO)

    # -- pivoting -------------------------------------------------------------

    def _move_nonbasic(self, j: int, delta: Fraction) -> None:
        if delta == 0:
            return
        self.value[j] += delta
        for b, row in self.rows.items():
            d = row.get(j)
            if d is not None:
                self.value[b] += d * delta

    def _pivot(self, j: int, b: int) -> None:
        """Entering nonbasic ``j`` replaces basic ``b``."""
        row_b = self.rows.pop(b)
        pivot = row_b.pop(j)
        new_row: SparseRow = {b: 1 / pivot}
        for k, d in row_b.items():
            new_row[k] = -d / pivot
        for row in self.rows.values():
            coef = row.pop(j, None)
            if coef is None:
                continue
            for k, d in new_row.items():
                v = row.get(k, ZERO) + coef * d
                if v == 0:
                    row.pop(k, None)
                else:
                    row[k] = v
        coef = self.cost_row.pop(j, None)
        if coef is not None:
            for k, d in new_row.items():
                v = self.cost_row.get(k, ZERO) + coef * d
                if v == 0:
                    self.cost_row.pop(k, None)
                else:
                    self.cost_row[k] = v
        self.rows[j] = new_row

    def _directions(self, j: int) -> Tuple[bool, bool]:
        """Whether nonbasic ``j`` may increase / decrease from its value."""
        lo, hi, v = self.lower[j], self.upper[j], self.value[j]
        return (hi is None or v < hi), (lo is None or v > lo)

    def _tick(self, iteration: int) -> None:
        if self.deadline is not None and iteration % CLOCK_EVERY == 0 and time.monotonic() > self.deadline:
            raise SolverTimeout("simplex passed its deadline")

    def _price(self, bland: bool) -> Tuple[Optional[int], int]:
        """Entering column and direction; ``(None, 0)`` at an optimum."""
        entering, direction = None, 0
        best = ZERO
        for j in sorted(self.cost_row):
            d = self.cost_row[j]
            up, down = self._directions(j)
            if d < 0 and up:
                score, sense = -d, 1
            elif d > 0 and down:
                score, sense = d, -1
            else:
                continue
            if bland:
                return j, sense
            if score > best:
                best, entering, direction = score, j, sense
        return entering, direction

    def primal(self) -> str:
        """Primal simplex from a feasible basis."""
        degenerate = 0
        for iteration in range(self.max_iterations):
            self._tick(iteration)
            j, direction = self._price(bland=degenerate >= BLAND_AFTER)
            if j is None:
                return OPTIMAL
            best: Optional[Fraction] = None
            leaving: Optional[int] = None
            lo, hi = self.lower[j], self.upper[j]
            if lo is not None and hi is not None:
                best, leaving = hi - lo, j
            for b in sorted(self.rows):
                d = self.rows[b].get(j)
                if d is None:
                    continue
                rate = d * direction
                if rate > 0 and self.upper[b] is not None:
                    t = (self.upper[b] - self.value[b]) / rate
                elif rate < 0 and self.lower[b] is not None:
                    t = (self.value[b] - self.lower[b]) / -rate
                else:
                    continue
                if best is None or t < best or (t == best and leaving is not None and b < leaving):
                    best, leaving = t, b
            if leaving is None or best is None:
                return UNBOUNDED
            degenerate = degenerate + 1 if best == 0 else 0
            self._move_nonbasic(j, best * direction)
            if leaving == j:
                continue
            rate = self.rows[leaving][j] * direction
            self.value[leaving] = self.upper[leaving] if rate > 0 else self.lower[leaving]
            self._pivot(j, leaving)
        raise SolverContractError("primal simplex iteration limit reached")

    def is_dual_feasible(self) -> bool:
        for j, d in self.cost_row.items():
            lo, hi, v = self.lower[j], self.upper[j], self.value[j]
            if lo is not None and hi is not None and lo == hi:
                continue
            if d > 0 and not (lo is not None and v == lo):
                return False
            if d < 0 and not (hi is not None and v == hi):
                return False
        return True

    def dual(self, max_iterations: int = 5000) -> str:
        """Dual simplex from a dual-feasible basis."""
        if not self.is_dual_feasible():
            return STALLED
        for iteration in range(max_iterations):
            self._tick(iteration)
            leaving = None
            target = ZERO
            worst = ZERO
            for b in sorted(self.rows):
                t = _violated_bound(self.value[b], self.lower[b], self.upper[b])
                if t is not None and abs(self.value[b] - t) > worst:
                    leaving, target, worst = b, t, abs(self.value[b] - t)
            if leaving is None:
                return OPTIMAL
            b = leaving
            need_increase = self.value[b] < target
            entering = None
            best: Optional[Fraction] = None
            for j in sorted(self.rows[b]):
                alpha = self.rows[b][j]
                up, down = self._directions(j)
                lo, hi = self.lower[j], self.upper[j]
                if lo is not None and hi is not None and lo == hi:
                    continue
                if need_increase:
                    ok = (alpha > 0 and up) or (alpha < 0 and down)
                else:
                    ok = (alpha < 0 and up) or (alpha > 0 and down)
                if not ok:
                    continue
                ratio = abs(self.cost_row.get(j, ZERO) / alpha)
                if best is None or ratio < best:
                    best, entering = ratio, j
            if entering is None:
                return INFEASIBLE
            alpha = self.rows[b][entering]
            self._move_nonbasic(entering, (target - self.value[b]) / alpha)
            self.value[b] = target
            self._pivot(entering, b)
        return STALLED

    # -- branch-and-bound support ---------------------------------------------

    def tighten(self, j: int, lo: Bound, hi: Bound) -> bool:
        """Intersect the bounds of ``j`` with ``[lo, hi]``; False when empty."""
        new_lo = self.lower[j] if lo is None else (lo if self.lower[j] is None else max(lo, self.lower[j]))
        new_hi = self.upper[j] if hi is None else (hi if self.upper[j] is None else min(hi, self.upper[j]))
        if new_lo is not None and new_hi is not None and new_lo > new_hi:
            return False
        self.lower[j], self.upper[j] = new_lo, new_hi
        if j not in self.rows:
            v = self.value[j]
            if new_lo is not None and v < new_lo:
                self._move_nonbasic(j, new_lo - v)
            elif new_hi is not None and v > new_hi:
                self._move_nonbasic(j, new_hi - v)
        return True

    def snapshot(self) -> tuple:
        return (
            list(self.lower), list(self.upper), list(self.value),
            {b: dict(r) for b, r in self.rows.items()},
            dict(self.cost_row), dict(self.costs), list(self.artificials),
        )

    def restore(self, snap: tuple) -> None:
        lower, upper, value, rows, cost_row, costs, arts = snap
        self.lower, self.upper, self.value = list(lower), list(upper), list(value)
        self.rows = {b: dict(r) for b, r in rows.items()}
        self.cost_row, self.costs, self.artificials = dict(cost_row), dict(costs), list(arts)

    def structural_values(self) -> List[Fraction]:
        return self.value[: self.n_structural]


def _start_value(lo: Bound, hi: Bound) -> Fraction:
    if lo is not None:
        return Fraction(lo)
    if hi is not None:
        return Fraction(hi)
    return ZERO


def _violated_bound(value: Fraction, lo: Bound, hi: Bound) -> Optional[Fraction]:
    if lo is not None and value < lo:
        return lo
    if hi is not None and value > hi:
        return hi
    return None
