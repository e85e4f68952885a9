# polyvocab/legality.py
"""
The convex set of legal schedules.

:func:`build_layout` creates the schedule variables (θ per odd row and
iterator, a constant per odd row, β per even row) and one 0/1 satisfaction
variable per dependence and row. :func:`emit_legality` then asks, row by row,

    Θ^S_l(y) − Θ^R_l(x) ≥ δ_l − Σ_{c<l} δ_c·(K·Σn + K)

over every point of the dependence polyhedron, linearized with the affine
form of Farkas' lemma (:func:`farkas_certify`). Rows where an idiom needs to
know that a dependence is *not* carried also get the mirrored bound

    Θ^S_l(y) − Θ^R_l(x) ≤ Σ_{c≤l} δ_c·(K·Σn + K)
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import sympy

from .dependence import DependencePolyhedron, parameter_rows
from .exceptions import IlpModelError
from .ilp import (
    INTEGER,
    RATIONAL,
    Assignment,
    Change,
    ExprLike,
    IlpSystem,
    LeafCheck,
    LinExpr,
    Variable,
)
from .scop import Row, Schedule, Scop

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = (-1, 3)
DEFAULT_K = 10


@dataclass
class VarLayout:
    """Handles of every schedule and satisfaction variable of one system."""

    scop: Scop
    n_deps: int
    theta: Dict[Tuple[int, int, int], Variable] = field(default_factory=dict)
    shift: Dict[Tuple[int, int], Variable] = field(default_factory=dict)
    beta: Dict[Tuple[int, int], Variable] = field(default_factory=dict)
    delta: Dict[Tuple[int, int], Variable] = field(default_factory=dict)
    aux: Dict[str, Variable] = field(default_factory=dict)
    owners: Dict[str, str] = field(default_factory=dict)

    @property
    def rows(self) -> int:
        return self.scop.rows

    @property
    def linear_rows(self) -> List[int]:
        return list(range(1, self.rows, 2))

    @property
    def scalar_rows(self) -> List[int]:
        return list(range(0, self.rows, 2))

    def theta_row(self, sid: int, row: int) -> List[Variable]:
        return [self.theta[(sid, row, j)] for j in range(self.scop.statement(sid).dim)]

    def row_sum(self, sid: int, row: int) -> LinExpr:
        return IlpSystem.expr((1, v) for v in self.theta_row(sid, row))

    def deltas(self, dep: int) -> List[Variable]:
        return [self.delta[(dep, r)] for r in range(self.rows)]

    def add_aux(self, sys: IlpSystem, owner: str, name: str, kind: str = INTEGER,
                lo: Optional[int] = None, hi: Optional[int] = None) -> Variable:
        """Register an idiom-created variable; repeated names return the existing one."""
        if name in self.aux:
            return self.aux[name]
        var = sys.add_variable(name, kind, lo, hi)
        self.aux[name] = var
        self.owners[name] = owner
        return var

    def schedules(self, assignment: Assignment) -> List[Schedule]:
        out = []
        for s in self.scop.statements:
            linear, shifts, beta = [], [], []
            for r in range(self.rows):
                if r % 2 == 0:
                    beta.append(int(assignment[self.beta[(s.id, r)]]))
                else:
                    linear.append(tuple(int(assignment[v]) for v in self.theta_row(s.id, r)))
                    shifts.append(int(assignment[self.shift[(s.id, r)]]))
            out.append(Schedule(s.id, tuple(linear), tuple(shifts), tuple(beta)))
        return out


def build_layout(scop: Scop, deps: Sequence[DependencePolyhedron],
                 bounds: Tuple[int, int] = DEFAULT_WINDOW,
                 sys: Optional[IlpSystem] = None) -> Tuple[VarLayout, IlpSystem]:
    """
    Create θ, β and δ variables and the per-dependence exclusivity rows.

    Odd-row constants start pinned to zero; idioms that shift statements
    widen them.
    """
    lo, hi = bounds
    if lo > hi:
        raise IlpModelError(f"empty coefficient window {lo}:{hi}")
    sys = sys if sys is not None else IlpSystem(scop.name)
    layout = VarLayout(scop, len(deps))
    n_s = scop.n_statements
    for s in scop.statements:
        for r in range(scop.rows):
            if r % 2 == 0:
                layout.beta[(s.id, r)] = sys.add_variable(f"beta_S{s.id}_r{r}", INTEGER, 0, n_s)
                continue
            for j in range(s.dim):
                layout.theta[(s.id, r, j)] = sys.add_variable(f"theta_S{s.id}_r{r}_c{j}", INTEGER, lo, hi)
            layout.shift[(s.id, r)] = sys.add_variable(f"shift_S{s.id}_r{r}", INTEGER, 0, 0)
    for d in deps:
        for r in range(scop.rows):
            layout.delta[(d.index, r)] = sys.add_variable(f"delta_{d.name}_{r}", INTEGER, 0, 1)
        sys.add_constraint(IlpSystem.expr((1, v) for v in layout.deltas(d.index)), "==", 1,
                           label=f"{d.name}_satisfied_once")
    logger.debug("%s: layout with %d variables for %d dependences", scop.name,
                 len(sys.variables), len(deps))
    return layout, sys


@dataclass
class FarkasBlock:
    """Multipliers left free after elimination; ``slack`` is the constant multiplier λ0."""

    label: str
    multipliers: List[Variable]
    slack: LinExpr
    eliminated: int = 0


# An affine form ``expr + Σ_k lam[k]·λ_k`` over system variables and multipliers.
_Form = Tuple[LinExpr, Dict[int, Fraction]]


def _reduce(form: _Form, solved: Dict[int, _Form]) -> _Form:
    expr, lam = form[0].copy(), dict(form[1])
    for k in [k for k in lam if k in solved]:
        c = lam.pop(k)
        e, d = solved[k]
        expr = expr + e * c
        for j, v in d.items():
            s = lam.get(j, Fraction(0)) + c * v
            if s:
                lam[j] = s
            else:
                lam.pop(j, None)
    return expr, lam


def farkas_certify(sys: IlpSystem, expr: Sequence[ExprLike], inequalities: Iterable[Row],
                   equalities: Iterable[Row] = (), label: str = "farkas") -> FarkasBlock:
    """
    Constrain the affine form ``expr·(z, 1)`` to be nonnegative over a polyhedron.

    ``expr`` has one entry per polyhedron column plus the constant, each a
    constant or an expression over system variables. Equalities with a unit
    coefficient are substituted away first; the rest are split into two
    inequalities. Coefficients are matched against a nonnegative combination
    of the remaining rows, and every match equation that still involves a
    multiplier is solved for one of them, so only the free multipliers become
    system variables.
    """
    cols = [LinExpr.of(e).copy() for e in expr]
    width = len(cols)
    ineqs = [list(r) for r in inequalities]
    eqs = [list(r) for r in equalities]
    for row in ineqs + eqs:
        if len(row) != width:
            raise IlpModelError(f"{label}: relation row has {len(row)} entries, expected {width}")
    live = set(range(width - 1))

    while True:
        pick = None
        for ei, e in enumerate(eqs):
            c = next((c for c in range(width - 1) if abs(e[c]) == 1), None)
            if c is not None:
                pick = (ei, c)
                break
        if pick is None:
            break
        ei, c = pick
        e = eqs.pop(ei)
        a = e[c]
        for row in ineqs + eqs:
            f = row[c]
            if f:
                for j in range(width):
                    row[j] -= f * a * e[j]
        moved = cols[c]
        for j in range(width):
            if j != c and e[j]:
                cols[j] = cols[j] + moved * (-a * e[j])
        cols[c] = LinExpr()
        live.discard(c)

    rows: List[Tuple[int, ...]] = []
    seen: Set[Tuple[int, ...]] = set()
    for row in ineqs + eqs + [[-v for v in e] for e in eqs]:
        key = tuple(row)
        if not any(row[:-1]) and row[-1] >= 0:
            continue
        if key not in seen:
            seen.add(key)
            rows.append(key)

    # cols[c] − Σ_k rows[k][c]·λ_k == 0 for every live column
    solved: Dict[int, _Form] = {}
    leftovers: List[Tuple[int, LinExpr]] = []
    for c in sorted(live):
        expr_c, lam = _reduce((cols[c], {k: Fraction(-row[c]) for k, row in enumerate(rows) if row[c]}),
                              solved)
        if not lam:
            leftovers.append((c, expr_c))
            continue
        p = next((k for k in sorted(lam) if abs(lam[k]) == 1), min(lam))
        a = lam.pop(p)
        sol = (expr_c * (-1 / a), {k: -v / a for k, v in lam.items()})
        for q in list(solved):
            if p in solved[q][1]:
                solved[q] = _reduce(solved[q], {p: sol})
        solved[p] = sol

    free = {k: sys.add_variable(f"{label}_l{k}", RATIONAL, 0, None)
            for k in range(len(rows)) if k not in solved}

    def materialize(form: _Form) -> LinExpr:
        out = form[0].copy()
        for k in sorted(form[1]):
            out.add_term(form[1][k], free[k])
        return out

    for c, expr_c in leftovers:
        if expr_c.coeffs or expr_c.constant:
            sys.add_constraint(expr_c, "==", 0, label=f"{label}_c{c}")
    for k in sorted(solved):
        lam_k = materialize(solved[k])
        if lam_k.coeffs or lam_k.constant < 0:
            sys.add_constraint(lam_k, ">=", 0, label=f"{label}_l{k}")
    slack = materialize(_reduce((cols[-1], {k: Fraction(-row[-1]) for k, row in enumerate(rows) if row[-1]}),
                                solved))
    sys.add_constraint(slack, ">=", 0, label=f"{label}_const")
    return FarkasBlock(label, [free[k] for k in sorted(free)], slack, len(solved))


def _row_difference(layout: VarLayout, dep: DependencePolyhedron, row: int) -> List[LinExpr]:
    """Θ^S_row(y) − Θ^R_row(x) as columns over (x, y, params, 1)."""
    nr, ns, np_ = dep.n_source, dep.n_target, dep.n_params
    cols = [LinExpr() for _ in range(nr + ns + np_ + 1)]
    if row % 2 == 0:
        cols[-1] = LinExpr.of(layout.beta[(dep.target, row)]) - layout.beta[(dep.source, row)]
        return cols
    for j, v in enumerate(layout.theta_row(dep.source, row)):
        cols[j] = -LinExpr.of(v)
    for j, v in enumerate(layout.theta_row(dep.target, row)):
        cols[nr + j] = LinExpr.of(v)
    cols[-1] = LinExpr.of(layout.shift[(dep.target, row)]) - layout.shift[(dep.source, row)]
    return cols


def emit_legality(dep: DependencePolyhedron, layout: VarLayout, sys: IlpSystem, k: int = DEFAULT_K,
                  exact_rows: Iterable[int] = ()) -> List[FarkasBlock]:
    """Lower (and requested upper) Farkas blocks of ``dep`` for every schedule row."""
    scop = layout.scop
    if (dep.n_source, dep.n_target) != (scop.statement(dep.source).dim, scop.statement(dep.target).dim):
        raise IlpModelError(f"{dep.name}: relation columns do not match the statements")
    exact = set(exact_rows)
    np_ = dep.n_params
    param_only = parameter_rows(scop, np_ + 1)
    blocks = []
    deltas = layout.deltas(dep.index)
    for row in range(scop.rows):
        diff = _row_difference(layout, dep, row)
        relax = IlpSystem.expr((k, d) for d in deltas[:row])
        lower = [c.copy() for c in diff]
        for p in range(np_):
            lower[-1 - np_ + p] = lower[-1 - np_ + p] + relax
        lower[-1] = lower[-1] + relax - deltas[row]
        if row % 2 == 0:
            blocks.append(farkas_certify(sys, lower[-1 - np_:], param_only,
                                         label=f"{dep.name}_r{row}"))
        else:
            blocks.append(farkas_certify(sys, lower, dep.inequalities, dep.equalities,
                                         label=f"{dep.name}_r{row}"))
        if row not in exact:
            continue
        relax_upto = relax + deltas[row] * k
        upper = [-c for c in diff]
        for p in range(np_):
            upper[-1 - np_ + p] = upper[-1 - np_ + p] + relax_upto
        upper[-1] = upper[-1] + relax_upto
        if row % 2 == 0:
            blocks.append(farkas_certify(sys, upper[-1 - np_:], param_only,
                                         label=f"{dep.name}_r{row}_exact"))
        else:
            blocks.append(farkas_certify(sys, upper, dep.inequalities, dep.equalities,
                                         label=f"{dep.name}_r{row}_exact"))
    return blocks


class LegalSpace:
    """A layout, its system and the rows idioms asked to be exact."""

    def __init__(self, scop: Scop, deps: Sequence[DependencePolyhedron],
                 window: Tuple[int, int] = DEFAULT_WINDOW, k: int = DEFAULT_K):
        self.scop = scop
        self.deps = list(deps)
        self.k = k
        self.window = window
        self.layout, self.sys = build_layout(scop, self.deps, window)
        self.exact: Set[Tuple[int, int]] = set()
        self.blocks: List[FarkasBlock] = []
        self.emitted = False

    def request_exact(self, dep: DependencePolyhedron, row: int) -> None:
        if self.emitted:
            raise IlpModelError("exactness requested after legality was emitted")
        self.exact.add((dep.index, row))

    def emit(self) -> None:
        if self.emitted:
            return
        for dep in self.deps:
            rows = sorted(r for d, r in self.exact if d == dep.index)
            self.blocks.extend(emit_legality(dep, self.layout, self.sys, self.k, rows))
        self.emitted = True
        logger.info("%s: legality emitted, %d Farkas blocks (%d multipliers eliminated), "
                    "%d variables, %d constraints",
                    self.scop.name, len(self.blocks), sum(b.eliminated for b in self.blocks),
                    len(self.sys.variables), len(self.sys.constraints))

    def pin(self, schedules: Sequence[Schedule]) -> None:
        """Fix θ, constants and β to the given schedules."""
        pin_schedules(self.layout, self.sys, schedules)

    def injectivity_check(self) -> LeafCheck:
        return injectivity_check(self.layout)


def pin_schedules(layout: VarLayout, sys: IlpSystem, schedules: Sequence[Schedule]) -> None:
    for sched in schedules:
        for r in range(layout.rows):
            coeffs, const = sched.row(r)
            if r % 2 == 0:
                sys.set_bounds(layout.beta[(sched.statement, r)], const, const)
                continue
            for j, v in enumerate(layout.theta_row(sched.statement, r)):
                sys.set_bounds(v, coeffs[j], coeffs[j])
            sys.set_bounds(layout.shift[(sched.statement, r)], const, const)


def _integer_kernel_vector(matrix: sympy.Matrix) -> List[int]:
    kernel = list(matrix.nullspace()[0])
    scale = 1
    for entry in kernel:
        q = int(sympy.Rational(entry).q)
        scale = scale * q // math.gcd(scale, q)
    return [int(sympy.Rational(entry) * scale) for entry in kernel]


def injectivity_check(layout: VarLayout) -> LeafCheck:
    """
    Leaf callback rejecting points whose linear part is rank deficient.

    A singular statement with kernel vector ``v`` is split into children that
    each require one odd row to satisfy ``θ_r·v ≥ 1`` or ``θ_r·v ≤ −1``.
    """
    scop = layout.scop

    def check(point: Assignment) -> Optional[List[List[Change]]]:
        for s in scop.statements:
            rows = [[int(point.values[v.index]) for v in layout.theta_row(s.id, r)]
                    for r in layout.linear_rows]
            matrix = sympy.Matrix(rows)
            if matrix.rank() == s.dim:
                continue
            vec = _integer_kernel_vector(matrix)
            logger.debug("S%d singular at leaf, kernel %s", s.id, vec)
            children: List[List[Change]] = []
            for r in layout.linear_rows:
                coeffs = {v.index: Fraction(c) for v, c in zip(layout.theta_row(s.id, r), vec) if c}
                children.append([(coeffs, Fraction(1), None)])
                children.append([(coeffs, None, Fraction(-1))])
            return children
        return None

    return check


def schedule_rank(schedule: Schedule) -> int:
    return sympy.Matrix([list(row) for row in schedule.linear]).rank()
