# polyvocab/ilp.py
"""
Exact mixed-integer programs with a lexicographic objective stack.

Example:
    >>> sys = IlpSystem("demo")
    >>> x = sys.add_variable("x", "integer", 0, 2)
    >>> y = sys.add_variable("y", "integer", 0, 2)
    >>> sys.add_constraint(x + y, ">=", 1)
    >>> sys.push_objective(x, "min", "trailing")
    >>> sys.push_objective(y, "max", "trailing")
    >>> sys.solve_lex()[y]
    2
"""

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .exceptions import IlpModelError, InfeasibleError, SolverContractError, SolverTimeout
from .simplex import INFEASIBLE, OPTIMAL, STALLED, UNBOUNDED, LinearProgram

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]
BoundChange = Tuple[int, Optional[Fraction], Optional[Fraction]]
RowChange = Tuple[Dict[int, Fraction], Optional[Fraction], Optional[Fraction]]
Change = Union[BoundChange, RowChange]
# Called on integral points: None accepts, otherwise the list of child nodes to explore.
LeafCheck = Callable[["Assignment"], Optional[List[List[Change]]]]

INTEGER = "integer"
RATIONAL = "rational"
RELATIONS = (">=", "<=", "==")


class LinExpr:
    """Sparse affine expression over system variables."""

    __slots__ = ("coeffs", "constant")

    def __init__(self, coeffs: Optional[Dict[int, Fraction]] = None, constant: Number = 0):
        self.coeffs: Dict[int, Fraction] = coeffs or {}
        self.constant = Fraction(constant)

    @staticmethod
    def of(value: "ExprLike") -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Variable):
            return LinExpr({value.index: Fraction(1)})
        return LinExpr({}, value)

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.coeffs), self.constant)

    def add_term(self, coef: Number, var: "Variable") -> "LinExpr":
        """In-place ``self += coef·var``; returns ``self``."""
        if coef:
            v = self.coeffs.get(var.index, Fraction(0)) + coef
            if v:
                self.coeffs[var.index] = v
            else:
                self.coeffs.pop(var.index, None)
        return self

    def __add__(self, other: "ExprLike") -> "LinExpr":
        o = LinExpr.of(other)
        out = self.copy()
        for k, v in o.coeffs.items():
            s = out.coeffs.get(k, Fraction(0)) + v
            if s:
                out.coeffs[k] = s
            else:
                out.coeffs.pop(k, None)
        out.constant += o.constant
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({k: -v for k, v in self.coeffs.items()}, -self.constant)

    def __sub__(self, other: "ExprLike") -> "LinExpr":
        return self + (-LinExpr.of(other))

    def __rsub__(self, other: "ExprLike") -> "LinExpr":
        return LinExpr.of(other) - self

    def __mul__(self, scalar: Number) -> "LinExpr":
        if scalar == 0:
            return LinExpr()
        return LinExpr({k: v * scalar for k, v in self.coeffs.items()}, self.constant * scalar)

    __rmul__ = __mul__

    def is_constant(self) -> bool:
        return not self.coeffs

    def value(self, values: Dict[int, Fraction]) -> Fraction:
        return self.constant + sum((v * values[k] for k, v in self.coeffs.items()), Fraction(0))


@dataclass(frozen=True)
class Variable:
    index: int
    name: str

    def __add__(self, other: "ExprLike") -> LinExpr:
        return LinExpr.of(self) + other

    __radd__ = __add__

    def __sub__(self, other: "ExprLike") -> LinExpr:
        return LinExpr.of(self) - other

    def __rsub__(self, other: "ExprLike") -> LinExpr:
        return LinExpr.of(other) - LinExpr.of(self)

    def __neg__(self) -> LinExpr:
        return -LinExpr.of(self)

    def __mul__(self, scalar: Number) -> LinExpr:
        return LinExpr.of(self) * scalar

    __rmul__ = __mul__


ExprLike = Union[LinExpr, Variable, int, Fraction]


@dataclass
class VarInfo:
    name: str
    kind: str
    lo: Optional[Fraction]
    hi: Optional[Fraction]


@dataclass
class Constraint:
    expr: LinExpr
    relation: str
    rhs: Fraction
    label: str = ""


@dataclass
class Objective:
    expr: LinExpr
    sense: str
    label: str = ""


@dataclass
class Assignment:
    """Solved values, indexed by :class:`Variable` or by name."""

    values: Dict[int, Fraction]
    names: Dict[str, int]
    objective_values: List[Fraction] = field(default_factory=list)
    timed_out: bool = False
    nodes: int = 0

    def __getitem__(self, key: Union[Variable, str, int]) -> Union[int, Fraction]:
        if isinstance(key, Variable):
            idx = key.index
        elif isinstance(key, str):
            idx = self.names[key]
        else:
            idx = key
        v = self.values[idx]
        return int(v) if v.denominator == 1 else v

    def value_of(self, expr: ExprLike) -> Fraction:
        return LinExpr.of(expr).value(self.values)


def _frac(value: Optional[Number]) -> Optional[Fraction]:
    if value is None:
        return None
    if isinstance(value, float):
        if math.isinf(value):
            return None
        return Fraction(value).limit_denominator()
    return Fraction(value)


class IlpSystem:
    """
    Variables, linear constraints and an ordered objective stack.

    Integer variables must be bounded on both sides; rational ones may use
    ``None`` (or ``float('inf')``) for a missing bound.
    """

    def __init__(self, name: str = "system"):
        self.name = name
        self.variables: List[VarInfo] = []
        self.names: Dict[str, int] = {}
        self.constraints: List[Constraint] = []
        self.objectives: List[Objective] = []
        self.assignment: Optional[Assignment] = None

    # -- model building -------------------------------------------------------

    def add_variable(self, name: str, kind: str = INTEGER, lo: Optional[Number] = None,
                     hi: Optional[Number] = None) -> Variable:
        if name in self.names:
            raise IlpModelError(f"duplicate variable {name!r}", variable=name)
        if kind not in (INTEGER, RATIONAL):
            raise IlpModelError(f"unknown variable kind {kind!r}", variable=name)
        flo, fhi = _frac(lo), _frac(hi)
        if kind == INTEGER and (flo is None or fhi is None):
            raise IlpModelError(f"integer variable {name!r} needs finite bounds", variable=name)
        if flo is not None and fhi is not None and flo > fhi:
            raise IlpModelError(f"variable {name!r} has empty bounds [{lo}, {hi}]", variable=name)
        self.variables.append(VarInfo(name, kind, flo, fhi))
        self.names[name] = len(self.variables) - 1
        return Variable(len(self.variables) - 1, name)

    def var(self, name: str) -> Variable:
        try:
            return Variable(self.names[name], name)
        except KeyError:
            raise IlpModelError(f"unknown variable {name!r}", variable=name)

    def has_var(self, name: str) -> bool:
        return name in self.names

    def set_bounds(self, var: Variable, lo: Optional[Number], hi: Optional[Number]) -> None:
        info = self.variables[var.index]
        info.lo, info.hi = _frac(lo), _frac(hi)
        if info.kind == INTEGER and (info.lo is None or info.hi is None):
            raise IlpModelError(f"integer variable {info.name!r} needs finite bounds")

    def bounds(self, var: Variable) -> Tuple[Optional[Fraction], Optional[Fraction]]:
        info = self.variables[var.index]
        return info.lo, info.hi

    @staticmethod
    def expr(terms: Iterable[Tuple[Number, Variable]], constant: Number = 0) -> LinExpr:
        out = LinExpr({}, constant)
        for coef, var in terms:
            out.add_term(coef, var)
        return out

    def _check_expr(self, expr: LinExpr) -> None:
        for k in expr.coeffs:
            if k < 0 or k >= len(self.variables):
                raise IlpModelError(f"expression references unknown variable #{k}")

    def add_constraint(self, lhs: ExprLike, relation: str, rhs: ExprLike = 0, label: str = "") -> None:
        """Add ``lhs (relation) rhs`` with relation in ``>=``, ``<=``, ``==``."""
        if relation not in RELATIONS:
            raise IlpModelError(f"unknown relation {relation!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        self._check_expr(expr)
        self.constraints.append(Constraint(LinExpr(expr.coeffs), relation, -expr.constant, label))

    def push_objective(self, expr: ExprLike, sense: str = "min", position: str = "trailing",
                       label: str = "") -> None:
        """Insert an objective at the front (``leading``) or back (``trailing``)."""
        if sense not in ("min", "max"):
            raise IlpModelError(f"objective sense must be min or max, got {sense!r}")
        e = LinExpr.of(expr)
        self._check_expr(e)
        obj = Objective(e, sense, label)
        if position == "leading":
            self.objectives.insert(0, obj)
        elif position == "trailing":
            self.objectives.append(obj)
        else:
            raise IlpModelError(f"objective position must be leading or trailing, got {position!r}")

    # -- solving --------------------------------------------------------------

    def _lp_rows(self) -> List[Tuple[Dict[int, Fraction], Optional[Fraction], Optional[Fraction]]]:
        rows = []
        for c in self.constraints:
            if not c.expr.coeffs:
                holds = {">=": 0 >= c.rhs, "<=": 0 <= c.rhs, "==": c.rhs == 0}[c.relation]
                if not holds:
                    rows.append(({}, Fraction(1), Fraction(1)))
                continue
            lo = c.rhs if c.relation in (">=", "==") else None
            hi = c.rhs if c.relation in ("<=", "==") else None
            rows.append((dict(c.expr.coeffs), lo, hi))
        return rows

    def solve_lex(self, time_budget: Optional[float] = None,
                  leaf_check: Optional[LeafCheck] = None) -> Assignment:
        """
        Optimize the objectives in stack order, pinning each optimum.

        ``time_budget`` is in seconds per objective level; the root relaxation
        and a depth-first dive to the first integral point get one budget of
        their own. A level that runs out keeps the best integer solution found
        so far, pins its objective there and sets ``timed_out``. Only a system
        with no integral point within the first budget raises
        :class:`SolverTimeout`.
        """
        solver = _LexSolver(self, time_budget, leaf_check)
        self.assignment = solver.run()
        return self.assignment

    def check_feasible(self, leaf_check: Optional[LeafCheck] = None) -> Tuple[bool, Optional[Assignment]]:
        """Exact integer feasibility; returns the witness when there is one."""
        solver = _LexSolver(self, None, leaf_check)
        try:
            witness = solver.run(feasibility_only=True)
        except InfeasibleError:
            return False, None
        return True, witness

    def format_expr(self, expr: LinExpr) -> str:
        parts = []
        for k in sorted(expr.coeffs):
            c = expr.coeffs[k]
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            coef = "" if mag == 1 else f"{mag} "
            parts.append(f"{sign} {coef}{self.variables[k].name}")
        text = " ".join(parts) if parts else "0"
        return text[2:] if text.startswith("+ ") else text

    def format_constraint(self, c: Constraint) -> str:
        rel = {"==": "="}.get(c.relation, c.relation)
        return f"{self.format_expr(c.expr)} {rel} {c.rhs}"

    def dump_lp(self) -> str:
        """Deterministic LP-format text of the system."""
        fmt = self.format_expr

        out = [f"\\ {self.name}"]
        for n, obj in enumerate(self.objectives):
            tag = obj.label or f"obj{n}"
            out.append(f"{'minimize' if obj.sense == 'min' else 'maximize'} {tag}: {fmt(obj.expr)}")
        out.append("subject to")
        for n, c in enumerate(self.constraints):
            rel = {"==": "="}.get(c.relation, c.relation)
            out.append(f" c{n}{(' ' + c.label) if c.label else ''}: {fmt(c.expr)} {rel} {c.rhs}")
        out.append("bounds")
        for v in self.variables:
            lo = "-inf" if v.lo is None else str(v.lo)
            hi = "+inf" if v.hi is None else str(v.hi)
            out.append(f" {lo} <= {v.name} <= {hi}")
        ints = [v.name for v in self.variables if v.kind == INTEGER]
        if ints:
            out.append("general")
            out.append(" " + " ".join(ints))
        out.append("end")
        return "\n".join(out) + "\n"


class _LexSolver:
    """Sequential solve-and-pin over the objective stack."""

    def __init__(self, sys: IlpSystem, time_budget: Optional[float], leaf_check: Optional[LeafCheck]):
        self.sys = sys
        self.time_budget = time_budget
        self.leaf_check = leaf_check
        self.integers = [k for k, v in enumerate(sys.variables) if v.kind == INTEGER]
        self.integer_set = set(self.integers)
        self.rows = sys._lp_rows()
        self.nodes = 0

    def _deadline(self) -> Optional[float]:
        return None if self.time_budget is None else time.monotonic() + self.time_budget

    def _fresh(self, lower: Sequence[Optional[Fraction]], upper: Sequence[Optional[Fraction]],
               extra_rows: Sequence[Tuple[Dict[int, Fraction], Optional[Fraction], Optional[Fraction]]],
               costs: Dict[int, Fraction], deadline: Optional[float] = None) -> Optional[LinearProgram]:
        lp = LinearProgram.from_rows(lower, upper, list(self.rows) + list(extra_rows), deadline)
        if lp is None:
            return None
        lp.set_objective(costs)
        status = lp.primal()
        if status == UNBOUNDED:
            raise SolverContractError("objective is unbounded", system=self.sys.name)
        return lp

    def _prepare(self, root: Optional[LinearProgram], costs: Dict[int, Fraction],
                 pin: Optional[RowChange], pins: List[RowChange], lower, upper,
                 deadline: Optional[float], label: str) -> LinearProgram:
        """The root relaxation, pinned and optimal for ``costs``."""
        if root is not None:
            root.deadline = deadline
            if pin is not None:
                root.add_row(*pin)
                if root.dual() != OPTIMAL:
                    root = None
        if root is None:
            root = self._fresh(lower, upper, pins, costs, deadline)
            if root is None:
                raise SolverContractError("pinned system lost feasibility", level=label)
            return root
        root.set_objective(costs)
        if root.primal() == UNBOUNDED:
            raise SolverContractError("objective is unbounded", system=self.sys.name, level=label)
        return root

    def run(self, feasibility_only: bool = False) -> Assignment:
        sys = self.sys
        n = len(sys.variables)
        lower = [v.lo for v in sys.variables]
        upper = [v.hi for v in sys.variables]
        objectives = [] if feasibility_only else list(sys.objectives)
        levels: List[Tuple[Dict[int, Fraction], str]] = []
        for idx, obj in enumerate(objectives):
            sign = 1 if obj.sense == "min" else -1
            levels.append(({k: sign * v for k, v in obj.expr.coeffs.items()}, obj.label or f"objective {idx}"))
        if not levels:
            levels.append(({}, "feasibility"))

        # the root relaxation and the first integral leaf share one budget
        started = time.monotonic()
        deadline = self._deadline()
        first_costs, first_label = levels[0]
        try:
            root: Optional[LinearProgram] = self._fresh(lower, upper, [], first_costs, deadline)
        except SolverTimeout:
            raise SolverTimeout(f"system {sys.name!r}: no relaxed solution within the time budget", level="base")
        if root is None:
            raise InfeasibleError(f"system {sys.name!r} is infeasible", level="base")
        incumbent, _, hit_deadline = self._branch_and_bound(
            root, first_costs, None, deadline, stop_at_first=True, lower=lower, upper=upper, pins=[],
        )
        if incumbent is None:
            if hit_deadline:
                raise SolverTimeout(f"no integer solution within the time budget at {first_label}",
                                    level=first_label)
            raise InfeasibleError(f"no integer solution at {first_label}", level=first_label)
        logger.debug("first integral point after %d nodes in %.2fs", self.nodes, time.monotonic() - started)
        if feasibility_only:
            return Assignment({k: incumbent[k] for k in range(n)}, dict(sys.names), [], False, self.nodes)

        pins: List[RowChange] = []
        pin: Optional[RowChange] = None
        values_out: List[Fraction] = []
        timed_out = False

        for level, (costs, label) in enumerate(levels):
            started = time.monotonic()
            deadline = self._deadline()
            best = incumbent
            best_value = sum((v * incumbent[k] for k, v in costs.items()), Fraction(0))
            hit_deadline = False
            try:
                if level > 0:
                    root = self._prepare(root, costs, pin, pins, lower, upper, deadline, label)
                best, best_value, hit_deadline = self._branch_and_bound(
                    root, costs, incumbent, deadline, stop_at_first=False,
                    lower=lower, upper=upper, pins=pins,
                )
            except SolverTimeout:
                # the relaxation is half-updated; rebuild it under the next budget
                root = None
                hit_deadline = True
            timed_out = timed_out or hit_deadline
            incumbent = best
            sign = 1 if objectives[level].sense == "min" else -1
            values_out.append(sign * best_value)
            logger.info("level %d (%s): optimum %s after %d nodes in %.2fs%s", level, label,
                        sign * best_value, self.nodes, time.monotonic() - started,
                        " [time budget hit]" if hit_deadline else "")
            pin = None
            if level + 1 < len(levels) and costs:
                pin = (dict(costs), best_value, best_value)
                pins.append(pin)

        values = {k: incumbent[k] for k in range(n)}
        return Assignment(values, dict(sys.names), values_out, timed_out, self.nodes)

    def _branch_and_bound(self, root: LinearProgram, costs: Dict[int, Fraction],
                          seed: Optional[Dict[int, Fraction]], deadline: Optional[float],
                          stop_at_first: bool, lower, upper, pins):
        integral_objective = all(
            v.denominator == 1 and k in self.integer_set for k, v in costs.items()
        )
        best: Optional[Dict[int, Fraction]] = None
        best_value: Optional[Fraction] = None
        if seed is not None:
            best = seed
            best_value = sum((v * seed[k] for k, v in costs.items()), Fraction(0))
            logger.debug("seeded incumbent %s", best_value)

        lp = root
        lp.deadline = deadline
        root_snap = lp.snapshot()
        # (parent snapshot, changes of this node, cut rows accumulated on the path)
        stack: List[Tuple[tuple, List[Change], List[RowChange]]] = [(root_snap, [], [])]
        hit_deadline = False
        while stack:
            if deadline is not None and time.monotonic() > deadline:
                hit_deadline = True
                break
            snap, changes, path_rows = stack.pop()
            lp.restore(snap)
            self.nodes += 1
            ok = True
            for change in changes:
                if isinstance(change[0], dict):
                    lp.add_row(*change)
                elif not lp.tighten(*change):
                    ok = False
                    break
            if not ok:
                continue
            try:
                if changes:
                    status = lp.dual()
                    if status == STALLED:
                        rebuilt = self._fresh(lp.lower[: len(lower)], lp.upper[: len(upper)],
                                              list(pins) + path_rows, costs, deadline)
                        if rebuilt is None:
                            continue
                        lp = rebuilt
                        status = OPTIMAL
                    if status == INFEASIBLE:
                        continue
            except SolverTimeout:
                hit_deadline = True
                break
            bound = lp.objective_value()
            if best_value is not None:
                limit = math.ceil(bound) if integral_objective else bound
                if limit >= best_value:
                    continue
            vals = lp.structural_values()
            frac = next((j for j in self.integers if vals[j].denominator != 1), None)
            here = lp.snapshot()
            if frac is None:
                if self.leaf_check is not None:
                    point = Assignment({k: vals[k] for k in range(len(vals))}, self.sys.names)
                    children = self.leaf_check(point)
                    if children is not None:
                        for child in reversed(children):
                            cuts = [c for c in child if isinstance(c[0], dict)]
                            stack.append((here, child, path_rows + cuts))
                        continue
                best = {k: vals[k] for k in range(len(vals))}
                best_value = bound
                logger.debug("incumbent %s at node %d", bound, self.nodes)
                if stop_at_first:
                    break
                continue
            v = vals[frac]
            down = Fraction(math.floor(v))
            stack.append((here, [(frac, down + 1, None)], path_rows))
            stack.append((here, [(frac, None, down)], path_rows))
        root.restore(root_snap)
        return best, best_value, hit_deadline


def solve_lex(sys: IlpSystem, time_budget: Optional[float] = None,
              leaf_check: Optional[LeafCheck] = None) -> Assignment:
    return sys.solve_lex(time_budget, leaf_check)


def check_feasible(sys: IlpSystem) -> Tuple[bool, Optional[Assignment]]:
    return sys.check_feasible()
