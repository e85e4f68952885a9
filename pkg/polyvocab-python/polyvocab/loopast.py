# polyvocab/loopast.py
"""
Loop trees recovered from 2d+1 schedules.

Scalar rows split statements into ordered groups; linear rows become loops
for the statements whose schedule gains rank there. Loop flags are decided
on explicit instances at a fixed parameter value.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

import sympy

from .scop import AccessFunction, Schedule, Scop, first_divergence
from .verifier import ParamSpec, dependent_pairs, enumerate_instances, resolve_params

logger = logging.getLogger(__name__)


@dataclass
class StatementLeaf:
    statement: int
    accesses: Tuple[AccessFunction, ...]
    unimodular: bool


@dataclass
class LoopNode:
    row: int
    name: str
    children: List["Node"] = field(default_factory=list)
    parallel: bool = False
    permutable: bool = False
    constant_bounds: bool = False

    def statements(self) -> List[int]:
        return sorted(leaf.statement for leaf in iter_leaves(self))

    def loops(self) -> Iterator["LoopNode"]:
        """This loop and every loop below it, outermost first."""
        yield self
        for child in self.children:
            if isinstance(child, LoopNode):
                yield from child.loops()


Node = Union[LoopNode, StatementLeaf]


def iter_leaves(node: Node) -> Iterator[StatementLeaf]:
    if isinstance(node, StatementLeaf):
        yield node
        return
    for child in node.children:
        yield from iter_leaves(child)


@dataclass
class LoopAst:
    scop: Scop
    roots: List[Node]

    def nests(self) -> List[LoopNode]:
        return [n for n in self.roots if isinstance(n, LoopNode)]

    def leaves(self) -> List[StatementLeaf]:
        return [leaf for root in self.roots for leaf in iter_leaves(root)]

    def render(self) -> str:
        out: List[str] = []

        def walk(node: Node, indent: int) -> None:
            pad = "  " * indent
            if isinstance(node, StatementLeaf):
                label = self.scop.statement(node.statement).label
                out.append(f"{pad}{label}{'' if node.unimodular else '  # non-unimodular'}")
                return
            flags = [f for f, on in (("parallel", node.parallel), ("permutable", node.permutable),
                                     ("const", node.constant_bounds)) if on]
            out.append(f"{pad}for {node.name}  # row {node.row}{' ' + ' '.join(flags) if flags else ''}")
            for child in node.children:
                walk(child, indent + 1)

        for root in self.roots:
            walk(root, 0)
        return "\n".join(out)


def loop_rows(schedule: Schedule) -> List[int]:
    """Odd rows that raise the rank of the linear part, outermost first."""
    rows: List[List[int]] = []
    picked = []
    rank = 0
    for k, coeffs in enumerate(schedule.linear):
        trial = rows + [list(coeffs)]
        r = sympy.Matrix(trial).rank() if any(coeffs) else rank
        if r > rank:
            rows, rank = trial, r
            picked.append(2 * k + 1)
    return picked


def transform_accesses(schedule: Schedule, rows: Sequence[int],
                       accesses: Sequence[AccessFunction]) -> Optional[Tuple[AccessFunction, ...]]:
    """
    Accesses over the new loop iterators, or ``None`` when the loop matrix is not unimodular.

    With ``c = T·x + t`` the access ``F·x + o`` becomes ``F·T⁻¹·c + o − F·T⁻¹·t``.
    """
    if not rows:
        return tuple(accesses)
    t = sympy.Matrix([list(schedule.linear[r // 2]) for r in rows])
    if t.rows != t.cols or abs(t.det()) != 1:
        return None
    inv = t.inv()
    shift = sympy.Matrix([schedule.shifts[r // 2] for r in rows])
    out = []
    for a in accesses:
        f = sympy.Matrix([list(row) for row in a.matrix])
        g = f * inv
        off = sympy.Matrix(list(a.offsets)) - g * shift
        out.append(AccessFunction(
            a.array, a.kind,
            tuple(tuple(int(v) for v in g.row(i)) for i in range(g.rows)),
            tuple(int(v) for v in off),
            a.param_part,
        ))
    return tuple(out)


@dataclass
class _PairStamps:
    source: int
    target: int
    before: Tuple[int, ...]
    after: Tuple[int, ...]


def _loop_name(scop: Scop, schedules: Dict[int, Schedule], sids: Sequence[int], row: int) -> str:
    names = set()
    for sid in sids:
        coeffs = schedules[sid].linear[row // 2]
        if sum(1 for c in coeffs if c) != 1 or max(coeffs) != 1:
            return f"c{row}"
        names.add(scop.statement(sid).iterators[coeffs.index(1)])
    return names.pop() if len(names) == 1 else f"c{row}"


def build_loop_ast(scop: Scop, schedules: Sequence[Schedule], params: ParamSpec = 8,
                   cap: int = 10**6) -> LoopAst:
    """Loop tree of ``schedules`` with flags decided at ``params``."""
    by_sid = {s.statement: s for s in schedules}
    rows_of = {sid: set(loop_rows(s)) for sid, s in by_sid.items()}

    def build(sids: List[int], row: int) -> List[Node]:
        if not sids:
            return []
        if row >= scop.rows:
            out: List[Node] = []
            for sid in sorted(sids):
                picked = sorted(rows_of[sid])
                moved = transform_accesses(by_sid[sid], picked, scop.statement(sid).accesses)
                out.append(StatementLeaf(sid, moved if moved is not None else scop.statement(sid).accesses,
                                         moved is not None))
            return out
        if row % 2 == 0:
            groups: Dict[int, List[int]] = defaultdict(list)
            for sid in sids:
                groups[by_sid[sid].beta[row // 2]].append(sid)
            nodes: List[Node] = []
            for b in sorted(groups):
                nodes.extend(build(groups[b], row + 1))
            return nodes
        loopers = [s for s in sids if row in rows_of[s]]
        rest = [s for s in sids if row not in rows_of[s]]
        nodes = build(rest, row + 1)
        if loopers:
            loop = LoopNode(row, _loop_name(scop, by_sid, loopers, row), build(loopers, row + 1))
            nodes.append(loop)
        return nodes

    ast = LoopAst(scop, build(sorted(by_sid), 0))
    _mark(ast, by_sid, params, cap)
    return ast


def _mark(ast: LoopAst, by_sid: Dict[int, Schedule], params: ParamSpec, cap: int) -> None:
    scop = ast.scop
    values = resolve_params(scop, params)
    ps = dependent_pairs(scop, values, False, cap)
    stamps = [by_sid[sid].timestamp(point) for sid, point in ps.instances]
    pairs = [_PairStamps(ps.instances[p.source][0], ps.instances[p.target][0],
                         stamps[p.source], stamps[p.target]) for p in ps.pairs]
    by_stmt: Dict[int, List[Tuple[int, ...]]] = defaultdict(list)
    for sid, point in enumerate_instances(scop, values, cap):
        by_stmt[sid].append(by_sid[sid].timestamp(point))

    for nest in ast.nests():
        for loop in nest.loops():
            members: Set[int] = set(loop.statements())
            inside = [p for p in pairs if p.source in members and p.target in members]
            loop.parallel = not any(first_divergence(p.before, p.after) == loop.row for p in inside)
            band = [p for p in inside if first_divergence(p.before, p.after) >= nest.row]
            loop.permutable = all(p.after[loop.row] - p.before[loop.row] >= 0 for p in band)
            loop.constant_bounds = _constant_width(members, loop.row, by_stmt)
            logger.debug("loop %s row %d: parallel=%s permutable=%s const=%s", loop.name, loop.row,
                         loop.parallel, loop.permutable, loop.constant_bounds)


def _constant_width(members: Set[int], row: int, by_stmt: Dict[int, List[Tuple[int, ...]]]) -> bool:
    spans: Dict[Tuple[int, ...], List[int]] = {}
    for sid in members:
        for ts in by_stmt.get(sid, []):
            key = ts[:row]
            lo_hi = spans.setdefault(key, [ts[row], ts[row]])
            lo_hi[0] = min(lo_hi[0], ts[row])
            lo_hi[1] = max(lo_hi[1], ts[row])
    widths = {hi - lo for lo, hi in spans.values()}
    return len(widths) <= 1
