# polyvocab/rcou.py
"""
Resource-constrained unroll-and-jam.

For every outermost loop nest of the recovered loop tree, each unrollable
loop may take a factor in {1, 2, 4, 8, 16}. Every factor tuple is scored
exhaustively: unrolling an outer loop earns reuse credit for the references
that do not move with it, unrolling the innermost loop pays for the streams
it multiplies, and tuples whose replicated references do not fit the vector
register file are rejected.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .loopast import LoopAst, LoopNode, StatementLeaf, build_loop_ast, iter_leaves
from .scop import AccessFunction, Schedule, Scop

logger = logging.getLogger(__name__)

UNROLL_FACTORS = (1, 2, 4, 8, 16)
REUSE_WEIGHT = 3


@dataclass(frozen=True)
class RcouMatrices:
    """Per-loop metrics of one statement, indexed by its enclosing loops outermost first."""

    resource: Tuple[int, ...]
    reuse: Tuple[int, ...]
    write: Tuple[int, ...]


def build_matrices(accesses: Sequence[AccessFunction], n_loops: int) -> RcouMatrices:
    resource = [0] * n_loops
    reuse = [0] * n_loops
    write = [0] * n_loops
    for a in accesses:
        for j in range(n_loops):
            resource[j] += sum(abs(row[j]) for row in a.matrix)
            reuse[j] += abs(a.matrix[-1][j])
            if a.is_write and any(row[j] for row in a.matrix):
                write[j] = 1
    return RcouMatrices(tuple(resource), tuple(reuse), tuple(write))


@dataclass
class _Member:
    """A statement of a nest with the nest-loop index of each of its loops."""

    leaf: StatementLeaf
    loops: List[int]
    matrices: RcouMatrices


@dataclass
class NestSpace:
    """Everything the scorer needs for one nest."""

    loops: List[LoopNode]
    depth: List[int]
    choices: List[Tuple[int, ...]]
    members: List[_Member]
    n_vec_reg: int
    note: str = ""

    @property
    def max_depth(self) -> int:
        return max(self.depth) if self.depth else 0


@dataclass
class UnrollFactors:
    nest: int
    loops: List[Tuple[str, int]]
    factors: Tuple[int, ...]
    score: float
    resource: int
    note: str = ""
    explored: int = 0

    @property
    def product(self) -> int:
        return math.prod(self.factors)

    def as_dict(self) -> Dict[str, object]:
        return {
            "nest": self.nest,
            "loops": [{"loop": name, "row": row, "factor": f}
                      for (name, row), f in zip(self.loops, self.factors)],
            "product": self.product,
            "score": self.score,
            "resource": self.resource,
            "explored": self.explored,
            "note": self.note,
        }


def _path_loops(node: LoopNode, target: StatementLeaf, path: List[LoopNode]) -> Optional[List[LoopNode]]:
    path = path + [node]
    for child in node.children:
        if child is target:
            return path
        if isinstance(child, LoopNode):
            found = _path_loops(child, target, path)
            if found is not None:
                return found
    return None


def nest_space(nest: LoopNode, n_vec_reg: int) -> NestSpace:
    loops = list(nest.loops())
    index = {id(loop): k for k, loop in enumerate(loops)}
    depth = [0] * len(loops)

    def walk(node: LoopNode, d: int) -> None:
        depth[index[id(node)]] = d
        for child in node.children:
            if isinstance(child, LoopNode):
                walk(child, d + 1)

    walk(nest, 1)
    members = []
    for leaf in iter_leaves(nest):
        path = _path_loops(nest, leaf, []) or []
        members.append(_Member(leaf, [index[id(p)] for p in path], build_matrices(leaf.accesses, len(path))))

    notes = []
    mixed = [loop for loop in loops
             if any(isinstance(c, LoopNode) for c in loop.children)
             and any(isinstance(c, StatementLeaf) for c in loop.children)]
    if mixed:
        notes.append("statements outside the innermost loops")
    if any(not m.leaf.unimodular for m in members):
        notes.append("non-unimodular statement schedule")
    eligible = [(loop.parallel or loop.permutable) and loop.constant_bounds for loop in loops]
    if not any(eligible):
        notes.append("no parallel or permutable loop with constant bounds")
    if notes:
        choices = [(1,) for _ in loops]
    else:
        choices = [UNROLL_FACTORS if ok else (1,) for ok in eligible]
    return NestSpace(loops, depth, choices, members, n_vec_reg, "; ".join(notes))


def _coupled(a: AccessFunction, it: int, others: Sequence[int]) -> bool:
    return any(row[it] and any(row[jt] for jt in others if jt != it) for row in a.matrix)


def score_tuple(space: NestSpace, factors: Sequence[int]) -> Tuple[float, int]:
    """
    ``(reuse score, register demand)`` of one factor tuple.

    The score is ``-inf`` when an unrolled iterator shares a subscript with
    another loop of the same statement.
    """
    max_depth = space.max_depth
    value = 0.0
    resource = 0
    for m in space.members:
        uf = [factors[k] for k in m.loops]
        local = range(len(m.loops))
        for a in m.leaf.accesses:
            demand = 1
            for j in local:
                if any(row[j] for row in a.matrix):
                    demand *= uf[j]
            resource += demand
            for j in local:
                if uf[j] > 1 and _coupled(a, j, local):
                    return float("-inf"), resource
        for j in local:
            if j == len(m.loops) - 1:
                value -= uf[j] * (m.matrices.resource[j] - m.matrices.reuse[j])
            else:
                weight = max_depth - space.depth[m.loops[j]] + 1
                value += weight * uf[j] * (REUSE_WEIGHT * m.matrices.reuse[j] + m.matrices.write[j])
    return value, resource


def feasible(space: NestSpace, factors: Sequence[int], resource: int) -> bool:
    if all(f == 1 for f in factors):
        return True
    if math.prod(factors) >= space.n_vec_reg / 2:
        return False
    return resource <= space.n_vec_reg


def explore_space(space: NestSpace, nest_id: int = 0) -> UnrollFactors:
    """Best-scoring feasible factor tuple; ties keep the first tuple in product order."""
    names = [(loop.name, loop.row) for loop in space.loops]
    ones = tuple(1 for _ in space.loops)
    best_score, best_resource = score_tuple(space, ones)
    best = ones
    explored = 0
    for factors in itertools.product(*space.choices):
        explored += 1
        score, resource = score_tuple(space, factors)
        if not feasible(space, factors, resource):
            continue
        if score > best_score:
            best, best_score, best_resource = tuple(factors), score, resource
    logger.debug("nest %d: %d tuples, best %s score %s", nest_id, explored, best, best_score)
    return UnrollFactors(nest_id, names, best, best_score, best_resource,
                         space.note or ("" if best != ones else "no profitable unrolling"), explored)


@dataclass
class RcouReport:
    scop: str
    nests: List[UnrollFactors] = field(default_factory=list)
    tree: str = ""

    def as_dict(self) -> Dict[str, object]:
        return {"scop": self.scop, "nests": [n.as_dict() for n in self.nests]}


def report_rcou(scop: Scop, schedules: Sequence[Schedule], machine, params: int = 8,
                ast: Optional[LoopAst] = None) -> RcouReport:
    """Unroll factors for every nest of the schedule's loop tree."""
    ast = ast or build_loop_ast(scop, schedules, params)
    report = RcouReport(scop.name, tree=ast.render())
    for nest_id, nest in enumerate(ast.nests()):
        result = explore_space(nest_space(nest, machine.n_vec_reg), nest_id)
        report.nests.append(result)
        logger.info("%s nest %d: factors %s (%s)", scop.name, nest_id, result.factors,
                    result.note or "ok")
    return report
