# polyvocab/dependence.py
"""
Memory-based dependence analysis.

For every ordered pair of accesses to the same array, one polyhedron is built
per original-order split: equal on the first ``l`` common loops and strictly
later at loop ``l``, plus the all-equal split when the source statement comes
textually first. Relations live over ``x_R ++ y_S ++ params ++ 1``.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .cache import AnalysisCache, get_default_cache
from .ilp import IlpSystem
from .scop import Row, Scop, Statement, default_param_min

logger = logging.getLogger(__name__)

RAW = "RAW"
WAR = "WAR"
WAW = "WAW"
RAR = "RAR"
ALL_KINDS = (RAW, WAR, WAW, RAR)
LEGALITY_KINDS = (RAW, WAR, WAW)

KIND_BY_ACCESS = {
    ("write", "read"): RAW,
    ("read", "write"): WAR,
    ("write", "write"): WAW,
    ("read", "read"): RAR,
}

SD1 = "SD1"
SDN = "SDN"
NSFD = "NSFD"
NSBD = "NSBD"

# Box for iterator variables in emptiness tests; domains bound them far tighter.
ITERATOR_BOX = 10**4


@dataclass(frozen=True)
class DependencePolyhedron:
    """One depth-split relation between instances of ``source`` and ``target``."""

    index: int
    source: int
    target: int
    kind: str
    depth: int
    array: str
    source_access: int
    target_access: int
    n_source: int
    n_target: int
    n_params: int
    inequalities: Tuple[Row, ...]
    equalities: Tuple[Row, ...]

    @property
    def name(self) -> str:
        return f"D{self.index}"

    @property
    def self_dep(self) -> bool:
        return self.source == self.target

    @property
    def flow(self) -> bool:
        return self.kind == RAW

    @property
    def relation_key(self) -> Tuple[int, int, str, str]:
        return self.source, self.target, self.array, self.kind

    def contains(self, x: Sequence[int], y: Sequence[int], params: Sequence[int]) -> bool:
        full = list(x) + list(y) + list(params) + [1]
        if any(sum(c * v for c, v in zip(row, full)) < 0 for row in self.inequalities):
            return False
        return all(sum(c * v for c, v in zip(row, full)) == 0 for row in self.equalities)

    def describe(self) -> str:
        return (f"{self.name}: S{self.source} -> S{self.target} {self.kind} on {self.array} "
                f"depth {self.depth}")


def _embed(row: Sequence[int], width: int, offset: int, count: int, nparams: int) -> List[int]:
    """Place a statement row (iters ++ params ++ const) at ``offset`` in a relation row."""
    out = [0] * width
    for k in range(count):
        out[offset + k] = row[k]
    base = width - nparams - 1
    for k in range(nparams):
        out[base + k] = row[count + k]
    out[-1] = row[-1]
    return out


def build_relation(scop: Scop, r: Statement, s: Statement, a_idx: int, b_idx: int,
                   depth: int) -> Tuple[List[Row], List[Row]]:
    """Inequalities and equalities of the split ``depth`` between two accesses."""
    nr, ns, np_ = r.dim, s.dim, len(scop.parameters)
    width = nr + ns + np_ + 1
    pbase = nr + ns
    ineq: List[Row] = []
    eq: List[Row] = []
    for row in r.domain:
        ineq.append(tuple(_embed(row, width, 0, nr, np_)))
    for row in s.domain:
        ineq.append(tuple(_embed(row, width, nr, ns, np_)))
    a, b = r.accesses[a_idx], s.accesses[b_idx]
    for t in range(a.dim):
        row = [0] * width
        for k in range(nr):
            row[k] = a.matrix[t][k]
        for k in range(ns):
            row[nr + k] = -b.matrix[t][k]
        for k in range(np_):
            row[pbase + k] = a.param_part[t][k] - b.param_part[t][k]
        row[-1] = a.offsets[t] - b.offsets[t]
        eq.append(tuple(row))
    common = scop.common_loops(r.id, s.id)
    for k in range(min(depth, common)):
        row = [0] * width
        row[k], row[nr + k] = 1, -1
        eq.append(tuple(row))
    if depth < common:
        row = [0] * width
        row[nr + depth], row[depth], row[-1] = 1, -1, -1
        ineq.append(tuple(row))
    ineq.extend(parameter_rows(scop, width))
    return ineq, eq


def parameter_rows(scop: Scop, width: int) -> List[Row]:
    """Context rows plus ``p >= 1`` for each parameter, embedded at the tail of ``width``."""
    np_ = len(scop.parameters)
    base = width - np_ - 1
    rows: List[Row] = []
    for ctx in scop.context:
        row = [0] * width
        for k in range(np_):
            row[base + k] = ctx[k]
        row[-1] = ctx[-1]
        rows.append(tuple(row))
    for k in range(np_):
        row = [0] * width
        row[base + k] = 1
        row[-1] = -1
        rows.append(tuple(row))
    return rows


def relation_nonempty(scop: Scop, n_vars: int, ineq: Iterable[Row], eq: Iterable[Row],
                      param_min: int, param_span: int) -> bool:
    sys = IlpSystem("emptiness")
    xs = [sys.add_variable(f"v{k}", "integer", -ITERATOR_BOX, ITERATOR_BOX) for k in range(n_vars)]
    ps = [sys.add_variable(f"p_{p}", "integer", param_min, param_min + param_span)
          for p in scop.parameters]
    cols = xs + ps
    for row in ineq:
        sys.add_constraint(sys.expr(zip(row, cols), row[-1]), ">=", 0)
    for row in eq:
        sys.add_constraint(sys.expr(zip(row, cols), row[-1]), "==", 0)
    feasible, _ = sys.check_feasible()
    return feasible


def compute_dependences(scop: Scop, kinds: Iterable[str] = LEGALITY_KINDS,
                        param_min: Optional[int] = None, param_span: int = 8,
                        cache: Optional[AnalysisCache] = None) -> List[DependencePolyhedron]:
    """
    All non-empty dependence polyhedra of the requested kinds.

    Sorted by (source, target, array, kind, depth, access pair); ``index`` is
    the position in that order.
    """
    wanted = tuple(k for k in ALL_KINDS if k in set(kinds))
    pmin = default_param_min(scop) if param_min is None else param_min
    cache = cache if cache is not None else get_default_cache()
    key = ("dependences", scop.digest(), wanted, pmin, param_span)
    cached = cache.get(key)
    if cached is not None:
        return list(cached)

    found = []
    for r in scop.statements:
        for s in scop.statements:
            common = scop.common_loops(r.id, s.id)
            splits = list(range(common)) + ([common] if r.id < s.id else [])
            count = 0
            for ai, a in enumerate(r.accesses):
                for bi, b in enumerate(s.accesses):
                    if a.array != b.array:
                        continue
                    kind = KIND_BY_ACCESS[(a.kind, b.kind)]
                    if kind not in wanted:
                        continue
                    for depth in splits:
                        ineq, eq = build_relation(scop, r, s, ai, bi, depth)
                        if not relation_nonempty(scop, r.dim + s.dim, ineq, eq, pmin, param_span):
                            continue
                        found.append((r.id, s.id, a.array, ALL_KINDS.index(kind), depth, ai, bi,
                                      kind, tuple(ineq), tuple(eq)))
                        count += 1
            if count:
                logger.debug("%s: %d polyhedra from S%d to S%d", scop.name, count, r.id, s.id)
    found.sort(key=lambda t: t[:7])
    deps = []
    for index, (src, dst, array, _, depth, ai, bi, kind, ineq, eq) in enumerate(found):
        deps.append(DependencePolyhedron(
            index, src, dst, kind, depth, array, ai, bi,
            scop.statement(src).dim, scop.statement(dst).dim, len(scop.parameters), ineq, eq,
        ))
    cache.set(key, tuple(deps))
    logger.info("%s: %d dependence polyhedra (%s)", scop.name, len(deps), ",".join(wanted))
    return deps


@dataclass(frozen=True)
class SccGraph:
    """Strongly connected components of the statement dependence graph."""

    component: Tuple[int, ...]
    edges: FrozenSet[Tuple[int, int]]

    @property
    def n_components(self) -> int:
        return len(set(self.component))

    def same_scc(self, a: int, b: int) -> bool:
        return self.component[a] == self.component[b]

    def members(self, comp: int) -> List[int]:
        return [s for s, c in enumerate(self.component) if c == comp]

    def is_inter_scc(self, dep: DependencePolyhedron) -> bool:
        return not self.same_scc(dep.source, dep.target)


def build_scc(scop: Scop, deps: Iterable[DependencePolyhedron]) -> SccGraph:
    """Condense the dependence graph; components are numbered by least statement id."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(scop.n_statements))
    for d in deps:
        if d.kind in LEGALITY_KINDS:
            graph.add_edge(d.source, d.target)
    comps = sorted((sorted(c) for c in nx.strongly_connected_components(graph)), key=lambda c: c[0])
    component = [0] * scop.n_statements
    for cid, members in enumerate(comps):
        for s in members:
            component[s] = cid
    edges = {
        (component[u], component[v]) for u, v in graph.edges if component[u] != component[v]
    }
    return SccGraph(tuple(component), frozenset(edges))


def stencil_class(dep: DependencePolyhedron, scop: Scop) -> str:
    if dep.self_dep:
        return SD1 if scop.n_statements == 1 else SDN
    return NSFD if dep.source < dep.target else NSBD


def statement_is_stencil(statement: Statement) -> bool:
    """Some array is read through two accesses with equal matrices and different offsets."""
    by_array: Dict[str, List] = {}
    for a in statement.reads:
        by_array.setdefault(a.array, []).append(a)
    for reads in by_array.values():
        for i, a in enumerate(reads):
            for b in reads[i + 1:]:
                if a.matrix == b.matrix and a.offsets != b.offsets:
                    return True
    return False


@dataclass(frozen=True)
class ScopMetrics:
    n_dep: int
    n_dep_polyhedra: int
    dim_theta: int
    n_self_dep: int
    n_self_dep_polyhedra: int
    n_scc: int
    is_stencil: bool
    n_statements: int

    def as_dict(self) -> Dict[str, object]:
        return {
            "N_dep": self.n_dep,
            "N_dep_polyhedra": self.n_dep_polyhedra,
            "dimTheta": self.dim_theta,
            "N_self_dep": self.n_self_dep,
            "N_self_dep_polyhedra": self.n_self_dep_polyhedra,
            "N_scc": self.n_scc,
            "is_stencil": self.is_stencil,
            "N_S": self.n_statements,
        }


def metrics(scop: Scop, deps: Sequence[DependencePolyhedron], sccs: SccGraph) -> ScopMetrics:
    legal = [d for d in deps if d.kind in LEGALITY_KINDS]
    self_deps = [d for d in legal if d.self_dep]
    stencil_statements = sum(1 for s in scop.statements if statement_is_stencil(s))
    return ScopMetrics(
        n_dep=len({d.relation_key for d in legal}),
        n_dep_polyhedra=len(legal),
        dim_theta=scop.rows,
        n_self_dep=len({d.source for d in self_deps}),
        n_self_dep_polyhedra=len(self_deps),
        n_scc=sccs.n_components,
        is_stencil=2 * stencil_statements >= scop.n_statements,
        n_statements=scop.n_statements,
    )
