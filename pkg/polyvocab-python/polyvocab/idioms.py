# polyvocab/idioms.py
"""
The performance vocabulary.

Each idiom adds variables, constraints and objectives to one shared
:class:`~polyvocab.legality.LegalSpace`. Idioms run before legality is
emitted, so the rows they claim as parallel can still ask for exactness
blocks, and they are applied in reverse priority order: every idiom inserts
its objectives at the front of the stack, which leaves the highest-priority
idiom first.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from .dependence import (
    NSBD,
    NSFD,
    RAW,
    SD1,
    SDN,
    DependencePolyhedron,
    SccGraph,
    ScopMetrics,
    stencil_class,
)
from .exceptions import RecipeError
from .ilp import INTEGER, IlpSystem, LinExpr
from .legality import LegalSpace, VarLayout
from .scop import AccessFunction, Scop, Statement

logger = logging.getLogger(__name__)

IDIOM_IDS = ("OP", "SO", "IP", "OPIR", "DGF", "SIS", "SDC", "SPAR", "SMVS", "SKEWPAR", "SN")

STRIDE_FVD = 1
STRIDE_ABSENT = 3
STRIDE_OTHER = 10
WRITE_PENALTY = 2
SN_COEFF_CAP = 2


# ---------------------------------------------------------------------------
# Access metrics
# ---------------------------------------------------------------------------

def distinct_references(statement: Statement) -> List[AccessFunction]:
    """
    Accesses with equal array and subscripts merged into one reference.

    ``C[i][j] += ...`` reads and writes the same cell; it counts once, as a
    write.
    """
    refs: Dict[Tuple, AccessFunction] = {}
    for a in statement.accesses:
        key = (a.array, a.matrix, a.offsets, a.param_part)
        if key not in refs or a.is_write:
            refs[key] = a
    return list(refs.values())


def compute_stride_weights(statement: Statement) -> List[int]:
    """
    Per-iterator penalty of placing that iterator innermost.

    Example:
        gemm ``C[i][j] += A[i][k] * B[k][j]`` gives ``[33, 6, 17]``.
    """
    weights = [0] * statement.dim
    for ref in distinct_references(statement):
        scale = WRITE_PENALTY if ref.is_write else 1
        used = set(ref.iterators_used())
        for it in range(statement.dim):
            if ref.fvd[it]:
                w = STRIDE_FVD
            elif it not in used:
                w = STRIDE_ABSENT
            else:
                w = STRIDE_OTHER
            weights[it] += w * scale
    return weights


@dataclass(frozen=True)
class MgrMatrices:
    """Iterator weights ``m``, per-subscript row signs ``g`` and rank weights ``r``."""

    m: Tuple[int, ...]
    g: Tuple[Tuple[int, ...], ...]
    r: Tuple[int, ...]


def build_mgr(access: AccessFunction, statement: Statement, n_rows: int) -> MgrMatrices:
    m = tuple(sum(abs(row[k]) for row in access.matrix) for k in range(statement.dim))
    g = []
    for i in range(min(access.dim, statement.dim)):
        g.append(tuple(
            (m[j] if access.matrix[i][j] else -1) if m[j] > 0 else 0
            for j in range(statement.dim)
        ))
    r = tuple((n_rows // 2 - j) if m[j] > 0 else 0 for j in range(statement.dim))
    return MgrMatrices(m, tuple(g), r)


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------

@dataclass
class IdiomReport:
    """What one idiom added to the system, for ``explain``."""

    idiom: str
    variables: int = 0
    constraints: int = 0
    exact_rows: int = 0
    objectives: List[str] = field(default_factory=list)
    samples: List[str] = field(default_factory=list)
    note: str = ""

    def as_dict(self) -> Dict[str, object]:
        return {
            "idiom": self.idiom,
            "variables": self.variables,
            "constraints": self.constraints,
            "exact_rows": self.exact_rows,
            "objectives": list(self.objectives),
            "samples": list(self.samples),
            "note": self.note,
        }


class IdiomContext:
    """Everything an idiom reads, plus the space it writes to."""

    def __init__(self, scop: Scop, deps: Sequence[DependencePolyhedron], sccs: SccGraph,
                 metrics: ScopMetrics, machine, space: LegalSpace):
        self.scop = scop
        self.deps = list(deps)
        self.sccs = sccs
        self.metrics = metrics
        self.machine = machine
        self.space = space
        self.reports: Dict[str, IdiomReport] = {}
        self._current: Optional[IdiomReport] = None

    @property
    def sys(self) -> IlpSystem:
        return self.space.sys

    @property
    def layout(self) -> VarLayout:
        return self.space.layout

    @property
    def rows(self) -> int:
        return self.scop.rows

    @property
    def multi_skew(self) -> bool:
        return bool(self.machine.multi_skew)

    def aux(self, name: str, lo: int, hi: int, kind: str = INTEGER):
        owner = self._current.idiom if self._current else "?"
        return self.layout.add_aux(self.sys, owner, name, kind, lo, hi)

    def note(self, text: str) -> None:
        if self._current is not None:
            self._current.note = text

    def lead(self, objectives: Sequence[Tuple[LinExpr, str, str]]) -> None:
        """Insert ``(expr, sense, label)`` objectives at the front, keeping their order."""
        for expr, sense, label in reversed(objectives):
            self.sys.push_objective(expr, sense, "leading", label)
        if self._current is not None:
            self._current.objectives[:0] = [label for _, _, label in objectives]

    def trail(self, expr: LinExpr, sense: str, label: str) -> None:
        self.sys.push_objective(expr, sense, "trailing", label)
        if self._current is not None:
            self._current.objectives.append(label)

    def exact(self, dep: DependencePolyhedron, row: int) -> None:
        before = len(self.space.exact)
        self.space.request_exact(dep, row)
        if self._current is not None:
            self._current.exact_rows += len(self.space.exact) - before

    def self_deps(self, sid: int) -> List[DependencePolyhedron]:
        return [d for d in self.deps if d.source == sid and d.target == sid]

    def apply(self, idiom: str) -> IdiomReport:
        if idiom not in IDIOMS:
            raise RecipeError(f"unknown idiom {idiom!r}; valid idioms: {', '.join(IDIOM_IDS)}",
                              idiom=idiom, valid=list(IDIOM_IDS))
        if idiom in self.reports:
            raise RecipeError(f"idiom {idiom} applied twice", idiom=idiom)
        report = IdiomReport(idiom)
        self.reports[idiom] = report
        n_vars, n_cons = len(self.sys.variables), len(self.sys.constraints)
        self._current = report
        try:
            IDIOMS[idiom](self)
        finally:
            self._current = None
        report.variables = len(self.sys.variables) - n_vars
        report.constraints = len(self.sys.constraints) - n_cons
        report.samples = [self.sys.format_constraint(c) for c in self.sys.constraints[n_cons:n_cons + 3]]
        logger.debug("%s: +%d variables, +%d constraints, objectives %s", idiom,
                     report.variables, report.constraints, report.objectives)
        return report

    def apply_recipe(self, idioms: Sequence[str]) -> List[IdiomReport]:
        """Apply ``idioms`` so that the first one ends up with the highest priority."""
        done = [self.apply(i) for i in reversed(list(idioms))]
        return list(reversed(done))


def _sum(terms) -> LinExpr:
    out = LinExpr()
    for t in terms:
        out = out + t
    return out


# ---------------------------------------------------------------------------
# Idioms
# ---------------------------------------------------------------------------

def outer_parallel_row(ctx: IdiomContext) -> int:
    m = ctx.metrics
    row = 1 if m.n_scc >= m.n_self_dep else 3
    return row if row < ctx.rows else 1


def apply_op(ctx: IdiomContext) -> None:
    """Outer parallelism: nothing carried at the outermost (or second) linear row."""
    p = outer_parallel_row(ctx)
    for d in ctx.deps:
        ctx.exact(d, p)
    total = _sum(ctx.layout.delta[(d.index, p)] for d in ctx.deps)
    ctx.note(f"row {p}")
    ctx.lead([(total, "min", f"OP: dependences carried at row {p}")])


def apply_so(ctx: IdiomContext) -> None:
    """Stride optimization on the innermost linear row."""
    row = ctx.rows - 2
    hi = ctx.space.window[1]
    coeff_sum, cost_sum = LinExpr(), LinExpr()
    covered = [s for s in ctx.scop.statements if s.dim >= 2]
    for s in covered:
        thetas = ctx.layout.theta_row(s.id, row)
        for v in thetas:
            ctx.sys.add_constraint(v, ">=", 0, label=f"so_S{s.id}_nonneg")
        if s.dim == ctx.scop.dloop:
            ctx.sys.add_constraint(ctx.layout.row_sum(s.id, row), ">=", 1, label=f"so_S{s.id}_nonzero")
        weights = compute_stride_weights(s)
        cost = ctx.aux(f"so_cost_S{s.id}", 0, max(0, hi) * sum(weights))
        ctx.sys.add_constraint(cost - IlpSystem.expr(zip(weights, thetas)), "==", 0,
                               label=f"so_cost_S{s.id}")
        coeff_sum = coeff_sum + ctx.layout.row_sum(s.id, row)
        cost_sum = cost_sum + cost
    if not covered:
        ctx.note("no statement of dimension 2 or more")
        return
    ctx.lead([
        (coeff_sum, "min", "SO: innermost coefficient sum"),
        (cost_sum, "min", "SO: stride cost"),
    ])


def apply_ip(ctx: IdiomContext) -> None:
    """Inner parallelism at the innermost linear row."""
    if ctx.scop.dloop < 3:
        ctx.note("loop depth below 3")
        return
    row = ctx.rows - 2
    for d in ctx.deps:
        ctx.exact(d, row)
    total = _sum(ctx.layout.delta[(d.index, row)] for d in ctx.deps)
    ctx.lead([(total, "min", f"IP: dependences carried at row {row}")])


def apply_opir(ctx: IdiomContext) -> None:
    """
    Trade outer parallelism for inner reuse.

    Every reference gets one ``Q`` score per subscript level, bounded by how
    well the schedule aligns that subscript's iterators with the loop at the
    matching depth. ``U`` absorbs bounds that go negative; it is weighted above
    every achievable ``Q`` total so it only breaks ties.
    """
    layout, sys = ctx.layout, ctx.sys
    rows, depth = ctx.rows, ctx.scop.dloop
    half = rows // 2
    q_minus, underflow = LinExpr(), LinExpr()
    weight = 1
    for s in ctx.scop.statements:
        refs = [a for a in distinct_references(s) if any(any(row) for row in a.matrix)]
        if not refs:
            continue
        pad = depth - s.dim
        for r in layout.linear_rows:
            for v in layout.theta_row(s.id, r):
                sys.add_constraint(v, ">=", 0, label=f"opir_S{s.id}_nonneg")
            sys.add_constraint(layout.row_sum(s.id, r), "<=", 1, label=f"opir_S{s.id}_r{r}_sum")
        for i in range(pad):
            for j in range(s.dim):
                sys.add_constraint(layout.theta[(s.id, 2 * i + 1, j)] - layout.theta[(s.id, 2 * pad + 1, j)],
                                   "==", 0, label=f"opir_S{s.id}_pad")
        self_deps = ctx.self_deps(s.id)
        upper = 0
        q_total = LinExpr()
        for fi, ref in enumerate(refs):
            mgr = build_mgr(ref, s, rows)
            last = min(s.dim, ref.dim) - 1
            for i in range(last + 1):
                cap = 2 + half - i
                upper += cap
                q = ctx.aux(f"opir_Q_S{s.id}_F{fi}_{i}", 0, cap)
                u = ctx.aux(f"opir_U_S{s.id}_F{fi}_{i}", 0, 2)
                bound = IlpSystem.expr(zip(mgr.g[i], layout.theta_row(s.id, 2 * i + 1)))
                for k in range(i + 1, last + 1):
                    bound = bound + IlpSystem.expr(zip(mgr.r, layout.theta_row(s.id, 2 * (pad + k) + 1)))
                row = 2 * i + 1
                if self_deps:
                    for d in self_deps:
                        ctx.exact(d, row)
                        sys.add_constraint(q - u + layout.delta[(d.index, row)] - bound, "<=", 1,
                                           label=f"opir_Q_S{s.id}_F{fi}_{i}_{d.name}")
                else:
                    sys.add_constraint(q - u - bound, "<=", 0, label=f"opir_Q_S{s.id}_F{fi}_{i}")
                q_total = q_total + q
                underflow = underflow + u
        q_plus = ctx.aux(f"opir_Qplus_S{s.id}", 0, upper)
        q_neg = ctx.aux(f"opir_Qminus_S{s.id}", 0, upper)
        sys.add_constraint(q_plus - q_total, "==", 0, label=f"opir_Qplus_S{s.id}")
        sys.add_constraint(q_plus + q_neg, "==", upper, label=f"opir_Qminus_S{s.id}")
        q_minus = q_minus + q_neg
        weight += upper
    if q_minus.is_constant() and underflow.is_constant():
        ctx.note("no non-scalar references")
        return
    ctx.lead([(q_minus + underflow * weight, "min", "OPIR: missed inner reuse")])


def dgf_weights(n_rows: int, count: int) -> List[int]:
    top = (n_rows + 1) // 2
    return [2 ** (top - i - 1) for i in range(count)]


def apply_dgf(ctx: IdiomContext) -> None:
    """Fuse producers with their inter-SCC consumers."""
    layout = ctx.layout
    rows, n_s = ctx.rows, ctx.scop.n_statements
    top = (rows + 1) // 2
    seen = set()
    total = LinExpr()
    for d in ctx.deps:
        if d.kind != RAW or d.self_dep or not ctx.sccs.is_inter_scc(d):
            continue
        key = (d.source, d.target, d.array)
        if key in seen:
            continue
        seen.add(key)
        r, s = ctx.scop.statement(d.source), ctx.scop.statement(d.target)
        scale = 2 if any(a.array == d.array for a in s.writes) else 1
        count = min(r.dim, s.dim) + 1
        diff = LinExpr()
        for i, w in enumerate(dgf_weights(rows, count)):
            diff = diff + (layout.beta[(s.id, 2 * i)] - layout.beta[(r.id, 2 * i)]) * (w * scale)
        dist = ctx.aux(f"dgf_S{r.id}_S{s.id}_{d.array}", 0, n_s * 2 ** (top + 1))
        ctx.sys.add_constraint(dist - diff, "==", 0, label=f"dgf_S{r.id}_S{s.id}_{d.array}")
        total = total + dist
    if not seen:
        ctx.note("no inter-SCC flow dependence")
        return
    ctx.lead([(total, "min", "DGF: producer-consumer distance")])


def sis_pairs(ctx: IdiomContext) -> List[Tuple[int, int]]:
    pairs = []
    for r in range(ctx.scop.n_statements):
        for s in range(r + 1, ctx.scop.n_statements):
            if ctx.sccs.same_scc(r, s):
                continue
            between = [d for d in ctx.deps if {d.source, d.target} == {r, s}]
            if all(d.kind == RAW for d in between):
                pairs.append((r, s))
    return pairs


def apply_sis(ctx: IdiomContext) -> None:
    """Separate independent statements at the outermost scalar row."""
    layout, sys = ctx.layout, ctx.sys
    n_s = ctx.scop.n_statements
    sys.add_constraint(_sum(layout.beta[(s, 0)] for s in range(n_s)), "<=", n_s * (n_s + 1) // 2,
                       label="sis_beta_total")
    total = LinExpr()
    pairs = sis_pairs(ctx)
    for r, s in pairs:
        gap = s - r
        plus = ctx.aux(f"sis_plus_S{r}_S{s}", 0, gap)
        minus = ctx.aux(f"sis_minus_S{r}_S{s}", 0, gap)
        sys.add_constraint(plus - layout.beta[(s, 0)] + layout.beta[(r, 0)], "==", 0,
                           label=f"sis_plus_S{r}_S{s}")
        sys.add_constraint(plus + minus, "==", gap, label=f"sis_split_S{r}_S{s}")
        total = total + minus
    if not pairs:
        ctx.note("no independent statement pair")
        return
    ctx.lead([(total, "min", "SIS: independence distance deficit")])


def active_stencil_classes(multi_skew: bool) -> Tuple[str, ...]:
    return (NSFD, NSBD, SD1, SDN) if multi_skew else (SD1, SDN)


def apply_sdc(ctx: IdiomContext) -> None:
    """
    Steer stencil dependences to the rows their class prefers.

    Each row gets a deficit objective instead of a hard equality forcing
    every participating dependence to be satisfied: a single SCC whose
    backward dependences are carried by the time row cannot meet it.
    """
    layout, sys = ctx.layout, ctx.sys
    ms = ctx.multi_skew
    active = active_stencil_classes(ms)
    classes = {d.index: stencil_class(d, ctx.scop) for d in ctx.deps}
    part = [d for d in ctx.deps if classes[d.index] in active]
    n = len(part)
    if not n:
        ctx.note("no participating dependence")
        return
    objectives = []
    for k in range(ctx.rows):
        terms = []
        for d in part:
            cls = classes[d.index]
            if ms and k == 1 and cls == NSFD:
                terms.append(layout.delta[(d.index, k)])
            elif ms and k % 2 == 0 and cls == NSBD:
                terms.append(layout.delta[(d.index, k)])
                sys.add_constraint(layout.beta[(d.target, k)] - layout.beta[(d.source, k)]
                                   - layout.delta[(d.index, k)], ">=", 0, label=f"sdc_{d.name}_r{k}")
            elif k % 2 == 1 and k != 3 and cls == SD1:
                terms.append(layout.delta[(d.index, k)])
            elif k == 3 and cls == SDN:
                terms.append(layout.delta[(d.index, k)])
        if not terms:
            continue
        plus = ctx.aux(f"sdc_plus_r{k}", 0, n)
        minus = ctx.aux(f"sdc_minus_r{k}", 0, n)
        sys.add_constraint(plus - _sum(terms), "==", 0, label=f"sdc_plus_r{k}")
        sys.add_constraint(plus + minus, "==", n, label=f"sdc_split_r{k}")
        objectives.append((LinExpr.of(minus), "min", f"SDC: row {k} deficit"))
    ctx.note(f"{n} participating dependences, multi-skew {ms}")
    ctx.lead(objectives)


def apply_spar(ctx: IdiomContext) -> None:
    """Shift and skew stencil statements towards wavefront parallelism."""
    layout, sys = ctx.layout, ctx.sys
    ms = ctx.multi_skew
    opv = ctx.machine.opv
    n_s, depth, rows = ctx.scop.n_statements, ctx.scop.dloop, ctx.rows
    shift_hi = (2 * opv + 1) * n_s
    for s in ctx.scop.statements:
        for r in (1, 3):
            if r < rows:
                sys.set_bounds(layout.shift[(s.id, r)], 0, shift_hi)

    flow = nx.DiGraph()
    flow.add_nodes_from(range(n_s))
    flow.add_edges_from((d.source, d.target) for d in ctx.deps
                        if d.kind == RAW and not d.self_dep and d.depth >= 1)
    # only pairs that cross a cycle of intra-step flow can be ordered by shifts
    group = {sid: n for n, comp in enumerate(nx.strongly_connected_components(flow)) for sid in comp}
    pairs = sorted((r, s) for r, s in flow.edges if group[r] != group[s])
    for r, s in pairs:
        sys.add_constraint(layout.shift[(s, 1)] - layout.shift[(r, 1)], ">=", 1,
                           label=f"spar_time_shift_S{r}_S{s}")
        if not ms and rows > 3:
            sys.add_constraint(layout.shift[(s, 3)] - layout.shift[(r, 3)], ">=", 2 * opv,
                               label=f"spar_vector_shift_S{r}_S{s}")

    if ms:
        full = sum(1 for s in ctx.scop.statements if s.dim == depth)
        for s in ctx.scop.statements:
            for k in range(depth - 1):
                sys.add_constraint(layout.row_sum(s.id, 2 * k + 1) - layout.row_sum(s.id, 2 * k + 3),
                                   ">=", 1 if k > 0 else 0, label=f"spar_skew_S{s.id}_r{2 * k + 1}")
            sys.add_constraint(layout.row_sum(s.id, 1), ">=", full - ctx.space.k * (depth - s.dim),
                               label=f"spar_time_row_S{s.id}")
    for s in ctx.scop.statements:
        for k in range(1, s.dim):
            if 2 * k + 1 < rows:
                sys.add_constraint(layout.theta[(s.id, 2 * k + 1, k)], ">=", 1,
                                   label=f"spar_own_S{s.id}_r{2 * k + 1}")

    self_deps = [d for d in ctx.deps if d.self_dep]
    if rows <= 3 or not self_deps:
        ctx.note(f"{len(pairs)} intra-step flow pairs")
        return
    for d in self_deps:
        sys.add_constraint(layout.theta[(d.source, 3, 0)] - layout.delta[(d.index, 3)], ">=", 0,
                           label=f"spar_self_{d.name}")
    n = len(self_deps)
    minus = ctx.aux("spar_minus", 0, n)
    plus = ctx.aux("spar_plus", 0, n)
    sys.add_constraint(minus + plus - _sum(layout.delta[(d.index, 3)] for d in self_deps), "==", 0,
                       label="spar_split")
    ctx.note(f"{len(pairs)} intra-step flow pairs")
    ctx.lead([(LinExpr.of(minus), "min", "SPAR: self dependences at row 3 (leading)")])
    ctx.trail(LinExpr.of(plus), "min", "SPAR: self dependences at row 3 (trailing)")


def apply_smvs(ctx: IdiomContext) -> None:
    """Keep skewing off the vectorized iterator."""
    layout = ctx.layout
    lo, hi = ctx.space.window
    depth = ctx.scop.dloop
    total = LinExpr()
    for s in ctx.scop.statements:
        terms = list(layout.theta_row(s.id, 2 * depth - 1))
        terms += [layout.theta[(s.id, 2 * k + 1, s.dim - 1)] for k in range(depth - 1)]
        phi = ctx.aux(f"smvs_phi_S{s.id}", lo * len(terms), hi * len(terms))
        ctx.sys.add_constraint(phi - _sum(terms), "==", 0, label=f"smvs_phi_S{s.id}")
        total = total + phi
    ctx.lead([(total, "min", "SMVS: skew on the vector iterator")])


def apply_skewpar(ctx: IdiomContext) -> None:
    """Outer carried dependences, small time row, parallel second row."""
    layout, sys = ctx.layout, ctx.sys
    pis: Dict[Tuple[int, int], object] = {}
    for s in ctx.scop.statements:
        for k in layout.linear_rows:
            pis[(s.id, k)] = ctx.aux(f"pi_S{s.id}_r{k}", 0, 1)
    for d in ctx.deps:
        for k in layout.linear_rows:
            ctx.exact(d, k)
            for sid in sorted({d.source, d.target}):
                sys.add_constraint(pis[(sid, k)] + layout.delta[(d.index, k)], "<=", 1,
                                   label=f"skewpar_pi_S{sid}_r{k}_{d.name}")
    objectives = [
        (_sum(layout.delta[(d.index, 1)] for d in ctx.deps), "max", "SKEWPAR: carried at row 1"),
        (_sum(layout.row_sum(s.id, 1) for s in ctx.scop.statements), "min", "SKEWPAR: time row size"),
    ]
    if ctx.rows > 3:
        objectives.append((_sum(pis[(s.id, 3)] for s in ctx.scop.statements), "max",
                           "SKEWPAR: parallel at row 3"))
    ctx.lead(objectives)


def apply_sn(ctx: IdiomContext) -> None:
    """Schedule normalization: small coefficients, fixed single-SCC structure."""
    layout, sys = ctx.layout, ctx.sys
    if ctx.metrics.n_scc == 1:
        last = ctx.rows - 1
        for s in ctx.scop.statements:
            sys.add_constraint(layout.beta[(s.id, last)], "==", s.id, label=f"sn_S{s.id}_inner_beta")
            sys.add_constraint(layout.beta[(s.id, 0)], "==", 0, label=f"sn_S{s.id}_outer_beta")
            for j, v in enumerate(layout.theta_row(s.id, 1)):
                sys.add_constraint(v, "==", 1 if j == 0 else 0, label=f"sn_S{s.id}_time_row")
    for v in layout.theta.values():
        lo, hi = sys.bounds(v)
        sys.set_bounds(v, min(lo, SN_COEFF_CAP), min(hi, SN_COEFF_CAP))


IDIOMS: Dict[str, Callable[[IdiomContext], None]] = {
    "OP": apply_op,
    "SO": apply_so,
    "IP": apply_ip,
    "OPIR": apply_opir,
    "DGF": apply_dgf,
    "SIS": apply_sis,
    "SDC": apply_sdc,
    "SPAR": apply_spar,
    "SMVS": apply_smvs,
    "SKEWPAR": apply_skewpar,
    "SN": apply_sn,
}
