# polyvocab/verifier.py
"""
Instance-level oracle.

Everything here works on explicit integer points at fixed parameter values:
enumerate every statement instance, find every pair of instances touching the
same array cell (at least one of them writing), and compare timestamps. It is
slow on purpose and independent of the Farkas machinery it cross-checks.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .cache import AnalysisCache, get_default_cache
from .dependence import KIND_BY_ACCESS
from .exceptions import DimensionMismatchError, EnumerationLimitError, ScopValidationError
from .scop import Schedule, Scop, Statement, access_eval, domain_contains, first_divergence, identity_schedules

logger = logging.getLogger(__name__)

DEFAULT_VERIFY_PARAMS = (3, 6)
DEFAULT_ENUM_CAP = 10**6
DEFAULT_MAX_VIOLATIONS = 10

ParamSpec = Union[int, Sequence[int], Mapping[str, int]]
Point = Tuple[int, ...]


def resolve_params(scop: Scop, params: ParamSpec) -> Tuple[int, ...]:
    """
    Parameter values in declaration order.

    Accepts one integer for every parameter, a sequence, or a name mapping.
    """
    if isinstance(params, int):
        values = (params,) * len(scop.parameters)
    elif isinstance(params, Mapping):
        missing = [p for p in scop.parameters if p not in params]
        if missing:
            raise ScopValidationError(f"no value for parameters {', '.join(missing)}")
        values = tuple(int(params[p]) for p in scop.parameters)
    else:
        values = tuple(int(v) for v in params)
        if len(values) != len(scop.parameters):
            raise DimensionMismatchError(
                f"{len(values)} parameter values for {len(scop.parameters)} parameters"
            )
    for row in scop.context:
        if sum(c * v for c, v in zip(row, values)) + row[-1] < 0:
            raise ScopValidationError(f"parameters {values} violate the context", params=list(values))
    return values


def _level_bounds(statement: Statement, level: int, prefix: Sequence[int],
                  params: Sequence[int]) -> Tuple[Optional[int], Optional[int]]:
    """Bounds of iterator ``level`` from the rows whose innermost iterator it is."""
    dim = statement.dim
    lo: Optional[int] = None
    hi: Optional[int] = None
    for row in statement.domain:
        last = max((k for k in range(dim) if row[k]), default=-1)
        if last != level:
            continue
        rest = sum(row[k] * prefix[k] for k in range(level))
        rest += sum(c * p for c, p in zip(row[dim:-1], params)) + row[-1]
        a = row[level]
        if a > 0:
            b = -(rest // a)
            lo = b if lo is None else max(lo, b)
        else:
            b = rest // (-a)
            hi = b if hi is None else min(hi, b)
    return lo, hi


def enumerate_statement(statement: Statement, params: Sequence[int]) -> Iterator[Point]:
    """Integer points of one domain in lexicographic order."""
    dim = statement.dim
    for row in statement.domain:
        if not any(row[:dim]):
            if sum(c * p for c, p in zip(row[dim:-1], params)) + row[-1] < 0:
                return

    def scan(prefix: List[int]) -> Iterator[Point]:
        level = len(prefix)
        if level == dim:
            point = tuple(prefix)
            if domain_contains(statement, point, params):
                yield point
            return
        lo, hi = _level_bounds(statement, level, prefix, params)
        if lo is None or hi is None:
            raise ScopValidationError(
                f"statement {statement.id}: iterator {statement.iterators[level]} is unbounded",
                statement=statement.id,
            )
        for v in range(lo, hi + 1):
            prefix.append(v)
            yield from scan(prefix)
            prefix.pop()

    yield from scan([])


def enumerate_instances(scop: Scop, params: ParamSpec,
                        cap: int = DEFAULT_ENUM_CAP) -> List[Tuple[int, Point]]:
    """All ``(statement id, point)`` pairs, by statement then point."""
    values = resolve_params(scop, params)
    out: List[Tuple[int, Point]] = []
    for s in scop.statements:
        for point in enumerate_statement(s, values):
            out.append((s.id, point))
            if len(out) > cap:
                raise EnumerationLimitError(f"more than {cap} instances at parameters {values}",
                                            cap=cap, params=list(values))
    return out


@dataclass(frozen=True)
class TraceEntry:
    statement: int
    point: Point
    timestamp: Tuple[int, ...]


@dataclass
class InstanceTrace:
    """Instances in the order a schedule executes them."""

    params: Tuple[int, ...]
    entries: List[TraceEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def order(self) -> List[Tuple[int, Point]]:
        return [(e.statement, e.point) for e in self.entries]


def build_trace(scop: Scop, schedules: Sequence[Schedule], params: ParamSpec,
                cap: int = DEFAULT_ENUM_CAP) -> InstanceTrace:
    values = resolve_params(scop, params)
    by_sid = _schedule_map(scop, schedules)
    entries = [TraceEntry(sid, point, by_sid[sid].timestamp(point))
               for sid, point in enumerate_instances(scop, values, cap)]
    entries.sort(key=lambda e: (e.timestamp, e.statement, e.point))
    return InstanceTrace(values, entries)


def _schedule_map(scop: Scop, schedules: Sequence[Schedule]) -> Dict[int, Schedule]:
    by_sid = {s.statement: s for s in schedules}
    if sorted(by_sid) != list(range(scop.n_statements)):
        raise ScopValidationError("need exactly one schedule per statement")
    for s in scop.statements:
        if by_sid[s.id].rows != scop.rows:
            raise DimensionMismatchError(
                f"schedule of statement {s.id} has {by_sid[s.id].rows} rows, expected {scop.rows}"
            )
    return by_sid


# ---------------------------------------------------------------------------
# Dependent pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InstancePair:
    """``source`` runs before ``target`` in the original program and both touch ``array``."""

    source: int
    target: int
    array: str
    kind: str


@dataclass
class PairSet:
    params: Tuple[int, ...]
    instances: List[Tuple[int, Point]]
    pairs: List[InstancePair]


def dependent_pairs(scop: Scop, params: ParamSpec, include_rar: bool = False,
                    cap: int = DEFAULT_ENUM_CAP, cache: Optional[AnalysisCache] = None) -> PairSet:
    """
    Every ordered pair of distinct instances with a common cell.

    ``source`` and ``target`` index into ``instances``; each instance pair is
    reported once, with the first conflicting array and kind found.
    """
    values = resolve_params(scop, params)
    cache = cache if cache is not None else get_default_cache()
    key = ("pairs", scop.digest(), values, include_rar, cap)
    cached = cache.get(key)
    if cached is not None:
        return cached

    instances = enumerate_instances(scop, values, cap)
    original = {s.statement: s for s in identity_schedules(scop)}
    stamps = [original[sid].timestamp(point) for sid, point in instances]
    cells: Dict[Tuple[str, Point], List[Tuple[Tuple[int, ...], int, str]]] = defaultdict(list)
    for idx, (sid, point) in enumerate(instances):
        for a in scop.statement(sid).accesses:
            cells[(a.array, access_eval(a, point, values))].append((stamps[idx], idx, a.kind))

    found: Dict[Tuple[int, int], InstancePair] = {}
    for (array, _), touches in sorted(cells.items()):
        if not include_rar and all(kind == "read" for _, _, kind in touches):
            continue
        touches.sort()
        for n, (ts_a, ia, ka) in enumerate(touches):
            for ts_b, ib, kb in touches[n + 1:]:
                if ia == ib or ts_a == ts_b:
                    continue
                kind = KIND_BY_ACCESS[(ka, kb)]
                if kind == "RAR" and not include_rar:
                    continue
                found.setdefault((ia, ib), InstancePair(ia, ib, array, kind))
    pairs = [found[k] for k in sorted(found)]
    result = PairSet(values, instances, pairs)
    cache.set(key, result)
    logger.debug("%s: %d instances, %d dependent pairs at %s", scop.name, len(instances),
                 len(pairs), values)
    return result


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass
class Violation:
    source: int
    source_point: Point
    target: int
    target_point: Point
    array: str
    kind: str
    source_time: Tuple[int, ...]
    target_time: Tuple[int, ...]

    def as_dict(self) -> Dict[str, object]:
        return {
            "source": self.source,
            "source_point": list(self.source_point),
            "target": self.target,
            "target_point": list(self.target_point),
            "array": self.array,
            "kind": self.kind,
            "source_time": list(self.source_time),
            "target_time": list(self.target_time),
        }

    def describe(self) -> str:
        return (f"S{self.source}{list(self.source_point)} -> S{self.target}{list(self.target_point)} "
                f"{self.kind} on {self.array}: {list(self.source_time)} !< {list(self.target_time)}")


@dataclass
class LegalityVerdict:
    legal: bool
    params: Tuple[int, ...]
    n_instances: int
    n_pairs: int
    violations: List[Violation] = field(default_factory=list)

    def as_dict(self) -> Dict[str, object]:
        return {
            "legal": self.legal,
            "params": list(self.params),
            "instances": self.n_instances,
            "pairs": self.n_pairs,
            "violations": [v.as_dict() for v in self.violations],
        }


def _new_stamps(scop: Scop, schedules: Sequence[Schedule], pairs: PairSet) -> List[Tuple[int, ...]]:
    by_sid = _schedule_map(scop, schedules)
    return [by_sid[sid].timestamp(point) for sid, point in pairs.instances]


def check_legality(scop: Scop, schedules: Sequence[Schedule], params: ParamSpec,
                   include_rar: bool = False, max_violations: int = DEFAULT_MAX_VIOLATIONS,
                   cap: int = DEFAULT_ENUM_CAP) -> LegalityVerdict:
    """Every dependent pair must keep its order under the new timestamps."""
    ps = dependent_pairs(scop, params, include_rar, cap)
    stamps = _new_stamps(scop, schedules, ps)
    violations: List[Violation] = []
    n_bad = 0
    for p in ps.pairs:
        if stamps[p.source] < stamps[p.target]:
            continue
        n_bad += 1
        if len(violations) < max_violations:
            (rs, rp), (ss, sp) = ps.instances[p.source], ps.instances[p.target]
            violations.append(Violation(rs, rp, ss, sp, p.array, p.kind, stamps[p.source], stamps[p.target]))
    if n_bad:
        logger.info("%s: %d violated pairs at %s", scop.name, n_bad, ps.params)
    return LegalityVerdict(n_bad == 0, ps.params, len(ps.instances), len(ps.pairs), violations)


def _carried_row(a: Tuple[int, ...], b: Tuple[int, ...]) -> int:
    return first_divergence(a, b)


@dataclass
class ParallelVerdict:
    parallel: bool
    row: int
    params: Tuple[int, ...]
    witness: Optional[Tuple[Tuple[int, Point], Tuple[int, Point]]] = None

    def as_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {"parallel": self.parallel, "row": self.row, "params": list(self.params)}
        if self.witness is not None:
            (a, pa), (b, pb) = self.witness
            out["witness"] = [[a, list(pa)], [b, list(pb)]]
        return out


def check_parallel(scop: Scop, schedules: Sequence[Schedule], row: int, params: ParamSpec,
                   statements: Optional[Sequence[int]] = None,
                   cap: int = DEFAULT_ENUM_CAP) -> ParallelVerdict:
    """
    True when no dependent pair is first separated at ``row``.

    ``statements`` restricts the check to pairs whose both ends belong to it.
    """
    if row % 2 == 0 or not 0 < row < scop.rows:
        raise ScopValidationError(f"row {row} is not a linear row of a {scop.rows}-row schedule")
    ps = dependent_pairs(scop, params, False, cap)
    stamps = _new_stamps(scop, schedules, ps)
    keep = set(statements) if statements is not None else None
    for p in ps.pairs:
        a, b = ps.instances[p.source], ps.instances[p.target]
        if keep is not None and (a[0] not in keep or b[0] not in keep):
            continue
        if _carried_row(stamps[p.source], stamps[p.target]) == row:
            return ParallelVerdict(False, row, ps.params, (a, b))
    return ParallelVerdict(True, row, ps.params)


def carried_rows(scop: Scop, schedules: Sequence[Schedule], params: ParamSpec,
                 cap: int = DEFAULT_ENUM_CAP) -> Dict[Tuple[int, int], Set[int]]:
    """Rows at which dependent pairs are first separated, per (source, target) statement pair."""
    ps = dependent_pairs(scop, params, False, cap)
    stamps = _new_stamps(scop, schedules, ps)
    out: Dict[Tuple[int, int], Set[int]] = defaultdict(set)
    for p in ps.pairs:
        key = (ps.instances[p.source][0], ps.instances[p.target][0])
        out[key].add(_carried_row(stamps[p.source], stamps[p.target]))
    return dict(out)


def pi_map(scop: Scop, schedules: Sequence[Schedule], params: ParamSpec,
           cap: int = DEFAULT_ENUM_CAP) -> Dict[int, Dict[int, int]]:
    """``pi[s][row]`` is 1 when no dependence touching ``s`` is carried at ``row``."""
    carried = carried_rows(scop, schedules, params, cap)
    out = {s.id: {r: 1 for r in range(1, scop.rows, 2)} for s in scop.statements}
    for (a, b), rows in carried.items():
        for r in rows:
            if r % 2 == 1:
                out[a][r] = 0
                out[b][r] = 0
    return out


def check_injective(scop: Scop, schedules: Sequence[Schedule], params: ParamSpec,
                    cap: int = DEFAULT_ENUM_CAP) -> List[Tuple[int, Point, Point]]:
    """Pairs of instances of one statement that share a timestamp."""
    values = resolve_params(scop, params)
    by_sid = _schedule_map(scop, schedules)
    seen: Dict[Tuple[int, Tuple[int, ...]], Point] = {}
    clashes = []
    for sid, point in enumerate_instances(scop, values, cap):
        key = (sid, by_sid[sid].timestamp(point))
        if key in seen:
            clashes.append((sid, seen[key], point))
        else:
            seen[key] = point
    return clashes


@dataclass
class VerificationReport:
    legal: bool
    injective: bool
    verdicts: List[LegalityVerdict]
    clashes: List[Tuple[int, Point, Point]]

    @property
    def ok(self) -> bool:
        return self.legal and self.injective

    @property
    def violations(self) -> List[Violation]:
        return [v for verdict in self.verdicts for v in verdict.violations]

    def as_dict(self) -> Dict[str, object]:
        return {
            "legal": self.legal,
            "injective": self.injective,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "clashes": [[sid, list(a), list(b)] for sid, a, b in self.clashes],
        }


def verify(scop: Scop, schedules: Sequence[Schedule],
           params_list: Sequence[ParamSpec] = DEFAULT_VERIFY_PARAMS,
           include_rar: bool = False, max_violations: int = DEFAULT_MAX_VIOLATIONS,
           cap: int = DEFAULT_ENUM_CAP) -> VerificationReport:
    """Legality and per-statement injectivity at every parameter setting."""
    verdicts = []
    clashes: List[Tuple[int, Point, Point]] = []
    for params in params_list:
        verdicts.append(check_legality(scop, schedules, params, include_rar, max_violations, cap))
        clashes.extend(check_injective(scop, schedules, params, cap))
    report = VerificationReport(all(v.legal for v in verdicts), not clashes, verdicts, clashes)
    logger.info("%s: verification %s", scop.name, "passed" if report.ok else "failed")
    return report
