# polyvocab/scop.py
"""
Static-control program model and its text format.

A SCoP document looks like::

    polyvocab-scop v1
    scop gemm
    param N
    context N >= 1
    statement 0 S0
      iters i j k
      domain 0 <= i < N
      domain 0 <= j < N
      domain 0 <= k < N
      access write C [i][j]
      access read C [i][j]
      access read A [i][k]
      access read B [k][j]
      beta 0 0 0 0
      text "C[i][j] += A[i][k] * B[k][j];"
    end

Accesses may also be written in matrix form
(``access read A [1 0 0] [0 0 1] offsets [0 0] params [0] [0]``), which is the
form :func:`serialize_scop` emits.
"""

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .exceptions import DimensionMismatchError, ScopSyntaxError, ScopValidationError

logger = logging.getLogger(__name__)

HEADER = "polyvocab-scop v1"
SCHEDULE_HEADER = "polyvocab-schedule v1"

Row = Tuple[int, ...]


@dataclass(frozen=True)
class AccessFunction:
    """Affine subscript map ``matrix·x + param_part·n + offsets``."""

    array: str
    kind: str
    matrix: Tuple[Row, ...]
    offsets: Row
    param_part: Tuple[Row, ...]

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def is_write(self) -> bool:
        return self.kind == "write"

    @property
    def fvd(self) -> Row:
        """Fastest-varying (last) subscript row."""
        return self.matrix[-1]

    def iterators_used(self) -> List[int]:
        return [k for k in range(len(self.matrix[0])) if any(row[k] for row in self.matrix)]


@dataclass(frozen=True)
class Statement:
    id: int
    label: str
    iterators: Tuple[str, ...]
    domain: Tuple[Row, ...]
    accesses: Tuple[AccessFunction, ...]
    beta: Row
    text: Optional[str] = None

    @property
    def dim(self) -> int:
        return len(self.iterators)

    @property
    def reads(self) -> List[AccessFunction]:
        return [a for a in self.accesses if not a.is_write]

    @property
    def writes(self) -> List[AccessFunction]:
        return [a for a in self.accesses if a.is_write]


@dataclass(frozen=True)
class Scop:
    name: str
    parameters: Tuple[str, ...]
    context: Tuple[Row, ...]
    statements: Tuple[Statement, ...]

    @property
    def dloop(self) -> int:
        return max(s.dim for s in self.statements)

    @property
    def rows(self) -> int:
        return 2 * self.dloop + 1

    @property
    def n_statements(self) -> int:
        return len(self.statements)

    def statement(self, sid: int) -> Statement:
        return self.statements[sid]

    def arrays(self) -> List[str]:
        return sorted({a.array for s in self.statements for a in s.accesses})

    def common_loops(self, r: int, s: int) -> int:
        """Number of loops shared by statements ``r`` and ``s``."""
        if r == s:
            return self.statements[r].dim
        return first_divergence(self.beta_of(r), self.beta_of(s))

    def beta_of(self, sid: int) -> Row:
        """β vector padded with zeros to ``dloop + 1`` entries."""
        beta = self.statements[sid].beta
        return beta + (0,) * (self.dloop + 1 - len(beta))

    def digest(self) -> str:
        return hashlib.sha256(serialize_scop(self).encode("utf-8")).hexdigest()


def first_divergence(a: Sequence[int], b: Sequence[int]) -> int:
    for idx, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return idx
    return min(len(a), len(b))


@dataclass(frozen=True)
class Schedule:
    """
    2d+1 schedule of one statement.

    ``linear[k]`` holds the iterator coefficients of odd row ``2k+1`` and
    ``shifts[k]`` its constant; ``beta[k]`` is the value of even row ``2k``.
    """

    statement: int
    linear: Tuple[Row, ...]
    shifts: Row
    beta: Row

    @property
    def rows(self) -> int:
        return 2 * len(self.linear) + 1

    def row(self, r: int) -> Tuple[Row, int]:
        """Iterator coefficients and constant of row ``r``."""
        width = len(self.linear[0]) if self.linear else 0
        if r % 2 == 0:
            return (0,) * width, self.beta[r // 2]
        return self.linear[r // 2], self.shifts[r // 2]

    def timestamp(self, point: Sequence[int]) -> Tuple[int, ...]:
        stamp: List[int] = []
        for k, b in enumerate(self.beta):
            stamp.append(b)
            if k < len(self.linear):
                coeffs = self.linear[k]
                stamp.append(sum(c * x for c, x in zip(coeffs, point)) + self.shifts[k])
        return tuple(stamp)

    def matrix(self) -> List[List[int]]:
        """Dense ``rows × (dim+1)`` matrix, constant column last."""
        out = []
        for r in range(self.rows):
            coeffs, const = self.row(r)
            out.append(list(coeffs) + [const])
        return out


def identity_schedule(statement: Statement, dloop: int) -> Schedule:
    """Original-order schedule: odd row ``2k+1`` selects iterator ``k``."""
    linear = []
    for k in range(dloop):
        linear.append(tuple(1 if (j == k) else 0 for j in range(statement.dim)))
    beta = statement.beta + (0,) * (dloop + 1 - len(statement.beta))
    return Schedule(statement.id, tuple(linear), (0,) * dloop, beta)


def identity_schedules(scop: Scop) -> List[Schedule]:
    return [identity_schedule(s, scop.dloop) for s in scop.statements]


def access_eval(access: AccessFunction, point: Sequence[int],
                params: Sequence[int] = ()) -> Tuple[int, ...]:
    """Evaluate an access function at an iteration point."""
    width = len(access.matrix[0])
    if len(point) != width:
        raise DimensionMismatchError(
            f"point has {len(point)} coordinates, access to {access.array} expects {width}"
        )
    values = []
    for row, prow, off in zip(access.matrix, access.param_part, access.offsets):
        v = sum(c * x for c, x in zip(row, point)) + off
        v += sum(c * p for c, p in zip(prow, params))
        values.append(v)
    return tuple(values)


def domain_contains(statement: Statement, point: Sequence[int], params: Sequence[int]) -> bool:
    full = list(point) + list(params) + [1]
    return all(sum(c * v for c, v in zip(row, full)) >= 0 for row in statement.domain)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|([-+*]))")
_RELATION = re.compile(r"(>=|<=|==|>|<|=)")
_BRACKET = re.compile(r"\[([^\]]*)\]")


class _Line:
    def __init__(self, number: int, raw: str):
        self.number = number
        self.raw = raw

    def error(self, message: str, column: int = 1) -> ScopSyntaxError:
        return ScopSyntaxError(message, line=self.number, column=column)

    def column_of(self, fragment: str, start: int = 0) -> int:
        idx = self.raw.find(fragment, start)
        return idx + 1 if idx >= 0 else 1


def parse_affine(text: str, names: Sequence[str], line: _Line,
                 offset: int = 0) -> Tuple[List[int], int]:
    """
    Parse ``2*i - N + 1`` into coefficients over ``names`` plus a constant.

    ``offset`` is the column of ``text`` inside the raw line, for diagnostics.
    """
    index = {n: k for k, n in enumerate(names)}
    tokens: List[Tuple[str, str, int]] = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise line.error(f"unexpected character {text[pos:pos + 1]!r}", offset + pos + 1)
        if m.group(1):
            tokens.append(("int", m.group(1), offset + m.start(1) + 1))
        elif m.group(2):
            tokens.append(("name", m.group(2), offset + m.start(2) + 1))
        else:
            tokens.append(("op", m.group(3), offset + m.start(3) + 1))
        pos = m.end()
    if not tokens:
        raise line.error("empty affine expression", offset + 1)

    coeffs = [0] * len(names)
    const = 0
    k = 0

    def peek() -> Optional[Tuple[str, str, int]]:
        return tokens[k] if k < len(tokens) else None

    while True:
        sign = 1
        tok = peek()
        while tok is not None and tok[0] == "op" and tok[1] in "+-":
            if tok[1] == "-":
                sign = -sign
            k += 1
            tok = peek()
        if tok is None:
            raise line.error("expression ends with an operator", offset + len(text) + 1)
        value = 1
        name = None
        if tok[0] == "int":
            value = int(tok[1])
            k += 1
            nxt = peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "*":
                k += 1
                nxt = peek()
                if nxt is None or nxt[0] != "name":
                    raise line.error("expected a name after '*'", nxt[2] if nxt else offset + len(text) + 1)
            if nxt is not None and nxt[0] == "name":
                name = nxt
                k += 1
        elif tok[0] == "name":
            name = tok
            k += 1
            nxt = peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "*":
                k += 1
                nxt = peek()
                if nxt is None or nxt[0] != "int":
                    raise line.error("expected an integer after '*'", nxt[2] if nxt else offset + len(text) + 1)
                value = int(nxt[1])
                k += 1
        else:
            raise line.error(f"unexpected {tok[1]!r}", tok[2])

        if name is None:
            const += sign * value
        else:
            if name[1] not in index:
                raise line.error(f"unknown name {name[1]!r}", name[2])
            coeffs[index[name[1]]] += sign * value

        tok = peek()
        if tok is None:
            break
        if tok[0] != "op" or tok[1] not in "+-":
            raise line.error(f"unexpected {tok[1]!r}", tok[2])
    return coeffs, const


def parse_relation(text: str, names: Sequence[str], line: _Line, offset: int = 0) -> List[Row]:
    """
    Parse a (possibly chained) affine relation into rows meaning ``row·(names,1) >= 0``.

    A bare expression means ``expr >= 0``.
    """
    parts = _RELATION.split(text)
    exprs = []
    cursor = 0
    for idx, part in enumerate(parts):
        if idx % 2 == 0:
            exprs.append(parse_affine(part, names, line, offset + cursor))
        cursor += len(part)
    ops = parts[1::2]
    if not ops:
        coeffs, const = exprs[0]
        return [tuple(coeffs) + (const,)]
    rows: List[Row] = []
    for (lc, lk), op, (rc, rk) in zip(exprs, ops, exprs[1:]):
        diff = [a - b for a, b in zip(lc, rc)]
        dk = lk - rk
        if op == ">=":
            rows.append(tuple(diff) + (dk,))
        elif op == ">":
            rows.append(tuple(diff) + (dk - 1,))
        elif op == "<=":
            rows.append(tuple(-d for d in diff) + (-dk,))
        elif op == "<":
            rows.append(tuple(-d for d in diff) + (-dk - 1,))
        else:
            rows.append(tuple(diff) + (dk,))
            rows.append(tuple(-d for d in diff) + (-dk,))
    return rows


def _int_list(body: str, line: _Line, start: int = 0) -> List[int]:
    try:
        return [int(tok) for tok in body.replace(",", " ").split()]
    except ValueError:
        raise line.error(f"expected integers, got [{body}]", line.column_of(body, start))


def _strip_comment(raw: str) -> str:
    quoted = False
    for idx, ch in enumerate(raw):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return raw[:idx]
    return raw


@dataclass
class _StatementDraft:
    id: int
    label: str
    line: _Line
    iterators: Optional[Tuple[str, ...]] = None
    domain: List[Row] = field(default_factory=list)
    accesses: List[AccessFunction] = field(default_factory=list)
    beta: Optional[Row] = None
    text: Optional[str] = None


def _parse_access(rest: str, draft: _StatementDraft, params: Sequence[str], line: _Line) -> AccessFunction:
    words = rest.split(None, 2)
    if len(words) < 3:
        raise line.error("access needs a kind, an array and subscripts", line.column_of("access"))
    kind, array, subs = words
    if kind not in ("read", "write"):
        raise line.error(f"access kind must be read or write, got {kind!r}", line.column_of(kind))
    assert draft.iterators is not None
    dim = len(draft.iterators)
    subs_col = line.raw.find(subs)

    if re.search(r"\boffsets\b", subs):
        head, _, tail = subs.partition("offsets")
        rows = [_int_list(m.group(1), line) for m in _BRACKET.finditer(head)]
        off_part, _, par_part = tail.partition("params")
        offs = [_int_list(m.group(1), line) for m in _BRACKET.finditer(off_part)]
        prows = [_int_list(m.group(1), line) for m in _BRACKET.finditer(par_part)]
        if not rows:
            raise line.error("access has no subscript rows", subs_col + 1)
        for row in rows:
            if len(row) != dim:
                raise DimensionMismatchError(
                    f"access to {array} has {len(row)} columns under a {dim}-iterator statement",
                    line=line.number, statement=draft.id,
                )
        offsets = offs[0] if offs else [0] * len(rows)
        if len(offsets) != len(rows):
            raise DimensionMismatchError(f"access to {array}: {len(offsets)} offsets for {len(rows)} rows",
                                         line=line.number, statement=draft.id)
        if not prows:
            prows = [[0] * len(params) for _ in rows]
        if len(prows) != len(rows) or any(len(p) != len(params) for p in prows):
            raise DimensionMismatchError(f"access to {array}: parameter part does not match",
                                         line=line.number, statement=draft.id)
        return AccessFunction(array, kind, tuple(tuple(r) for r in rows), tuple(offsets),
                              tuple(tuple(p) for p in prows))

    names = list(draft.iterators) + list(params)
    rows_, offsets_, prows_ = [], [], []
    for m in _BRACKET.finditer(subs):
        coeffs, const = parse_affine(m.group(1), names, line, subs_col + m.start(1))
        rows_.append(tuple(coeffs[:dim]))
        prows_.append(tuple(coeffs[dim:]))
        offsets_.append(const)
    if not rows_:
        raise line.error(f"access to {array} has no subscripts", subs_col + 1)
    return AccessFunction(array, kind, tuple(rows_), tuple(offsets_), tuple(prows_))


def parse_scop(text: str, check_domains: bool = True, param_min: Optional[int] = None) -> Scop:
    """
    Parse and validate a SCoP document.

    Raises:
        ScopSyntaxError: malformed line, with line/column
        DimensionMismatchError: access columns disagree with the statement
        ScopValidationError: duplicate ids, inconsistent arrays, empty domains
    """
    lines = [_Line(n, raw) for n, raw in enumerate(text.splitlines(), start=1)]
    name: Optional[str] = None
    params: List[str] = []
    context: List[Row] = []
    drafts: List[_StatementDraft] = []
    current: Optional[_StatementDraft] = None
    seen_header = False

    for line in lines:
        body = _strip_comment(line.raw).strip()
        if not body:
            continue
        if not seen_header:
            if " ".join(body.split()) != HEADER:
                raise line.error(f"expected header '{HEADER}'", line.column_of(body))
            seen_header = True
            continue
        keyword, _, rest = body.partition(" ")
        rest = rest.strip()
        rest_col = line.raw.find(rest, line.raw.find(keyword) + len(keyword)) if rest else 0

        if current is None:
            if keyword == "scop":
                name = rest
            elif keyword == "param":
                for p in rest.split():
                    if p in params:
                        raise ScopValidationError(f"duplicate parameter {p}", line=line.number)
                    params.append(p)
            elif keyword == "context":
                context.extend(parse_relation(rest, params, line, rest_col))
            elif keyword == "statement":
                words = rest.split()
                if not words:
                    raise line.error("statement needs an id", line.column_of(keyword))
                try:
                    sid = int(words[0])
                except ValueError:
                    raise line.error(f"statement id must be an integer, got {words[0]!r}",
                                     line.column_of(words[0], rest_col))
                if any(d.id == sid for d in drafts):
                    raise ScopValidationError(f"duplicate statement id {sid}", line=line.number)
                label = words[1] if len(words) > 1 else f"S{sid}"
                current = _StatementDraft(sid, label, line)
            else:
                raise line.error(f"unknown keyword {keyword!r}", line.column_of(keyword))
            continue

        if keyword == "end":
            if current.iterators is None:
                raise current.line.error(f"statement {current.id} declares no iterators")
            drafts.append(current)
            current = None
        elif keyword == "iters":
            current.iterators = tuple(rest.split())
            if not current.iterators:
                raise line.error("statement needs at least one iterator", line.column_of(keyword))
        elif current.iterators is None:
            raise line.error(f"'{keyword}' before 'iters'", line.column_of(keyword))
        elif keyword == "domain":
            current.domain.extend(parse_relation(rest, list(current.iterators) + params, line, rest_col))
        elif keyword == "access":
            current.accesses.append(_parse_access(rest, current, params, line))
        elif keyword == "beta":
            current.beta = tuple(_int_list(rest, line))
        elif keyword == "text":
            try:
                current.text = json.loads(rest)
            except ValueError:
                raise line.error("text must be a double-quoted string", rest_col + 1)
        else:
            raise line.error(f"unknown statement keyword {keyword!r}", line.column_of(keyword))

    if not seen_header:
        raise ScopSyntaxError(f"missing header '{HEADER}'", line=1, column=1)
    if current is not None:
        raise current.line.error(f"statement {current.id} is missing 'end'")
    if name is None:
        raise ScopSyntaxError("missing 'scop <name>' line", line=1, column=1)
    if not drafts:
        raise ScopValidationError("SCoP has no statements")

    statements = []
    for pos, d in enumerate(drafts):
        if d.id != pos:
            raise ScopValidationError(f"statement id {d.id} does not match its position {pos}",
                                      line=d.line.number)
        beta = d.beta if d.beta is not None else (pos,) + (0,) * len(d.iterators)
        if len(beta) != len(d.iterators) + 1:
            raise DimensionMismatchError(
                f"statement {d.id}: beta has {len(beta)} entries, expected {len(d.iterators) + 1}",
                line=d.line.number,
            )
        if any(b < 0 or b > len(drafts) for b in beta):
            raise ScopValidationError(f"statement {d.id}: beta values must lie in [0, {len(drafts)}]",
                                      line=d.line.number)
        statements.append(Statement(d.id, d.label, d.iterators, tuple(d.domain),
                                    tuple(d.accesses), beta, d.text))

    scop = Scop(name, tuple(params), tuple(context), tuple(statements))
    validate_scop(scop)
    if check_domains:
        check_nonempty_domains(scop, param_min)
    return scop


def validate_scop(scop: Scop) -> None:
    ranks: Dict[str, int] = {}
    nparams = len(scop.parameters)
    for row in scop.context:
        if len(row) != nparams + 1:
            raise DimensionMismatchError("context row does not match the parameter list")
    for s in scop.statements:
        for row in s.domain:
            if len(row) != s.dim + nparams + 1:
                raise DimensionMismatchError(f"statement {s.id}: domain row has the wrong width")
        for a in s.accesses:
            if a.dim < 1:
                raise ScopValidationError(f"statement {s.id}: access to {a.array} has no subscripts")
            if any(len(r) != s.dim for r in a.matrix):
                raise DimensionMismatchError(
                    f"statement {s.id}: access to {a.array} has {len(a.matrix[0])} columns, "
                    f"statement has {s.dim} iterators",
                    statement=s.id,
                )
            if ranks.setdefault(a.array, a.dim) != a.dim:
                raise ScopValidationError(
                    f"array {a.array} is accessed with ranks {ranks[a.array]} and {a.dim}",
                    statement=s.id,
                )
    for r in scop.statements:
        for s in scop.statements[r.id + 1:]:
            br, bs = scop.beta_of(r.id), scop.beta_of(s.id)
            c = first_divergence(br, bs)
            if c > min(r.dim, s.dim) or br[c] > bs[c]:
                raise ScopValidationError(
                    f"beta of statements {r.id} and {s.id} contradicts their textual order",
                    statements=[r.id, s.id],
                )


def default_param_min(scop: Scop) -> int:
    return 2 * scop.dloop + 2


def check_nonempty_domains(scop: Scop, param_min: Optional[int] = None, span: int = 8) -> None:
    """Every statement must own an integer point for some parameters in ``[pmin, pmin+span]``."""
    from .ilp import IlpSystem

    pmin = default_param_min(scop) if param_min is None else param_min
    for s in scop.statements:
        sys = IlpSystem(f"domain_{s.id}")
        xs = [sys.add_variable(f"x_{it}", "integer", -10**6, 10**6) for it in s.iterators]
        ps = [sys.add_variable(f"p_{p}", "integer", pmin, pmin + span) for p in scop.parameters]
        for row in scop.context:
            sys.add_constraint(sys.expr(zip(row, ps), row[-1]), ">=", 0)
        for row in s.domain:
            sys.add_constraint(sys.expr(zip(row, xs + ps), row[-1]), ">=", 0)
        feasible, _ = sys.check_feasible()
        if not feasible:
            raise ScopValidationError(f"statement {s.id} has an empty domain at parameters >= {pmin}",
                                      statement=s.id)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def format_affine(coeffs: Sequence[int], names: Sequence[str], const: int) -> str:
    parts: List[str] = []
    for c, n in zip(coeffs, names):
        if c == 0:
            continue
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        if not parts:
            parts.append(f"-{mag}{n}" if c < 0 else f"{mag}{n}")
        else:
            parts.append(f"- {mag}{n}" if c < 0 else f"+ {mag}{n}")
    if const or not parts:
        if not parts:
            parts.append(str(const))
        else:
            parts.append(f"- {abs(const)}" if const < 0 else f"+ {const}")
    return " ".join(parts)


def _ints(values: Iterable[int]) -> str:
    return "[" + " ".join(str(v) for v in values) + "]"


def serialize_scop(scop: Scop) -> str:
    """Canonical, deterministic text form; ``parse_scop`` inverts it."""
    out = [HEADER, f"scop {scop.name}"]
    for p in scop.parameters:
        out.append(f"param {p}")
    for row in scop.context:
        out.append(f"context {format_affine(row[:-1], scop.parameters, row[-1])} >= 0")
    for s in scop.statements:
        names = list(s.iterators) + list(scop.parameters)
        out.append(f"statement {s.id} {s.label}")
        out.append(f"  iters {' '.join(s.iterators)}")
        for row in s.domain:
            out.append(f"  domain {format_affine(row[:-1], names, row[-1])} >= 0")
        for a in s.accesses:
            rows = " ".join(_ints(r) for r in a.matrix)
            prows = " ".join(_ints(r) for r in a.param_part)
            out.append(f"  access {a.kind} {a.array} {rows} offsets {_ints(a.offsets)} params {prows}")
        out.append(f"  beta {' '.join(str(b) for b in s.beta)}")
        if s.text is not None:
            out.append(f"  text {json.dumps(s.text)}")
        out.append("end")
    return "\n".join(out) + "\n"


def serialize_schedules(scop: Scop, schedules: Sequence[Schedule]) -> str:
    out = [SCHEDULE_HEADER, f"scop {scop.name}"]
    for sched in schedules:
        out.append(f"schedule {sched.statement} {scop.statement(sched.statement).label}")
        for r, row in enumerate(sched.matrix()):
            out.append(f"  row {r} {_ints(row)}")
        out.append("end")
    return "\n".join(out) + "\n"


def parse_schedules(text: str, scop: Scop) -> List[Schedule]:
    """Read a schedule document written by :func:`serialize_schedules`."""
    lines = [_Line(n, raw) for n, raw in enumerate(text.splitlines(), start=1)]
    schedules: List[Schedule] = []
    rows: Dict[int, List[int]] = {}
    sid: Optional[int] = None
    seen_header = False
    for line in lines:
        body = _strip_comment(line.raw).strip()
        if not body:
            continue
        if not seen_header:
            if " ".join(body.split()) != SCHEDULE_HEADER:
                raise line.error(f"expected header '{SCHEDULE_HEADER}'")
            seen_header = True
            continue
        keyword, _, rest = body.partition(" ")
        if keyword == "scop":
            if rest.strip() != scop.name:
                raise ScopValidationError(f"schedule document is for {rest.strip()!r}, not {scop.name!r}")
        elif keyword == "schedule":
            try:
                sid = int(rest.split()[0])
            except (ValueError, IndexError):
                raise line.error("schedule needs a statement id", line.column_of(keyword))
            rows = {}
        elif keyword == "row" and sid is not None:
            head, _, tail = rest.partition("[")
            try:
                r = int(head)
            except ValueError:
                raise line.error("row needs an index", line.column_of(keyword))
            rows[r] = _int_list(tail.rstrip("]"), line)
        elif keyword == "end" and sid is not None:
            schedules.append(_schedule_from_rows(scop, sid, rows, line))
            sid = None
        else:
            raise line.error(f"unexpected {keyword!r}", line.column_of(keyword))
    if len(schedules) != scop.n_statements:
        raise ScopValidationError(
            f"schedule document has {len(schedules)} schedules for {scop.n_statements} statements"
        )
    return sorted(schedules, key=lambda s: s.statement)


def _schedule_from_rows(scop: Scop, sid: int, rows: Dict[int, List[int]], line: _Line) -> Schedule:
    if sid < 0 or sid >= scop.n_statements:
        raise ScopValidationError(f"unknown statement {sid}", line=line.number)
    stmt = scop.statement(sid)
    if sorted(rows) != list(range(scop.rows)):
        raise DimensionMismatchError(f"schedule {sid} must have rows 0..{scop.rows - 1}", line=line.number)
    linear, shifts, beta = [], [], []
    for r in range(scop.rows):
        row = rows[r]
        if len(row) != stmt.dim + 1:
            raise DimensionMismatchError(f"schedule {sid} row {r} has {len(row)} entries", line=line.number)
        if r % 2 == 0:
            if any(row[:-1]):
                raise ScopValidationError(f"schedule {sid}: scalar row {r} has iterator coefficients",
                                          line=line.number)
            beta.append(row[-1])
        else:
            linear.append(tuple(row[:-1]))
            shifts.append(row[-1])
    return Schedule(sid, tuple(linear), tuple(shifts), tuple(beta))
