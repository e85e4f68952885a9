# polyvocab/recipes.py
"""
Program classification, recipe selection and the scheduling driver.

``schedule`` is the one-shot path: dependences, SCCs and metrics feed the
classifier, the class and machine pick a recipe, the recipe's idioms shape
one lexicographic ILP over the legal space, and the solution is checked by
the instance oracle before it is returned.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .config import MachineModel, RunConfig
from .dependence import (
    DependencePolyhedron,
    SccGraph,
    ScopMetrics,
    build_scc,
    compute_dependences,
    metrics as compute_metrics,
)
from .exceptions import InfeasibleError, LegalityViolation, RecipeError
from .idioms import IDIOM_IDS, IdiomContext, IdiomReport
from .ilp import Assignment
from .legality import LegalSpace
from .scop import Schedule, Scop
from .verifier import VerificationReport, pi_map, verify

logger = logging.getLogger(__name__)

SO_DEPENDENCE_LIMIT = 50


class ProgramClass(str, Enum):
    STEN = "STEN"
    LDLC = "LDLC"
    HPFP = "HPFP"
    OTHER = "OTHER"


@dataclass(frozen=True)
class Recipe:
    """Ordered idioms, highest priority first."""

    program_class: ProgramClass
    idioms: Tuple[str, ...]
    machine: MachineModel
    custom: bool = False
    skipped: Tuple[str, ...] = ()

    @property
    def selector(self) -> str:
        if self.custom:
            return "custom:" + ",".join(self.idioms)
        return self.program_class.value.lower()

    def as_dict(self) -> Dict[str, object]:
        return {
            "class": self.program_class.value,
            "idioms": list(self.idioms),
            "machine": self.machine.name,
            "multi_skew": self.machine.multi_skew,
            "custom": self.custom,
            "skipped": list(self.skipped),
        }


def classify(metrics: ScopMetrics) -> ProgramClass:
    if metrics.is_stencil and metrics.n_dep <= 3 * metrics.dim_theta:
        return ProgramClass.STEN
    if metrics.dim_theta <= 5:
        return ProgramClass.LDLC
    if metrics.n_scc >= metrics.n_self_dep:
        return ProgramClass.HPFP
    return ProgramClass.OTHER


def build_recipe(program_class: ProgramClass, metrics: ScopMetrics, machine: MachineModel) -> Recipe:
    skipped: List[str] = []
    if program_class == ProgramClass.STEN:
        idioms = ["SMVS", "SDC", "SPAR"]
    elif program_class == ProgramClass.LDLC:
        idioms = ["SO", "IP", "OPIR", "SIS", "DGF", "OP"]
    elif program_class == ProgramClass.HPFP:
        idioms = []
        if metrics.n_self_dep <= metrics.n_scc:
            idioms += ["SO", "IP", "OPIR"]
        else:
            skipped += ["SO", "IP", "OPIR"]
        idioms += ["SIS", "DGF", "OP"]
    else:
        idioms = []
        if metrics.n_dep < SO_DEPENDENCE_LIMIT:
            idioms.append("SO")
        else:
            skipped.append("SO")
        idioms += ["OP", "SN"]
    return Recipe(program_class, tuple(idioms), machine, skipped=tuple(skipped))


def parse_idiom_list(text: str) -> Tuple[str, ...]:
    names = [w.strip().upper() for w in text.split(",") if w.strip()]
    if not names:
        raise RecipeError("custom recipe lists no idioms", valid=list(IDIOM_IDS))
    unknown = [n for n in names if n not in IDIOM_IDS]
    if unknown:
        raise RecipeError(
            f"unknown idiom(s) {', '.join(unknown)}; valid idioms: {', '.join(IDIOM_IDS)}",
            unknown=unknown, valid=list(IDIOM_IDS),
        )
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise RecipeError(f"idiom(s) listed twice: {', '.join(dupes)}", duplicates=dupes)
    return tuple(names)


def parse_recipe(selector: str, metrics: ScopMetrics, machine: MachineModel) -> Recipe:
    """
    Resolve ``auto``, a class name (``sten``, ``ldlc``, ``hpfp``, ``other``) or
    ``custom:<idiom,...>``. A bare comma-separated idiom list is read as custom.
    """
    sel = selector.strip()
    low = sel.lower()
    if low == "auto":
        return build_recipe(classify(metrics), metrics, machine)
    by_name = {c.value.lower(): c for c in ProgramClass}
    if low in by_name:
        return build_recipe(by_name[low], metrics, machine)
    if low.startswith("custom:"):
        body = sel[len("custom:"):]
    elif "," in sel or sel.upper() in IDIOM_IDS:
        body = sel
    else:
        raise RecipeError(
            f"unknown recipe {selector!r}; use auto, sten, ldlc, hpfp, other or custom:<idioms>",
            valid=list(IDIOM_IDS),
        )
    return Recipe(classify(metrics), parse_idiom_list(body), machine, custom=True)


@dataclass
class Analysis:
    scop: Scop
    deps: List[DependencePolyhedron]
    sccs: SccGraph
    metrics: ScopMetrics

    @property
    def program_class(self) -> ProgramClass:
        return classify(self.metrics)


def analyze(scop: Scop, config: Optional[RunConfig] = None) -> Analysis:
    config = config or RunConfig()
    deps = compute_dependences(scop, param_min=config.param_min, param_span=config.param_span)
    sccs = build_scc(scop, deps)
    return Analysis(scop, deps, sccs, compute_metrics(scop, deps, sccs))


@dataclass
class ScheduleResult:
    scop: Scop
    recipe: Recipe
    analysis: Analysis
    schedules: List[Schedule]
    assignment: Assignment
    space: LegalSpace
    reports: List[IdiomReport]
    verification: VerificationReport
    satisfied: Dict[str, int] = field(default_factory=dict)
    pi: Dict[int, Dict[int, int]] = field(default_factory=dict)

    @property
    def objectives(self) -> List[Tuple[str, object]]:
        labels = [o.label for o in self.space.sys.objectives]
        return list(zip(labels, self.assignment.objective_values))

    @property
    def timed_out(self) -> bool:
        return self.assignment.timed_out

    def as_dict(self) -> Dict[str, object]:
        return {
            "scop": self.scop.name,
            "class": self.analysis.program_class.value,
            "recipe": self.recipe.as_dict(),
            "metrics": self.analysis.metrics.as_dict(),
            "objectives": [{"label": label, "value": str(value)} for label, value in self.objectives],
            "satisfied": dict(sorted(self.satisfied.items())),
            "pi": {f"S{s}": {str(r): v for r, v in rows.items()} for s, rows in sorted(self.pi.items())},
            "schedules": [s.matrix() for s in self.schedules],
            "timed_out": self.timed_out,
            "nodes": self.assignment.nodes,
            "verification": self.verification.as_dict(),
        }


def assemble(analysis: Analysis, idioms: Sequence[str], machine: MachineModel,
             config: RunConfig) -> Tuple[LegalSpace, List[IdiomReport]]:
    """Legal space with ``idioms`` applied and legality emitted, not yet solved."""
    space = LegalSpace(analysis.scop, analysis.deps, tuple(config.coeff_window), config.k)
    ctx = IdiomContext(analysis.scop, analysis.deps, analysis.sccs, analysis.metrics, machine, space)
    reports = ctx.apply_recipe(idioms)
    space.emit()
    return space, reports


def _solve(analysis: Analysis, recipe: Recipe, idioms: Sequence[str], machine: MachineModel,
           config: RunConfig) -> ScheduleResult:
    scop = analysis.scop
    logger.info("%s: class %s, recipe %s on %s", scop.name, analysis.program_class.value,
                ",".join(idioms) or "(none)", machine.name)
    space, reports = assemble(analysis, idioms, machine, config)
    try:
        assignment = space.sys.solve_lex(config.time_budget, leaf_check=space.injectivity_check())
    except InfeasibleError as exc:
        logger.error("%s: scheduling system infeasible at %s", scop.name, exc.level)
        logger.debug("%s", space.sys.dump_lp())
        raise InfeasibleError(f"{scop.name}: scheduling system infeasible at {exc.level}",
                              level=exc.level, recipe=list(idioms))
    if assignment.timed_out:
        logger.warning("%s: time budget hit, using the best schedule found", scop.name)
    schedules = space.layout.schedules(assignment)
    report = verify(scop, schedules, config.verify_params, cap=config.enum_cap)
    if not report.ok:
        raise LegalityViolation(
            f"{scop.name}: produced schedule fails verification",
            violations=[v.describe() for v in report.violations],
            clashes=len(report.clashes),
        )
    satisfied = {}
    for d in analysis.deps:
        satisfied[d.name] = next(r for r in range(scop.rows) if assignment[space.layout.delta[(d.index, r)]] == 1)
    pi = pi_map(scop, schedules, max(config.verify_params), cap=config.enum_cap)
    logger.info("%s: schedule verified at %s", scop.name, config.verify_params)
    return ScheduleResult(scop, recipe, analysis, schedules, assignment, space, reports, report, satisfied, pi)


def schedule(scop: Scop, recipe: Optional[Recipe] = None, machine: Optional[MachineModel] = None,
             config: Optional[RunConfig] = None, analysis: Optional[Analysis] = None) -> ScheduleResult:
    """Schedule ``scop`` with ``recipe`` (or the configured selector)."""
    config = config or RunConfig()
    machine = machine or (recipe.machine if recipe else config.resolve_machine())
    analysis = analysis or analyze(scop, config)
    recipe = recipe or parse_recipe(config.recipe, analysis.metrics, machine)
    return _solve(analysis, recipe, recipe.idioms, machine, config)


def schedule_prefix(scop: Scop, recipe: Recipe, k: int, config: Optional[RunConfig] = None,
                    analysis: Optional[Analysis] = None) -> ScheduleResult:
    """Schedule with only the first ``k`` idioms of ``recipe``."""
    if k < 0 or k > len(recipe.idioms):
        raise RecipeError(f"prefix {k} out of range for a {len(recipe.idioms)}-idiom recipe")
    config = config or RunConfig()
    analysis = analysis or analyze(scop, config)
    return _solve(analysis, recipe, recipe.idioms[:k], recipe.machine, config)
