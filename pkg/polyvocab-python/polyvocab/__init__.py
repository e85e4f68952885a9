"""
polyvocab - affine scheduling driven by a vocabulary of performance idioms.
"""

from .scop import Scop, Statement, AccessFunction, Schedule, parse_scop, serialize_scop
from .scop import parse_schedules, serialize_schedules, identity_schedules
from .ilp import IlpSystem, LinExpr, Assignment, INTEGER, RATIONAL
from .dependence import DependencePolyhedron, SccGraph, ScopMetrics, compute_dependences, build_scc, metrics
from .legality import LegalSpace, farkas_certify, pin_schedules
from .idioms import IDIOM_IDS, IdiomContext, IdiomReport, build_mgr, compute_stride_weights
from .recipes import ProgramClass, Recipe, Analysis, ScheduleResult, analyze, classify, parse_recipe
from .recipes import schedule, schedule_prefix
from .loopast import LoopAst, LoopNode, build_loop_ast
from .rcou import UnrollFactors, RcouReport, report_rcou
from .verifier import VerificationReport, check_legality, check_parallel, pi_map, verify
from .config import MachineModel, RunConfig, load_config, load_machine
from .cache import AnalysisCache, get_default_cache
from .exceptions import PolyvocabError, ScopSyntaxError, ScopValidationError, DimensionMismatchError
from .exceptions import IlpModelError, InfeasibleError, SolverContractError, SolverTimeout
from .exceptions import EnumerationLimitError, RecipeError, ConfigError, LegalityViolation
from .cli import cli

__version__ = "0.1.0"
__all__ = [
    "Scop", "Statement", "AccessFunction", "Schedule", "parse_scop", "serialize_scop",
    "parse_schedules", "serialize_schedules", "identity_schedules",
    "IlpSystem", "LinExpr", "Assignment", "INTEGER", "RATIONAL",
    "DependencePolyhedron", "SccGraph", "ScopMetrics", "compute_dependences", "build_scc", "metrics",
    "LegalSpace", "farkas_certify", "pin_schedules",
    "IDIOM_IDS", "IdiomContext", "IdiomReport", "build_mgr", "compute_stride_weights",
    "ProgramClass", "Recipe", "Analysis", "ScheduleResult", "analyze", "classify", "parse_recipe",
    "schedule", "schedule_prefix",
    "LoopAst", "LoopNode", "build_loop_ast", "UnrollFactors", "RcouReport", "report_rcou",
    "VerificationReport", "check_legality", "check_parallel", "pi_map", "verify",
    "MachineModel", "RunConfig", "load_config", "load_machine", "AnalysisCache", "get_default_cache",
    "PolyvocabError", "ScopSyntaxError", "ScopValidationError", "DimensionMismatchError",
    "IlpModelError", "InfeasibleError", "SolverContractError", "SolverTimeout",
    "EnumerationLimitError", "RecipeError", "ConfigError", "LegalityViolation", "cli",
]
