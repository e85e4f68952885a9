# Tests for classification, recipes and the scheduling driver
import pytest

from polyvocab.config import RunConfig, load_machine
from polyvocab.dependence import ScopMetrics
from polyvocab.exceptions import InfeasibleError, RecipeError
from polyvocab.recipes import (
    ProgramClass,
    analyze,
    build_recipe,
    classify,
    parse_idiom_list,
    parse_recipe,
    schedule,
    schedule_prefix,
)
from polyvocab.verifier import check_legality, check_parallel

from conftest import CORPUS_NAMES, load_corpus


def make_metrics(n_dep=3, dim_theta=7, n_self_dep=1, n_scc=1, is_stencil=False, n_statements=1):
    return ScopMetrics(n_dep, n_dep, dim_theta, n_self_dep, n_self_dep, n_scc, is_stencil, n_statements)


def test_classify_rules():
    assert classify(make_metrics(is_stencil=True, n_dep=21)) == ProgramClass.STEN
    assert classify(make_metrics(is_stencil=True, n_dep=22)) == ProgramClass.HPFP
    assert classify(make_metrics(dim_theta=5)) == ProgramClass.LDLC
    assert classify(make_metrics(n_scc=2, n_self_dep=2)) == ProgramClass.HPFP
    assert classify(make_metrics(n_scc=1, n_self_dep=2)) == ProgramClass.OTHER


CORPUS_CLASSES = {
    "fdtd-2d": ProgramClass.STEN,
    "jacobi-1d": ProgramClass.STEN,
    "jacobi-2d": ProgramClass.STEN,
    "seidel-2d": ProgramClass.STEN,
    "gemver": ProgramClass.LDLC,
    "atax": ProgramClass.LDLC,
    "bicg": ProgramClass.LDLC,
    "mvt": ProgramClass.LDLC,
    "gemm": ProgramClass.HPFP,
    "2mm": ProgramClass.HPFP,
    "3mm": ProgramClass.HPFP,
    "doitgen": ProgramClass.HPFP,
    "lu": ProgramClass.HPFP,
    "cholesky-like": ProgramClass.OTHER,
}


def test_corpus_table_is_complete():
    assert sorted(CORPUS_CLASSES) == CORPUS_NAMES


@pytest.mark.parametrize("name, expected", sorted(CORPUS_CLASSES.items()))
def test_corpus_classes(name, expected):
    assert analyze(load_corpus(name)).program_class == expected


def test_built_in_recipes(skx):
    m = make_metrics()
    assert build_recipe(ProgramClass.STEN, m, skx).idioms == ("SMVS", "SDC", "SPAR")
    assert build_recipe(ProgramClass.LDLC, m, skx).idioms == ("SO", "IP", "OPIR", "SIS", "DGF", "OP")
    assert build_recipe(ProgramClass.HPFP, m, skx).idioms == ("SO", "IP", "OPIR", "SIS", "DGF", "OP")
    assert build_recipe(ProgramClass.OTHER, m, skx).idioms == ("SO", "OP", "SN")


def test_recipe_guards(skx):
    guarded = build_recipe(ProgramClass.HPFP, make_metrics(n_self_dep=3, n_scc=1), skx)
    assert guarded.idioms == ("SIS", "DGF", "OP")
    assert guarded.skipped == ("SO", "IP", "OPIR")
    big = build_recipe(ProgramClass.OTHER, make_metrics(n_dep=50, n_self_dep=2), skx)
    assert big.idioms == ("OP", "SN")
    assert big.skipped == ("SO",)


def test_parse_recipe_selectors(skx):
    m = make_metrics()
    assert parse_recipe("auto", m, skx).program_class == ProgramClass.HPFP
    assert parse_recipe("LDLC", m, skx).idioms[0] == "SO"
    custom = parse_recipe("custom:so, op", m, skx)
    assert custom.idioms == ("SO", "OP")
    assert custom.custom and custom.selector == "custom:SO,OP"
    assert parse_recipe("SDC,SPAR", m, skx).idioms == ("SDC", "SPAR")
    assert parse_recipe("sten", m, skx).selector == "sten"


@pytest.mark.parametrize("selector", ["custom:", "custom:SO,XX", "custom:SO,SO", "fastest"])
def test_bad_selectors(selector, skx):
    with pytest.raises(RecipeError) as err:
        parse_recipe(selector, make_metrics(), skx)
    assert err.value.exit_code == 2


def test_unknown_idiom_lists_valid_ones():
    with pytest.raises(RecipeError) as err:
        parse_idiom_list("OP,FOO")
    assert err.value.extra["unknown"] == ["FOO"]
    assert "SKEWPAR" in err.value.extra["valid"]


def test_recipe_as_dict(skx):
    data = build_recipe(ProgramClass.STEN, make_metrics(), skx).as_dict()
    assert data["class"] == "STEN"
    assert data["machine"] == "skx"
    assert data["multi_skew"] is True


def test_prefix_out_of_range(gemm, skx):
    recipe = build_recipe(ProgramClass.HPFP, make_metrics(), skx)
    with pytest.raises(RecipeError):
        schedule_prefix(gemm, recipe, 7)


@pytest.mark.slow
def test_gemm_hpfp_schedule(gemm):
    result = schedule(gemm, config=RunConfig(machine="skx"))
    assert result.recipe.program_class == ProgramClass.HPFP
    assert result.verification.ok
    (sched,) = result.schedules
    assert sched.linear == ((0, 0, 1), (1, 0, 0), (0, 1, 0))
    assert check_parallel(gemm, result.schedules, 5, 4).parallel
    assert result.satisfied == {"D0": 1, "D1": 1, "D2": 1}
    labels = [label for label, _ in result.objectives]
    assert labels[:2] == ["SO: innermost coefficient sum", "SO: stride cost"]
    assert dict(result.objectives)["SO: stride cost"] == 6


@pytest.mark.slow
def test_mvt_ldlc_schedule():
    scop = load_corpus("mvt")
    result = schedule(scop, config=RunConfig(machine="skx"))
    assert result.recipe.program_class == ProgramClass.LDLC
    assert result.verification.ok
    # A is read transposed in S1, so its unit stride runs along i
    assert [s.linear[-1] for s in result.schedules] == [(0, 1), (1, 0)]


@pytest.mark.slow
def test_jacobi_2d_stencil_schedule(jacobi2d):
    result = schedule(jacobi2d, config=RunConfig(machine="skx"))
    assert result.recipe.program_class == ProgramClass.STEN
    assert result.recipe.machine.multi_skew
    assert result.verification.ok
    assert check_legality(jacobi2d, result.schedules, 4).legal


@pytest.mark.slow
def test_prefix_schedules_stay_legal(gemm):
    recipe = parse_recipe("hpfp", analyze(gemm).metrics, load_machine("skx"))
    for k in (1, 2):
        result = schedule_prefix(gemm, recipe, k)
        assert result.verification.ok
        assert [r.idiom for r in result.reports] == list(recipe.idioms[:k])


@pytest.mark.slow
def test_fdtd_2d_stencil_schedule():
    scop = load_corpus("fdtd-2d")
    result = schedule(scop, config=RunConfig(machine="skx"))
    assert result.recipe.program_class == ProgramClass.STEN
    assert result.recipe.machine.multi_skew
    assert result.verification.ok
    full = sum(1 for s in scop.statements if s.dim == scop.dloop)
    for sched in result.schedules:
        sums = [sum(row) for row in sched.linear]
        for k in range(len(sums) - 1):
            assert sums[k] - sums[k + 1] >= (1 if k > 0 else 0)
        if scop.statement(sched.statement).dim == scop.dloop:
            assert sums[0] >= full
    assert any(check_parallel(scop, result.schedules, 3, 4, statements=[s.id]).parallel
               for s in scop.statements)


@pytest.mark.slow
def test_schedule_is_deterministic(gemm):
    first = schedule(gemm, config=RunConfig(machine="skx"))
    second = schedule(gemm, config=RunConfig(machine="skx"))
    assert first.schedules == second.schedules
    assert first.as_dict() == second.as_dict()


@pytest.mark.slow
@pytest.mark.parametrize("selector", ["sten", "ldlc", "hpfp", "other"])
@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_every_recipe_is_legal_on_the_corpus(name, selector):
    scop = load_corpus(name)
    config = RunConfig(machine="skx", time_budget=30)
    analysis = analyze(scop, config)
    recipe = parse_recipe(selector, analysis.metrics, config.resolve_machine())
    try:
        result = schedule(scop, recipe, config=config, analysis=analysis)
    except InfeasibleError:
        # a foreign recipe may over-constrain a kernel; its own never does
        assert selector != analysis.program_class.value.lower()
        return
    for params in (3, 6):
        assert check_legality(scop, result.schedules, params).legal
