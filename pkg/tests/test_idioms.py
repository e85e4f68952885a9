# Tests for the idiom vocabulary
import pytest

from polyvocab.config import RunConfig
from polyvocab.exceptions import RecipeError
from polyvocab.idioms import (
    IDIOM_IDS,
    IDIOMS,
    IdiomContext,
    active_stencil_classes,
    build_mgr,
    compute_stride_weights,
    dgf_weights,
    distinct_references,
    outer_parallel_row,
    sis_pairs,
)
from polyvocab.dependence import NSBD, NSFD, SD1, SDN
from polyvocab.legality import LegalSpace
from polyvocab.recipes import analyze, assemble

from conftest import load_corpus


def context(scop, machine):
    analysis = analyze(scop)
    space = LegalSpace(scop, analysis.deps)
    return IdiomContext(scop, analysis.deps, analysis.sccs, analysis.metrics, machine, space)


def test_every_idiom_is_registered():
    assert set(IDIOMS) == set(IDIOM_IDS)
    assert len(IDIOM_IDS) == 11


def test_gemm_stride_weights(gemm):
    assert compute_stride_weights(gemm.statement(0)) == [33, 6, 17]


def test_read_write_pair_counts_once_as_write(gemm):
    refs = distinct_references(gemm.statement(0))
    assert [(r.array, r.kind) for r in refs] == [("C", "write"), ("A", "read"), ("B", "read")]


def test_gemm_mgr(gemm):
    s = gemm.statement(0)
    c, _, a, b = s.accesses
    mc = build_mgr(c, s, gemm.rows)
    assert mc.m == (1, 1, 0)
    assert mc.g == ((1, -1, 0), (-1, 1, 0))
    assert mc.r == (3, 2, 0)
    ma = build_mgr(a, s, gemm.rows)
    assert ma.m == (1, 0, 1)
    assert ma.g == ((1, 0, -1), (-1, 0, 1))
    assert ma.r == (3, 0, 1)
    mb = build_mgr(b, s, gemm.rows)
    assert mb.m == (0, 1, 1)
    assert mb.g == ((0, -1, 1), (0, 1, -1))
    assert mb.r == (0, 2, 1)


def test_dgf_weights():
    assert dgf_weights(7, 4) == [8, 4, 2, 1]
    assert dgf_weights(5, 2) == [4, 2]


def test_active_stencil_classes():
    assert active_stencil_classes(True) == (NSFD, NSBD, SD1, SDN)
    assert active_stencil_classes(False) == (SD1, SDN)


def test_outer_parallel_row(gemm, skx):
    assert outer_parallel_row(context(gemm, skx)) == 1


def test_hpfp_recipe_objective_order(gemm, skx):
    ctx = context(gemm, skx)
    reports = ctx.apply_recipe(["SO", "IP", "OPIR", "SIS", "DGF", "OP"])
    assert [r.idiom for r in reports] == ["SO", "IP", "OPIR", "SIS", "DGF", "OP"]
    assert [o.label for o in ctx.sys.objectives] == [
        "SO: innermost coefficient sum",
        "SO: stride cost",
        "IP: dependences carried at row 5",
        "OPIR: missed inner reuse",
        "OP: dependences carried at row 1",
    ]


def test_idiom_reports(gemm, skx):
    ctx = context(gemm, skx)
    so, ip, sis, dgf, op = ctx.apply_recipe(["SO", "IP", "SIS", "DGF", "OP"])
    assert so.variables == 1
    assert so.constraints == 5
    assert len(so.samples) == 3
    assert ip.exact_rows == 3 and op.exact_rows == 3
    assert op.note == "row 1"
    assert sis.note == "no independent statement pair"
    assert dgf.note == "no inter-SCC flow dependence"
    assert dgf.objectives == []
    assert ctx.layout.owners["so_cost_S0"] == "SO"


def test_unknown_and_repeated_idioms(gemm, skx):
    ctx = context(gemm, skx)
    with pytest.raises(RecipeError):
        ctx.apply("FAST")
    ctx.apply("OP")
    with pytest.raises(RecipeError):
        ctx.apply("OP")


def test_sis_pairs_for_independent_statements(skx):
    scop = load_corpus("mvt")
    ctx = context(scop, skx)
    assert sis_pairs(ctx) == [(0, 1)]
    report = ctx.apply("SIS")
    assert report.variables == 2
    assert report.objectives == ["SIS: independence distance deficit"]


def test_dgf_on_a_producer_consumer_chain(skx):
    scop = load_corpus("2mm")
    ctx = context(scop, skx)
    report = ctx.apply("DGF")
    assert report.objectives == ["DGF: producer-consumer distance"]
    assert ctx.sys.has_var("dgf_S1_S3_tmp")


def test_stencil_recipe_variables(jacobi2d, skx):
    ctx = context(jacobi2d, skx)
    reports = ctx.apply_recipe(["SMVS", "SDC", "SPAR"])
    smvs, sdc, spar = reports
    assert smvs.variables == 2
    assert sdc.objectives and all(label.startswith("SDC: row") for label in sdc.objectives)
    assert spar.objectives == ["SPAR: self dependences at row 3 (leading)",
                               "SPAR: self dependences at row 3 (trailing)"]
    labels = [o.label for o in ctx.sys.objectives]
    assert labels[0] == "SMVS: skew on the vector iterator"
    assert labels[-1] == "SPAR: self dependences at row 3 (trailing)"
    assert ctx.sys.bounds(ctx.layout.shift[(1, 1)]) == (0, (2 * skx.opv + 1) * 2)


def test_spar_time_shifts_skip_flow_cycles(skx):
    ctx = context(load_corpus("cholesky-like"), skx)
    ctx.apply("SPAR")
    shifted = {c.label for c in ctx.sys.constraints if c.label.startswith("spar_time_shift")}
    # S0 and S1 feed each other inside one i iteration
    assert "spar_time_shift_S0_S1" not in shifted
    assert "spar_time_shift_S1_S0" not in shifted
    assert {"spar_time_shift_S1_S2", "spar_time_shift_S2_S3"} <= shifted


def test_skewpar_adds_parallel_indicators(gemm, skx):
    ctx = context(gemm, skx)
    report = ctx.apply("SKEWPAR")
    assert report.variables == 3
    assert report.exact_rows == 3 * 3
    assert report.objectives[0] == "SKEWPAR: carried at row 1"


def test_sn_caps_coefficients(gemm, skx):
    ctx = context(gemm, skx)
    ctx.apply("SN")
    assert all(ctx.sys.bounds(v)[1] == 2 for v in ctx.layout.theta.values())


def test_assemble_emits_after_idioms(gemm, skx):
    space, reports = assemble(analyze(gemm), ["OP"], skx, RunConfig())
    assert space.emitted
    assert len(space.blocks) == 3 * 7 + 3
    assert reports[0].idiom == "OP"
