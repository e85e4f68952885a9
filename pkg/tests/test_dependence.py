# Tests for dependence analysis, SCCs and program metrics
import pytest

from polyvocab.dependence import (
    ALL_KINDS,
    NSBD,
    NSFD,
    RAR,
    RAW,
    SD1,
    SDN,
    WAR,
    WAW,
    build_scc,
    compute_dependences,
    metrics,
    stencil_class,
    statement_is_stencil,
)
from polyvocab.verifier import dependent_pairs, enumerate_instances

from conftest import CORPUS_NAMES, load_corpus


def test_gemm_dependences(gemm):
    deps = compute_dependences(gemm)
    assert [(d.kind, d.depth, d.array) for d in deps] == [(RAW, 2, "C"), (WAR, 2, "C"), (WAW, 2, "C")]
    assert [d.name for d in deps] == ["D0", "D1", "D2"]
    assert all(d.self_dep for d in deps)
    raw = deps[0]
    assert raw.flow
    # C[1][1] written at k=0, read again at k=1
    assert raw.contains((1, 1, 0), (1, 1, 1), (4,))
    assert not raw.contains((1, 1, 1), (1, 1, 0), (4,))
    assert not raw.contains((1, 1, 0), (1, 2, 1), (4,))


def test_read_after_read_on_request(gemm):
    plain = compute_dependences(gemm)
    with_rar = compute_dependences(gemm, ALL_KINDS)
    assert len(with_rar) > len(plain)
    assert {d.kind for d in with_rar} - {d.kind for d in plain} == {RAR}


def test_gemm_metrics(gemm):
    deps = compute_dependences(gemm)
    sccs = build_scc(gemm, deps)
    m = metrics(gemm, deps, sccs)
    assert sccs.n_components == 1
    assert (m.n_dep, m.n_dep_polyhedra, m.dim_theta) == (3, 3, 7)
    assert (m.n_self_dep, m.n_scc, m.is_stencil) == (1, 1, False)
    assert m.as_dict()["N_S"] == 1


def test_mvt_statements_are_independent():
    scop = load_corpus("mvt")
    deps = compute_dependences(scop)
    assert all(d.self_dep for d in deps)
    sccs = build_scc(scop, deps)
    assert sccs.n_components == 2
    assert not sccs.same_scc(0, 1)
    assert sccs.members(0) == [0] and sccs.members(1) == [1]


def test_jacobi_1d_classes():
    scop = load_corpus("jacobi-1d")
    deps = compute_dependences(scop)
    classes = {(d.source, d.target): stencil_class(d, scop) for d in deps}
    assert classes[(0, 1)] == NSFD
    assert classes[(1, 0)] == NSBD
    assert all(stencil_class(d, scop) == SDN for d in deps if d.self_dep)
    sccs = build_scc(scop, deps)
    assert sccs.n_components == 1


def test_seidel_is_single_statement_stencil():
    scop = load_corpus("seidel-2d")
    deps = compute_dependences(scop)
    assert deps and all(stencil_class(d, scop) == SD1 for d in deps)
    assert statement_is_stencil(scop.statement(0))
    m = metrics(scop, deps, build_scc(scop, deps))
    assert m.is_stencil


def test_jacobi_2d_is_stencil(jacobi2d):
    assert all(statement_is_stencil(s) for s in jacobi2d.statements)


def test_gemm_is_not_stencil(gemm):
    assert not statement_is_stencil(gemm.statement(0))


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_polyhedra_match_enumerated_pairs(name):
    scop = load_corpus(name)
    params = 4
    deps = compute_dependences(scop)
    ps = dependent_pairs(scop, params)
    values = ps.params
    instances = enumerate_instances(scop, params)
    expected = {(ps.instances[p.source], ps.instances[p.target]) for p in ps.pairs}
    found = set()
    for d in deps:
        src = [pt for sid, pt in instances if sid == d.source]
        dst = [pt for sid, pt in instances if sid == d.target]
        for x in src:
            for y in dst:
                if d.contains(x, y, values):
                    found.add(((d.source, x), (d.target, y)))
    assert found == expected
