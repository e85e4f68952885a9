# Tests for the instance-level oracle
import pytest

from polyvocab.cache import AnalysisCache
from polyvocab.exceptions import DimensionMismatchError, EnumerationLimitError, ScopValidationError
from polyvocab.scop import Schedule, identity_schedules
from polyvocab.verifier import (
    build_trace,
    carried_rows,
    check_injective,
    check_legality,
    check_parallel,
    dependent_pairs,
    enumerate_instances,
    pi_map,
    resolve_params,
    verify,
)

from conftest import CORPUS_NAMES, load_corpus

KIJ = Schedule(0, ((0, 0, 1), (1, 0, 0), (0, 1, 0)), (0, 0, 0), (0, 0, 0, 0))
FLAT = Schedule(0, ((1, 0, 0), (0, 1, 0), (0, 1, 0)), (0, 0, 0), (0, 0, 0, 0))


def test_gemm_instances(gemm):
    instances = enumerate_instances(gemm, 4)
    assert len(instances) == 64
    assert instances[0] == (0, (0, 0, 0))
    assert instances[-1] == (0, (3, 3, 3))


def test_triangular_domain():
    scop = load_corpus("lu")
    counts = {}
    for sid, _ in enumerate_instances(scop, 4):
        counts[sid] = counts.get(sid, 0) + 1
    assert counts == {0: 6, 1: 14}


def test_enumeration_cap(gemm):
    with pytest.raises(EnumerationLimitError) as err:
        enumerate_instances(gemm, 3, cap=10)
    assert err.value.extra["cap"] == 10


def test_resolve_params(gemm):
    assert resolve_params(gemm, 5) == (5,)
    assert resolve_params(gemm, {"N": 2}) == (2,)
    with pytest.raises(DimensionMismatchError):
        resolve_params(gemm, [3, 4])
    with pytest.raises(ScopValidationError):
        resolve_params(gemm, {"M": 3})
    with pytest.raises(ScopValidationError):
        resolve_params(gemm, 0)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_original_order_is_legal(name):
    scop = load_corpus(name)
    verdict = check_legality(scop, identity_schedules(scop), 3)
    assert verdict.legal
    assert verdict.n_pairs > 0
    assert not check_injective(scop, identity_schedules(scop), 3)


def test_interchange_is_legal(gemm):
    report = verify(gemm, [KIJ], [2, 4])
    assert report.ok
    assert [v.params for v in report.verdicts] == [(2,), (4,)]


def test_reversed_time_is_illegal():
    scop = load_corpus("jacobi-1d")
    reversed_t = [
        Schedule(0, ((-1, 0), (0, 1)), (0, 0), (0, 0, 0)),
        Schedule(1, ((-1, 0), (0, 1)), (0, 0), (0, 1, 0)),
    ]
    verdict = check_legality(scop, reversed_t, 4, max_violations=2)
    assert not verdict.legal
    assert len(verdict.violations) == 2
    v = verdict.violations[0]
    assert v.source_time >= v.target_time
    assert v.describe().startswith(f"S{v.source}")
    assert v.as_dict()["kind"] == v.kind


def test_parallel_rows(gemm):
    ident = identity_schedules(gemm)
    assert check_parallel(gemm, ident, 1, 3).parallel
    assert check_parallel(gemm, ident, 3, 3).parallel
    inner = check_parallel(gemm, ident, 5, 3)
    assert not inner.parallel
    (sa, pa), (sb, pb) = inner.witness
    assert pa[:2] == pb[:2] and pa[2] < pb[2]
    assert "witness" in inner.as_dict()
    with pytest.raises(ScopValidationError):
        check_parallel(gemm, ident, 2, 3)


def test_parallel_restricted_to_statements():
    scop = load_corpus("mvt")
    ident = identity_schedules(scop)
    assert not check_parallel(scop, ident, 3, 3, statements=[0]).parallel
    assert check_parallel(scop, ident, 1, 3, statements=[1]).parallel


def test_carried_rows_and_pi(gemm):
    ident = identity_schedules(gemm)
    assert carried_rows(gemm, ident, 3) == {(0, 0): {5}}
    assert pi_map(gemm, ident, 3) == {0: {1: 1, 3: 1, 5: 0}}
    assert pi_map(gemm, [KIJ], 3) == {0: {1: 0, 3: 1, 5: 1}}


def test_rank_deficient_schedule_clashes(gemm):
    clashes = check_injective(gemm, [FLAT], 2)
    assert len(clashes) == 4
    report = verify(gemm, [FLAT], [2])
    assert not report.injective
    assert not report.ok
    assert report.as_dict()["clashes"][0][0] == 0


def test_schedule_count_checked(gemm):
    with pytest.raises(ScopValidationError):
        check_legality(gemm, [], 2)


def test_trace_follows_new_order(gemm):
    trace = build_trace(gemm, [KIJ], 2)
    assert len(trace) == 8
    assert trace.order()[:3] == [(0, (0, 0, 0)), (0, (0, 1, 0)), (0, (1, 0, 0))]


def test_pairs_are_cached(gemm):
    cache = AnalysisCache()
    first = dependent_pairs(gemm, 2, cache=cache)
    second = dependent_pairs(gemm, 2, cache=cache)
    assert first is second
    assert (cache.hits, cache.misses) == (1, 1)


def test_cache_evicts_least_recent():
    cache = AnalysisCache(max_size=2)
    cache.set("a", 1)
    cache.set("b", 2)
    assert cache.get("a") == 1
    cache.set("c", 3)
    assert cache.get("b") is None
    assert cache.size() == 2
    cache.clear()
    assert cache.size() == 0 and cache.hits == 0
