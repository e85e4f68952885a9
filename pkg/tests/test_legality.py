# Tests for the legal schedule space
from fractions import Fraction

import pytest

from polyvocab.dependence import compute_dependences
from polyvocab.exceptions import IlpModelError
from polyvocab.ilp import INTEGER, Assignment, IlpSystem
from polyvocab.legality import LegalSpace, build_layout, farkas_certify, schedule_rank
from polyvocab.scop import Schedule, identity_schedules

from conftest import load_corpus


def test_gemm_layout_counts(gemm):
    deps = compute_dependences(gemm)
    layout, sys = build_layout(gemm, deps)
    assert len(layout.theta) == 9
    assert len(layout.shift) == 3
    assert len(layout.beta) == 4
    assert len(layout.delta) == 3 * 7
    assert len(sys.variables) == 9 + 3 + 4 + 21
    assert sys.has_var("theta_S0_r5_c2")
    assert sys.has_var("delta_D1_6")
    assert sys.bounds(layout.theta[(0, 1, 0)]) == (-1, 3)
    assert sys.bounds(layout.shift[(0, 3)]) == (0, 0)
    assert sys.bounds(layout.beta[(0, 2)]) == (0, 1)
    # one "satisfied exactly once" row per dependence
    assert len(sys.constraints) == 3


def test_empty_window_rejected(gemm):
    with pytest.raises(IlpModelError):
        build_layout(gemm, [], (2, 1))


def test_farkas_bound_on_an_interval():
    sys = IlpSystem()
    a = sys.add_variable("a", INTEGER, -1, -1)
    b = sys.add_variable("b", INTEGER, -10, 10)
    # -z + b >= 0 for every z in [0, 5]
    block = farkas_certify(sys, [a, b], [(1, 0), (-1, 5)])
    assert block.eliminated == 1
    assert [v.name for v in block.multipliers] == ["farkas_l1"]
    sys.push_objective(b, "min")
    assert sys.solve_lex()[b] == 5


def test_farkas_substitutes_equalities():
    sys = IlpSystem()
    c = sys.add_variable("c", INTEGER, -10, 10)
    # z2 - z1 + c >= 0 when z1 == z2 and 0 <= z1 <= 3
    farkas_certify(sys, [-1, 1, c], [(1, 0, 0), (-1, 0, 3)], [(1, -1, 0)])
    sys.push_objective(c, "min")
    assert sys.solve_lex()[c] == 0


@pytest.mark.parametrize("a, b", [(-2, 1), (1, -3), (0, -1), (2, 2), (-1, -1)])
def test_farkas_minimum_matches_the_vertices(a, b):
    sys = IlpSystem()
    c = sys.add_variable("c", INTEGER, -20, 20)
    # a·z1 + b·z2 + c >= 0 over 0 <= z2 <= z1 <= 3
    farkas_certify(sys, [a, b, c], [(1, 0, 0), (-1, 0, 3), (0, 1, 0), (1, -1, 0)])
    sys.push_objective(c, "min")
    points = [(z1, z2) for z1 in range(4) for z2 in range(z1 + 1)]
    assert sys.solve_lex()[c] == -min(a * z1 + b * z2 for z1, z2 in points)


def test_multipliers_are_eliminated(gemm):
    space = LegalSpace(gemm, compute_dependences(gemm))
    before = len(space.sys.variables)
    space.emit()
    assert sum(b.eliminated for b in space.blocks) > 0
    assert len(space.sys.variables) - before == sum(len(b.multipliers) for b in space.blocks)


@pytest.mark.parametrize("name", ["gemm", "jacobi-1d", "mvt", "2mm", "lu"])
def test_identity_schedule_is_admissible(name):
    scop = load_corpus(name)
    space = LegalSpace(scop, compute_dependences(scop))
    space.emit()
    identity = identity_schedules(scop)
    space.pin(identity)
    ok, witness = space.sys.check_feasible()
    assert ok
    assert space.layout.schedules(witness) == identity


def test_gemm_identity_satisfies_at_k_row(gemm):
    deps = compute_dependences(gemm)
    space = LegalSpace(gemm, deps)
    space.emit()
    space.pin(identity_schedules(gemm))
    ok, witness = space.sys.check_feasible()
    assert ok
    for d in deps:
        assert [witness[v] for v in space.layout.deltas(d.index)] == [0, 0, 0, 0, 0, 1, 0]


def test_reversed_reduction_is_rejected(gemm):
    space = LegalSpace(gemm, compute_dependences(gemm))
    space.emit()
    reversed_k = Schedule(0, ((1, 0, 0), (0, 1, 0), (0, 0, -1)), (0, 0, 0), (0, 0, 0, 0))
    space.pin([reversed_k])
    assert space.sys.check_feasible() == (False, None)


def test_interchange_is_admissible(gemm):
    space = LegalSpace(gemm, compute_dependences(gemm))
    space.emit()
    kij = Schedule(0, ((0, 0, 1), (1, 0, 0), (0, 1, 0)), (0, 0, 0), (0, 0, 0, 0))
    space.pin([kij])
    ok, witness = space.sys.check_feasible()
    assert ok
    assert witness[space.layout.delta[(0, 1)]] == 1


def test_exactness_blocks(gemm):
    deps = compute_dependences(gemm)
    space = LegalSpace(gemm, deps)
    for d in deps:
        space.request_exact(d, 1)
    space.emit()
    assert len(space.blocks) == 3 * 7 + 3
    assert sum(1 for b in space.blocks if b.label.endswith("_exact")) == 3
    with pytest.raises(IlpModelError):
        space.request_exact(deps[0], 3)


def test_exact_row_forbids_carrying_elsewhere(gemm):
    deps = compute_dependences(gemm)
    space = LegalSpace(gemm, deps)
    for d in deps:
        space.request_exact(d, 1)
    space.emit()
    # nothing is carried at row 1, so the k loop cannot move outermost
    for d in deps:
        space.sys.set_bounds(space.layout.delta[(d.index, 1)], 0, 0)
    kij = Schedule(0, ((0, 0, 1), (1, 0, 0), (0, 1, 0)), (0, 0, 0), (0, 0, 0, 0))
    space.pin([kij])
    assert not space.sys.check_feasible()[0]


def test_injectivity_leaf_check(gemm):
    deps = compute_dependences(gemm)
    space = LegalSpace(gemm, deps)
    check = space.injectivity_check()
    sys = space.sys
    zeros = Assignment({k: Fraction(0) for k in range(len(sys.variables))}, dict(sys.names))
    children = check(zeros)
    assert children is not None and len(children) == 2 * 3

    ident = {k: Fraction(0) for k in range(len(sys.variables))}
    for j in range(3):
        ident[space.layout.theta[(0, 2 * j + 1, j)].index] = Fraction(1)
    assert check(Assignment(ident, dict(sys.names))) is None


def test_schedule_rank(gemm):
    (ident,) = identity_schedules(gemm)
    assert schedule_rank(ident) == 3
    flat = Schedule(0, ((1, 0, 0), (1, 0, 0), (0, 0, 1)), (0, 0, 0), (0, 0, 0, 0))
    assert schedule_rank(flat) == 2
