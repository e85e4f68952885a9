# Tests for loop tree recovery
from polyvocab.loopast import LoopNode, StatementLeaf, build_loop_ast, loop_rows, transform_accesses
from polyvocab.scop import Schedule, identity_schedules

from conftest import load_corpus

KIJ = Schedule(0, ((0, 0, 1), (1, 0, 0), (0, 1, 0)), (0, 0, 0), (0, 0, 0, 0))


def test_gemm_identity_nest(gemm):
    ast = build_loop_ast(gemm, identity_schedules(gemm), 4)
    (nest,) = ast.nests()
    loops = list(nest.loops())
    assert [(loop.name, loop.row) for loop in loops] == [("i", 1), ("j", 3), ("k", 5)]
    assert [loop.parallel for loop in loops] == [True, True, False]
    assert all(loop.permutable and loop.constant_bounds for loop in loops)
    (leaf,) = ast.leaves()
    assert leaf.statement == 0 and leaf.unimodular
    assert nest.statements() == [0]


def test_render(gemm):
    text = build_loop_ast(gemm, identity_schedules(gemm), 4).render()
    assert text.splitlines() == [
        "for i  # row 1 parallel permutable const",
        "  for j  # row 3 parallel permutable const",
        "    for k  # row 5 permutable const",
        "      S0",
    ]


def test_interchange_moves_the_carried_loop_out(gemm):
    ast = build_loop_ast(gemm, [KIJ], 4)
    loops = list(ast.nests()[0].loops())
    assert [loop.name for loop in loops] == ["k", "i", "j"]
    assert [loop.parallel for loop in loops] == [False, True, True]


def test_loop_rows_skip_rank_deficient_rows():
    assert loop_rows(KIJ) == [1, 3, 5]
    flat = Schedule(0, ((1, 0, 0), (2, 0, 0), (0, 0, 1)), (0, 0, 0), (0, 0, 0, 0))
    assert loop_rows(flat) == [1, 5]
    padded = Schedule(0, ((1, 0), (0, 0), (0, 1)), (0, 0, 0), (0, 0, 0, 0))
    assert loop_rows(padded) == [1, 5]


def test_transform_accesses(gemm):
    accesses = gemm.statement(0).accesses
    moved = transform_accesses(KIJ, [1, 3, 5], accesses)
    a = moved[2]
    assert a.array == "A"
    assert a.matrix == ((0, 1, 0), (1, 0, 0))
    shifted = Schedule(0, ((1, 0, 0), (0, 1, 0), (0, 0, 1)), (2, 0, 0), (0, 0, 0, 0))
    c = transform_accesses(shifted, [1, 3, 5], accesses)[0]
    assert c.offsets == (-2, 0)


def test_non_unimodular_leaf(gemm):
    stretched = Schedule(0, ((1, 0, 0), (0, 1, 0), (0, 0, 2)), (0, 0, 0), (0, 0, 0, 0))
    assert transform_accesses(stretched, [1, 3, 5], gemm.statement(0).accesses) is None
    ast = build_loop_ast(gemm, [stretched], 3)
    (leaf,) = ast.leaves()
    assert not leaf.unimodular
    assert ast.render().splitlines()[2] == "    for c5  # row 5 permutable const"
    assert ast.render().endswith("S0  # non-unimodular")


def test_scalar_rows_split_statements():
    scop = load_corpus("jacobi-1d")
    ast = build_loop_ast(scop, identity_schedules(scop), 4)
    (t_loop,) = ast.nests()
    assert t_loop.name == "t" and not t_loop.parallel
    inner = t_loop.children
    assert all(isinstance(c, LoopNode) and c.name == "i" for c in inner)
    assert [c.statements() for c in inner] == [[0], [1]]
    assert all(c.parallel for c in inner)


def test_separate_nests_for_fissioned_statements():
    scop = load_corpus("mvt")
    ast = build_loop_ast(scop, identity_schedules(scop), 3)
    assert [n.statements() for n in ast.nests()] == [[0], [1]]
    assert all(isinstance(leaf, StatementLeaf) for leaf in ast.leaves())
