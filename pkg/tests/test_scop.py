# Tests for the SCoP model and its text formats
import pytest

from polyvocab.exceptions import DimensionMismatchError, ScopSyntaxError, ScopValidationError
from polyvocab.scop import (
    access_eval,
    domain_contains,
    first_divergence,
    identity_schedules,
    parse_schedules,
    parse_scop,
    serialize_schedules,
    serialize_scop,
)

from conftest import CORPUS_NAMES, load_corpus

HEAD = "polyvocab-scop v1\nscop t\nparam N\ncontext N >= 1\n"


def one_statement(body: str) -> str:
    return HEAD + "statement 0 S0\n  iters i\n  domain 0 <= i < N\n" + body + "end\n"


def test_gemm_shape(gemm):
    assert gemm.name == "gemm"
    assert gemm.dloop == 3
    assert gemm.rows == 7
    assert gemm.n_statements == 1
    s = gemm.statement(0)
    assert s.iterators == ("i", "j", "k")
    assert [a.array for a in s.accesses] == ["C", "C", "A", "B"]
    assert [a.kind for a in s.accesses] == ["write", "read", "read", "read"]
    assert s.text == "C[i][j] += A[i][k] * B[k][j];"


def test_gemm_identity_timestamp(gemm):
    (sched,) = identity_schedules(gemm)
    assert sched.timestamp((2, 7, 3)) == (0, 2, 0, 7, 0, 3, 0)


def test_access_eval(gemm):
    a = gemm.statement(0).accesses[2]
    assert access_eval(a, (2, 7, 3)) == (2, 3)
    with pytest.raises(DimensionMismatchError):
        access_eval(a, (2, 7))


def test_domain_contains(gemm):
    s = gemm.statement(0)
    assert domain_contains(s, (0, 3, 3), (4,))
    assert not domain_contains(s, (0, 4, 3), (4,))


def test_first_divergence():
    assert first_divergence((0, 1, 2), (0, 1, 3)) == 2
    assert first_divergence((1,), (0,)) == 0
    assert first_divergence((0, 0), (0, 0)) == 2


def test_offsets_and_parameters_in_subscripts():
    scop = parse_scop(one_statement("  access write A [i + 1]\n  access read A [N - i - 1]\n"))
    w, r = scop.statement(0).accesses
    assert w.matrix == ((1,),) and w.offsets == (1,)
    assert r.matrix == ((-1,),) and r.offsets == (-1,) and r.param_part == ((1,),)
    assert access_eval(r, (2,), (5,)) == (2,)


def test_default_beta_follows_statement_order():
    text = HEAD + (
        "statement 0 S0\n  iters i\n  domain 0 <= i < N\n  access write A [i]\nend\n"
        "statement 1 S1\n  iters i\n  domain 0 <= i < N\n  access read A [i]\nend\n"
    )
    scop = parse_scop(text)
    assert scop.statement(0).beta == (0, 0)
    assert scop.statement(1).beta == (1, 0)


def test_canonical_text_parses_back(gemm):
    text = serialize_scop(gemm)
    again = parse_scop(text)
    assert again == gemm
    assert serialize_scop(again) == text


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_corpus_documents_parse(name):
    scop = load_corpus(name)
    assert scop.name == name
    assert scop.n_statements >= 1


def test_missing_header():
    with pytest.raises(ScopSyntaxError) as err:
        parse_scop("scop t\n")
    assert err.value.line == 1


def test_unknown_statement_keyword_position():
    text = one_statement("  access write A [i]\n  bogus 1\n")
    with pytest.raises(ScopSyntaxError) as err:
        parse_scop(text)
    assert err.value.line == 9
    assert err.value.column == 3
    assert err.value.exit_code == 2


def test_bad_character_in_domain():
    text = HEAD + "statement 0 S0\n  iters i\n  domain 0 <= i < N $\n  access write A [i]\nend\n"
    with pytest.raises(ScopSyntaxError) as err:
        parse_scop(text)
    assert err.value.line == 7
    assert err.value.column > 10


def test_unknown_name_in_access():
    with pytest.raises(ScopSyntaxError):
        parse_scop(one_statement("  access write A [q]\n"))


def test_missing_end():
    with pytest.raises(ScopSyntaxError):
        parse_scop(HEAD + "statement 0 S0\n  iters i\n  access write A [i]\n")


def test_beta_length_mismatch():
    with pytest.raises(DimensionMismatchError):
        parse_scop(one_statement("  access write A [i]\n  beta 0 0 0\n"))


def test_array_rank_must_agree():
    with pytest.raises(ScopValidationError):
        parse_scop(one_statement("  access write A [i]\n  access read A [i][i]\n"))


def test_empty_domain_rejected():
    text = HEAD + "statement 0 S0\n  iters i\n  domain 0 <= i < 0\n  access write A [i]\nend\n"
    with pytest.raises(ScopValidationError):
        parse_scop(text)


def test_beta_against_textual_order():
    text = HEAD + (
        "statement 0 S0\n  iters i\n  domain 0 <= i < N\n  access write A [i]\n  beta 1 0\nend\n"
        "statement 1 S1\n  iters i\n  domain 0 <= i < N\n  access read A [i]\n  beta 0 0\nend\n"
    )
    with pytest.raises(ScopValidationError):
        parse_scop(text)


def test_schedule_document(gemm):
    scheds = identity_schedules(gemm)
    doc = serialize_schedules(gemm, scheds)
    assert doc.splitlines()[0] == "polyvocab-schedule v1"
    assert "  row 1 [1 0 0 0]" in doc
    assert parse_schedules(doc, gemm) == scheds


def test_schedule_document_for_another_scop(gemm):
    doc = serialize_schedules(gemm, identity_schedules(gemm)).replace("scop gemm", "scop other")
    with pytest.raises(ScopValidationError):
        parse_schedules(doc, gemm)


def test_schedule_scalar_row_with_coefficients(gemm):
    doc = serialize_schedules(gemm, identity_schedules(gemm)).replace("row 0 [0 0 0 0]", "row 0 [1 0 0 0]")
    with pytest.raises(ScopValidationError):
        parse_schedules(doc, gemm)
