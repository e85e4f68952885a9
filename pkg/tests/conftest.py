# Shared fixtures for the polyvocab test-suite
from pathlib import Path

import pytest

from polyvocab.config import load_machine
from polyvocab.scop import parse_scop

CORPUS = Path(__file__).resolve().parent.parent / "polyvocab-python" / "polyvocab" / "corpus"
CORPUS_NAMES = sorted(p.stem for p in CORPUS.glob("*.scop"))


def load_corpus(name: str):
    return parse_scop((CORPUS / f"{name}.scop").read_text(encoding="utf-8"))


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def gemm():
    return load_corpus("gemm")


@pytest.fixture
def jacobi2d():
    return load_corpus("jacobi-2d")


@pytest.fixture
def skx():
    return load_machine("skx")


@pytest.fixture
def knl():
    return load_machine("knl")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("POLYVOCAB_MACHINE", raising=False)
