from __future__ import annotations

from pathlib import Path

import pytest

from muspark.syntax import parse

CORPUS = Path(__file__).parent / "corpus"


def corpus_file(name: str) -> Path:
    """``name`` like "accept/swap"."""
    return CORPUS / f"{name}.msk"


def load(name: str):
    return parse(corpus_file(name).read_text(encoding="utf-8"))


@pytest.fixture
def corpus():
    return load
