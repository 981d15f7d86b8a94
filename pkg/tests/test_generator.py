from __future__ import annotations

from collections import Counter

from hypothesis import given, settings
from hypothesis import strategies as st

from muspark.oracle.generator import PRODUCTIONS, coverage, gen_program
from muspark.syntax import check_legality, pretty
from muspark.typecheck import check_program


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**40))
def test_same_seed_same_program(seed):
    assert pretty(gen_program(seed)) == pretty(gen_program(seed))


def test_different_seeds_differ():
    texts = {pretty(gen_program(seed)) for seed in range(20)}
    assert len(texts) == 20


def test_thousand_programs_type_check_and_cover_every_production():
    total: Counter = Counter()
    for seed in range(1000):
        program = gen_program(seed)
        info = check_program(program)
        assert info.diagnostics == [], (seed, [d.render() for d in info.diagnostics])
        legality = check_legality(program)
        assert legality == [], (seed, [d.render() for d in legality])
        total.update(coverage(program))
    assert set(PRODUCTIONS) <= set(total)
    assert all(total[p] >= 50 for p in PRODUCTIONS), total


def test_size_controls_length():
    small = sum(sum(coverage(gen_program(s, size=2)).values()) for s in range(30))
    large = sum(sum(coverage(gen_program(s, size=12)).values()) for s in range(30))
    assert large > small
