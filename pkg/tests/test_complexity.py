"""Complexity estimators and the classification tests built on them."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmspec import complexity as cx
from sturmspec import sequences as sq

AB = sq.Alphabet(("a", "b"), (0.0, 1.0))


def word_window(symbols, start=0):
    codes = np.array([AB.code(s) for s in symbols], dtype=np.int16)
    return sq.Window(start, codes, AB)


def fib_window(length, beta=None, start=0):
    beta = beta if beta is not None else Fraction(377, 610)
    spec = sq.CircleMapSpec(377, 610, beta, Fraction(0), 1.0)
    return spec.window(start, length, allow_periodic=True)


# ---------------------------------------------------------------------------
# Block complexity
# ---------------------------------------------------------------------------


def test_constant_word_has_single_factor():
    w = word_window("a" * 100)
    for n in (1, 3, 9):
        assert cx.block_complexity(w, n) == 1


def test_periodic_word_saturates_at_period():
    w = word_window("aabab" * 60)
    assert cx.block_complexity(w, 7) == 5


def test_fibonacci_word_minimal_complexity():
    w = fib_window(2000)
    for n in range(1, 13):
        assert cx.block_complexity(w, n) == n + 1
    assert cx.block_complexity(fib_window(200), 3) == 4


def test_block_complexity_validation():
    w = word_window("ab" * 10)
    with pytest.raises(sq.ValidationError):
        cx.block_complexity(w, 0)
    with pytest.raises(sq.ValidationError):
        cx.block_complexity(w, 21)


def test_block_complexity_vs_python_set_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        symbols = "".join(rng.choice(["a", "b"], size=rng.integers(20, 200)))
        w = word_window(symbols)
        n = int(rng.integers(1, 8))
        oracle = len({symbols[i : i + n] for i in range(len(symbols) - n + 1)})
        assert cx.block_complexity(w, n) == oracle


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="ab", min_size=80, max_size=200))
def test_complexity_monotone_in_n_and_window(text):
    # monotonicity in n needs n well below the window length
    w = word_window(text)
    vals = [cx.block_complexity(w, n) for n in range(1, 6)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    longer = word_window(text + text[: len(text) // 2])
    for n in range(1, 9):
        assert cx.block_complexity(longer, n) >= cx.block_complexity(w, n)


# ---------------------------------------------------------------------------
# Maximal pattern complexity
# ---------------------------------------------------------------------------


def test_pstar_level_one_counts_symbols():
    w = word_window("abba" * 30)
    cnt, tpl = cx.max_pattern_complexity(w, 1, 10)
    assert cnt == 2 and tpl.offsets == (0,)


def test_pstar_exhaustive_circle_pair():
    spec = sq.CircleMapSpec(377, 610, Fraction(2, 5), Fraction(1, 9), 1.0)
    w = spec.window(0, 5000, allow_periodic=True)
    cnt, _ = cx.max_pattern_complexity(w, 2, 50)
    assert cnt == 4


def test_pstar_sparse_exhaustive_and_beam_agree():
    spec = sq.SparseSpec(v=2.0, rule=("power", 3))
    w = spec.window(1, 2000)
    exact, tpl = cx.max_pattern_complexity(w, 3, 100, mode="exhaustive")
    beam, _ = cx.max_pattern_complexity(w, 3, 100, mode="beam")
    assert exact == 6
    assert beam == exact
    assert tpl.offsets[0] == 0 and len(tpl.offsets) == 3


def test_pstar_never_below_block_complexity():
    w = fib_window(3000)
    for n in (2, 4, 6):
        cnt, _ = cx.max_pattern_complexity(w, n, 80)
        assert cnt >= cx.block_complexity(w, n)


def test_pstar_template_budget_error():
    w = fib_window(1000)
    with pytest.raises(sq.ValidationError):
        cx.max_pattern_complexity(w, 6, 200, mode="exhaustive")


def test_pstar_window_guard():
    w = word_window("ab" * 30)
    with pytest.raises(sq.WindowTooShortError):
        cx.max_pattern_complexity(w, 2, 100)


def test_profile_matches_single_queries():
    w = fib_window(1500)
    prof = cx.pstar_profile(w, 4, 40)
    for n in range(1, 5):
        cnt, tpl = cx.max_pattern_complexity(w, n, 40)
        assert prof[n - 1][0] == cnt


def test_complexity_report_invariants_and_export():
    w = fib_window(1200)
    rep = cx.complexity_report(w, 5, 30)
    assert rep.p_values <= rep.pstar_values
    d = rep.as_dict()
    assert d["n"] == [1, 2, 3, 4, 5]
    assert len(rep.rows()) == 5
    assert rep.position_range[0] == 0


# ---------------------------------------------------------------------------
# Periodicity verdicts
# ---------------------------------------------------------------------------


def test_periodicity_detects_period_three():
    w = word_window("abb" * 50)
    verdict = cx.periodicity_test(w, 8)
    assert str(verdict) == "periodic-evidence(3)"
    # a genuine period no larger than the witness must exist
    assert cx.find_period(w) <= verdict.n_witness


def test_periodicity_on_aperiodic_words():
    verdict = cx.periodicity_test(fib_window(2000), 10)
    assert verdict.kind == "aperiodic-evidence"
    assert verdict.pstar_at_least_2n
    assert all(p == n + 1 for n, p in enumerate(verdict.p_values, start=1))


def test_periodicity_on_toeplitz_word():
    spec = sq.ToeplitzSpec(
        AB, sq.CodingTriple((), 1, 0), ("a", "b"), (3, 3), (0, 0)
    )
    verdict = cx.periodicity_test(spec.window(1, 3000), 10)
    assert verdict.kind == "aperiodic-evidence"


# ---------------------------------------------------------------------------
# Two-sided extension complexity
# ---------------------------------------------------------------------------


def test_sparse_extension_exceeds_double_rate():
    spec = sq.SparseSpec(v=2.0, rule=("power", 3))
    rows = cx.nonrecurrent_extension_test(spec, 0, [25, 40, 60, 90, 120])
    assert all(r.exceeds for r in rows)
    assert len(rows) == 5


def test_sparse_extension_higher_threshold():
    spec = sq.SparseSpec(v=2.0, rule=("power", 3))
    rows = cx.nonrecurrent_extension_test(spec, 5, [100, 140, 180, 220])
    assert all(r.exceeds for r in rows)
    assert all(r.threshold == 2 * r.n + 5 for r in rows)


def test_recurrent_word_respects_the_cap():
    w = fib_window(1200, start=-400)
    rows = cx.two_sided_complexity_report(w, 0, [10, 30, 60, 100])
    assert not any(r.exceeds for r in rows)


def test_extension_probe_guard():
    spec = sq.SparseSpec(v=2.0, rule=("power", 3))
    w = spec.window(-10, 50)
    with pytest.raises(sq.WindowTooShortError):
        cx.two_sided_complexity_report(w, 0, [60])
