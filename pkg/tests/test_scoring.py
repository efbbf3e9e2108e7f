import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from llmuno.engine import DRAW, action_id
from llmuno.prompting import LETTERS, LetterAssignment, rotations
from llmuno.scoring import (
    Differential, TokenDistribution, cloze_select, counterfactual_select, differential, forced_move,
)

G2, G9, RSKIP = action_id("g-2"), action_id("g-9"), action_id("r-skip")
# per-shift letter probabilities as printed in the worked trace; base order g-2, g-9, r-skip
TRACE_DISTS = [
    {"A": 0.1103, "B": 0.0758, "C": 0.6345},
    {"A": 0.0609, "B": 0.5780, "C": 0.1877},
    {"A": 0.3065, "B": 0.3936, "C": 0.1278},
]
TRACE_PRINTED = {G2: 0.6915, G9: 0.2645, RSKIP: 1.5191}


def dists(rows):
    return [TokenDistribution(r) for r in rows]


def test_trace_replay():
    assignments = rotations((G2, G9, RSKIP))
    assert assignments[1].mapping == {"A": G9, "B": RSKIP, "C": G2}
    assert assignments[2].mapping == {"A": RSKIP, "B": G2, "C": G9}
    chosen, table = cloze_select((G2, G9, RSKIP), dists(TRACE_DISTS), assignments)
    assert chosen == RSKIP
    scores = {s.action: s.cumulative for s in table}
    for a, printed in TRACE_PRINTED.items():
        assert abs(scores[a] - printed) <= 2e-4
    assert scores[G2] == pytest.approx(0.6916, abs=1e-12)
    assert scores[RSKIP] == pytest.approx(1.5190, abs=1e-12)
    assert [(k, l) for k, l, _ in table[2].per_shift] == [(0, "C"), (1, "B"), (2, "A")]


def test_uniform_letters_tie_to_lowest_id():
    legal = (RSKIP, G2, G9)
    chosen, table = cloze_select(legal, dists([{"A": 1 / 3, "B": 1 / 3, "C": 1 / 3}] * 3), rotations(legal))
    assert chosen == min(legal)
    assert len({s.cumulative for s in table}) == 1


def test_always_a_gives_exactly_one():
    legal = tuple(range(0, 70, 10))[:6]
    row = {L: (1.0 if L == "A" else 0.0) for L in LETTERS[:6]}
    _, table = cloze_select(legal, dists([row] * 6), rotations(legal))
    assert all(s.cumulative == 1.0 for s in table)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 26).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 60), min_size=n, max_size=n, unique=True),
    st.lists(st.floats(0, 1 / n), min_size=n, max_size=n))))
def test_position_only_preference_cancels(case):
    legal, weights = case
    n = len(legal)
    row = dict(zip(LETTERS[:n], weights))
    chosen, table = cloze_select(legal, dists([row] * n), rotations(legal))
    values = [s.cumulative for s in table]
    assert max(values) - min(values) <= 1e-9
    assert chosen == min(legal)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.data())
def test_content_dominance(n, data):
    legal = tuple(sorted(data.draw(st.lists(st.integers(0, 60), min_size=n, max_size=n, unique=True))))
    target = data.draw(st.sampled_from(legal))
    assignments = rotations(legal)
    rows = []
    for a in assignments:
        hot = a.letter_for(target)
        rows.append({L: (0.8 if L == hot else 0.2 / n) for L in a.letters})
    chosen, table = cloze_select(legal, dists(rows), assignments)
    assert chosen == target
    # log/score consistency: cumulative equals the logged per-shift probabilities
    for s in table:
        assert len(s.per_shift) == n
        assert s.cumulative == math.fsum(rows[k][L] for k, L, _ in s.per_shift)


def test_cloze_select_validates_inputs():
    legal = (G2, G9)
    with pytest.raises(ValueError):
        cloze_select(legal, dists([{"A": 1}]), rotations(legal))
    with pytest.raises(ValueError):
        cloze_select((G2,), dists([{"A": 1}]), rotations((G2,)))
    with pytest.raises(ValueError):
        cloze_select(legal, dists([{"A": 1}] * 2), rotations((G2, RSKIP)))


def test_missing_letter_counts_as_zero():
    legal = (G2, G9)
    chosen, table = cloze_select(legal, [TokenDistribution({"B": 0.4}, missing=("A",))] * 2, rotations(legal))
    assert [s.cumulative for s in table] == [0.4, 0.4] and chosen == G2


def test_token_distribution_bounds():
    with pytest.raises(ValueError):
        TokenDistribution({"A": 1.2})
    with pytest.raises(ValueError):
        TokenDistribution({"A": -0.1})
    with pytest.raises(ValueError):
        TokenDistribution({"A": float("nan")})


def test_counterfactual_argmax():
    diffs = [Differential(G2, 0.30, 0.20), Differential(G9, 0.10, 0.30), Differential(RSKIP, 0.70, 0.15)]
    chosen, table = counterfactual_select((G2, G9, RSKIP), diffs)
    assert chosen == RSKIP and [d.action for d in table] == [G2, G9, RSKIP]


def test_counterfactual_tie_lowest_id():
    diffs = [Differential(a, 0.4, 0.1) for a in (G9, RSKIP, G2)]
    assert counterfactual_select((G2, G9, RSKIP), diffs)[0] == RSKIP


def test_differential_sums_surface_variants():
    d = differential(G2, TokenDistribution({"good": 0.5, "Good": 0.1, "bad": 0.2, "Bad": 0.05}))
    assert d.p_good == pytest.approx(0.6) and d.p_bad == pytest.approx(0.25)
    assert d.diff == pytest.approx(0.35)
    assert -1 <= d.diff <= 1


def test_counterfactual_rejects_mismatched_table():
    with pytest.raises(ValueError):
        counterfactual_select((G2, G9), [Differential(G2, 0.1, 0.0), Differential(RSKIP, 0.1, 0.0)])


# dyadic probabilities keep every sum and product below exact, so the argmax comparison is strict
dyadic = st.integers(0, 512).map(lambda k: k / 1024)
table_strategy = st.lists(st.tuples(st.integers(0, 60), dyadic, dyadic),
                          min_size=2, max_size=10, unique_by=lambda t: t[0])


@settings(max_examples=300, deadline=None)
@given(table_strategy, st.randoms(use_true_random=False), st.sampled_from([0.25, 0.5, 2.0]),
       dyadic)
def test_counterfactual_invariances(rows, rng, scale, offset):
    legal = tuple(a for a, _, _ in rows)
    diffs = [Differential(a, g, b) for a, g, b in rows]
    chosen, _ = counterfactual_select(legal, diffs)
    shuffled = list(diffs)
    rng.shuffle(shuffled)
    assert counterfactual_select(legal, shuffled)[0] == chosen
    shifted = [Differential(d.action, d.p_good + offset, d.p_bad) for d in diffs]
    scaled = [Differential(d.action, d.p_good * scale, d.p_bad * scale) for d in diffs]
    assert counterfactual_select(legal, shifted)[0] == chosen
    assert counterfactual_select(legal, scaled)[0] == chosen


def test_forced_move():
    assert forced_move([DRAW]) == DRAW
    assert forced_move([action_id("r-5")]) == action_id("r-5")
    with pytest.raises(ValueError):
        forced_move([])
    with pytest.raises(ValueError):
        forced_move([1, 2])


def test_letter_assignment_matches_formula():
    rng = random.Random(4)
    for _ in range(100):
        n = rng.randint(1, 26)
        actions = tuple(rng.sample(range(61), n))
        k = rng.randrange(n)
        a = LetterAssignment(actions, k)
        assert all(a.mapping[LETTERS[i]] == actions[(i + k) % n] for i in range(n))
