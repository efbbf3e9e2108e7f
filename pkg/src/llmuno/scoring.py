"""Turning first-token probabilities into a move.

Cloze: every legal action is shown under every letter once (one prompt per
cyclic shift) and an action's score is the sum of the probabilities its
letters received. A letter preference that ignores content then adds the
same total to every action. Counterfactual: one prompt per action, scored
as P(good) - P(bad).

Ties anywhere go to the lowest action id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .prompting import BAD_TOKENS, GOOD_TOKENS, LetterAssignment


@dataclass(frozen=True)
class TokenDistribution:
    probs: dict[str, float]
    missing: tuple[str, ...] = ()  # requested tokens the source did not report

    def __post_init__(self):
        for token, p in self.probs.items():
            if not 0.0 <= p <= 1.0 or math.isnan(p):
                raise ValueError(f"probability for {token!r} out of range: {p}")

    def get(self, token: str) -> float:
        return self.probs.get(token, 0.0)


@dataclass
class ScoredAction:
    action: int
    per_shift: list[tuple[int, str, float]] = field(default_factory=list)

    @property
    def cumulative(self) -> float:
        return math.fsum(p for _, _, p in self.per_shift)


@dataclass(frozen=True)
class Differential:
    action: int
    p_good: float
    p_bad: float

    @property
    def diff(self) -> float:
        return self.p_good - self.p_bad


def _argmax(scores: dict[int, float]) -> int:
    best = max(scores.values())
    return min(a for a, s in scores.items() if s == best)


def cloze_select(legal: Sequence[int], shift_dists: Sequence[TokenDistribution],
                 assignments: Sequence[LetterAssignment]) -> tuple[int, list[ScoredAction]]:
    n = len(legal)
    if n < 2:
        raise ValueError("cloze selection needs at least two legal actions")
    if len(shift_dists) != n or len(assignments) != n:
        raise ValueError(f"expected {n} distributions and assignments, got "
                         f"{len(shift_dists)} and {len(assignments)}")
    table = {a: ScoredAction(a) for a in legal}
    for dist, assignment in zip(shift_dists, assignments):
        if set(assignment.actions) != set(legal):
            raise ValueError("letter assignment does not cover the legal actions")
        for letter, action in assignment.mapping.items():
            table[action].per_shift.append((assignment.shift, letter, dist.get(letter)))
    # fsum is exactly rounded, so equal multisets of probabilities tie exactly
    chosen = _argmax({a: s.cumulative for a, s in table.items()})
    return chosen, [table[a] for a in legal]


def differential(action: int, dist: TokenDistribution,
                 good=GOOD_TOKENS, bad=BAD_TOKENS) -> Differential:
    return Differential(
        action,
        math.fsum(dist.get(t) for t in good),
        math.fsum(dist.get(t) for t in bad),
    )


def counterfactual_select(legal: Sequence[int],
                          diffs: Sequence[Differential]) -> tuple[int, list[Differential]]:
    if len(legal) < 2:
        raise ValueError("counterfactual selection needs at least two legal actions")
    by_action = {d.action: d for d in diffs}
    if set(by_action) != set(legal):
        raise ValueError("differentials do not match the legal actions")
    chosen = _argmax({a: d.diff for a, d in by_action.items()})
    return chosen, [by_action[a] for a in legal]


def forced_move(legal: Sequence[int]) -> int:
    if len(legal) != 1:
        raise ValueError(f"forced_move needs exactly one legal action, got {len(legal)}")
    return legal[0]
