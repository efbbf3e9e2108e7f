"""Baseline policies and the agent contract shared by every seat."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Protocol

from . import prompting, scoring
from .engine import COLORS, DRAW, Observation, action_code, decode_action

AGENT_KINDS = ("random", "rule", "llm")
METHODS = ("cloze", "counterfactual")
ROLE_VARIANTS = ("autonomous", "cooperative")


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    method: Optional[str] = None
    role: str = "autonomous"
    assisted_seat: Optional[int] = None

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.kind == "llm":
            if self.method not in METHODS:
                raise ValueError(f"llm agent needs method in {METHODS}, got {self.method!r}")
            if self.role not in ROLE_VARIANTS:
                raise ValueError(f"unknown role variant {self.role!r}")
            if (self.role == "cooperative") != (self.assisted_seat is not None):
                raise ValueError("assisted_seat is required for, and only for, cooperative agents")

    def check_seat(self, seat: int) -> None:
        if self.assisted_seat is not None and self.assisted_seat == seat:
            raise ValueError(f"agent in seat {seat} cannot assist itself")


@dataclass
class Decision:
    """An agent's move plus whatever it wants logged about how it got there."""

    action: int
    method: str
    rows: list[dict] = field(default_factory=list)
    fallback: bool = False
    queries: int = 0


class Agent(Protocol):
    def act(self, obs: Observation) -> Decision: ...


def random_act(obs: Observation, rng: random.Random) -> int:
    legal = obs.legal
    return legal[rng.randrange(len(legal))]


def _color_rank(hand) -> dict[str, tuple[int, int]]:
    # sort key per color: most frequent first, then r, g, b, y order
    counts = {c: 0 for c in COLORS}
    for card in hand:
        if card.color is not None:
            counts[card.color] += 1
    return {c: (-counts[c], i) for i, c in enumerate(COLORS)}


def rule_act(obs: Observation) -> int:
    """Majority-color heuristic.

    Prefer a non-wild play in the color held most often (ties by r, g, b, y
    then lowest id); otherwise a wild declaring that color; otherwise draw.
    """
    rank = _color_rank(obs.own_hand)
    plays, wilds = [], []
    for a in obs.legal:
        if a == DRAW:
            continue
        color, face = decode_action(a)
        (wilds if face.startswith("wild") else plays).append((rank[color], a))
    if plays:
        return min(plays)[1]
    if wilds:
        return min(wilds)[1]
    return DRAW


class RandomAgent:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def act(self, obs: Observation) -> Decision:
        return Decision(random_act(obs, self.rng), "random")


class RuleAgent:
    def act(self, obs: Observation) -> Decision:
        return Decision(rule_act(obs), "rule")


class LLMAgent:
    """Seat driven by a first-token probability backend.

    A single legal action is played without querying the backend.
    """

    def __init__(self, spec: AgentSpec, seat: int, backend):
        if spec.kind != "llm":
            raise ValueError("LLMAgent needs an llm AgentSpec")
        spec.check_seat(seat)
        self.spec = spec
        self.seat = seat
        self.backend = backend
        self.role = prompting.RoleSpec(seat, spec.role, spec.assisted_seat)
        self.missing_tokens = 0

    def act(self, obs: Observation) -> Decision:
        if len(obs.legal) == 1:
            return Decision(scoring.forced_move(obs.legal), "forced")
        if self.spec.method == "cloze":
            bundle = prompting.build_cloze_prompts(obs, self.role)
        else:
            bundle = prompting.build_counterfactual_prompts(obs, self.role)
        dists = [self.backend.score_first_token(t, bundle.candidate_tokens) for t in bundle.texts]
        self.missing_tokens += sum(len(d.missing) for d in dists)

        rows = []
        if bundle.method == "cloze":
            chosen, table = scoring.cloze_select(obs.legal, dists, bundle.assignments)
            cumulative = {s.action: s.cumulative for s in table}
            for dist, assignment in zip(dists, bundle.assignments):
                for letter, a in assignment.mapping.items():
                    rows.append(dict(shift=assignment.shift, letter=letter, token_prob=dist.get(letter),
                                     action=action_code(a), cumulative=cumulative[a], chosen=int(a == chosen)))
        else:
            diffs = [scoring.differential(a, d) for a, d in zip(bundle.actions, dists)]
            chosen, table = scoring.counterfactual_select(obs.legal, diffs)
            for i, d in enumerate(table):
                for token, p in (("good", d.p_good), ("bad", d.p_bad)):
                    rows.append(dict(shift=i, letter=token, token_prob=p, action=action_code(d.action),
                                     cumulative=d.diff, chosen=int(d.action == chosen)))
        return Decision(chosen, bundle.method, rows, queries=len(dists))
