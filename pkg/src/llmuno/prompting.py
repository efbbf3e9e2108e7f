"""Prompt rendering for LLM seats.

Every prompt has three parts: a role statement, a short rules summary and
the game-state block. The wording lives in plain-text ``string.Template``
files under ``llmuno/templates``; ``template_hash()`` fingerprints them so a
run can record exactly which wording it used.
"""

from __future__ import annotations

import hashlib
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .engine import COLOR_NAMES, DRAW, Observation, decode_action

LETTERS = string.ascii_uppercase
GOOD_TOKENS = ("good", "Good")
BAD_TOKENS = ("bad", "Bad")
TEMPLATE_NAMES = (
    "state_block",
    "rules",
    "cloze_autonomous",
    "cloze_cooperative",
    "counterfactual_autonomous",
    "counterfactual_cooperative",
)


@dataclass(frozen=True)
class RoleSpec:
    own_seat: int
    variant: str = "autonomous"
    assisted_seat: Optional[int] = None

    def __post_init__(self):
        if self.variant == "cooperative":
            if self.assisted_seat is None or self.assisted_seat == self.own_seat:
                raise ValueError("cooperative role needs an assisted seat other than its own")
        elif self.variant == "autonomous":
            if self.assisted_seat is not None:
                raise ValueError("autonomous role takes no assisted seat")
        else:
            raise ValueError(f"unknown role variant {self.variant!r}")


@dataclass(frozen=True)
class LetterAssignment:
    """Cyclic shift ``k``: letter ``i`` labels ``actions[(i + k) % n]``."""

    actions: tuple[int, ...]
    shift: int

    def __post_init__(self):
        n = len(self.actions)
        if n > len(LETTERS):
            raise ValueError(f"at most {len(LETTERS)} actions can be lettered, got {n}")
        if not 0 <= self.shift < max(n, 1):
            raise ValueError(f"shift {self.shift} out of range for {n} actions")

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(LETTERS[: len(self.actions)])

    def action_at(self, index: int) -> int:
        return self.actions[(index + self.shift) % len(self.actions)]

    @property
    def mapping(self) -> dict[str, int]:
        return {letter: self.action_at(i) for i, letter in enumerate(self.letters)}

    def letter_for(self, action: int) -> str:
        i = (self.actions.index(action) - self.shift) % len(self.actions)
        return LETTERS[i]


def rotations(actions) -> list[LetterAssignment]:
    actions = tuple(actions)
    return [LetterAssignment(actions, k) for k in range(len(actions))]


@dataclass(frozen=True)
class PromptBundle:
    method: str
    texts: tuple[str, ...]
    candidate_tokens: tuple[str, ...]
    assignments: tuple[LetterAssignment, ...] = ()
    actions: tuple[int, ...] = ()  # counterfactual: the action each text asks about


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    text = resources.files("llmuno").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    return text.rstrip("\n")


def template_hash() -> str:
    h = hashlib.sha256()
    for name in TEMPLATE_NAMES:
        h.update(name.encode())
        h.update(b"\0")
        h.update(load_template(name).encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def card_text(action: int) -> str:
    if action == DRAW:
        return "draw"
    color, face = decode_action(action)
    return f"{COLOR_NAMES[color]} {face}"


def _hand_card_text(card) -> str:
    return card.face if card.color is None else f"{COLOR_NAMES[card.color]} {card.face}"


def build_state_block(obs: Observation, assignment: Optional[LetterAssignment] = None,
                      labeled: bool = True) -> str:
    """Render the game-state part of a prompt.

    With ``labeled`` the legal actions are lettered per ``assignment``
    (shift 0 over ``obs.legal`` when none is given); otherwise they are
    listed plainly in ``obs.legal`` order.
    """
    n = obs.num_players
    action, by = obs.last_played
    last = card_text(action) + (" (starting card)" if by is None else f" (played by Player {by})")
    if labeled:
        assignment = assignment or LetterAssignment(tuple(obs.legal), 0)
        legal = ", ".join(f"{letter}: {card_text(a)}" for letter, a in assignment.mapping.items())
    else:
        legal = ", ".join(card_text(a) for a in obs.legal)
    return string.Template(load_template("state_block")).substitute(
        num_players=n,
        player_list=", ".join(f"Player {s}" for s in range(n)),
        card_counts=", ".join(f"Player {s}: {c}" for s, c in enumerate(obs.cards_per_seat)),
        last_played=last,
        hand=", ".join(_hand_card_text(c) for c in obs.own_hand),
        next_player=f"Player {obs.next_seat}",
        recent_moves="".join(f"\nPlayer {s}: {card_text(a)}" for s, a in obs.recent_moves),
        legal_actions=legal,
    )


def _role_fields(role: RoleSpec) -> dict:
    fields = {"own_seat": role.own_seat, "rules": load_template("rules")}
    if role.variant == "cooperative":
        fields["assisted_seat"] = role.assisted_seat
    return fields


def build_cloze_prompts(obs: Observation, role: RoleSpec) -> PromptBundle:
    n = len(obs.legal)
    if n < 2:
        raise ValueError(f"cloze prompting needs at least two legal actions, got {n}")
    template = string.Template(load_template(f"cloze_{role.variant}"))
    assignments = tuple(rotations(obs.legal))
    letters = LETTERS[:n]
    texts = tuple(
        template.substitute(
            _role_fields(role),
            state_block=build_state_block(obs, a),
            letters=", ".join(letters),
        )
        for a in assignments
    )
    return PromptBundle("cloze", texts, tuple(letters), assignments=assignments)


def build_counterfactual_prompts(obs: Observation, role: RoleSpec) -> PromptBundle:
    n = len(obs.legal)
    if n < 2:
        raise ValueError(f"counterfactual prompting needs at least two legal actions, got {n}")
    template = string.Template(load_template(f"counterfactual_{role.variant}"))
    block = build_state_block(obs, labeled=False)
    texts = tuple(
        template.substitute(_role_fields(role), state_block=block, action=card_text(a))
        for a in obs.legal
    )
    return PromptBundle("counterfactual", texts, GOOD_TOKENS + BAD_TOKENS, actions=tuple(obs.legal))
