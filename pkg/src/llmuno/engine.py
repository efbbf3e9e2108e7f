"""Seedable N-player UNO state machine.

Cards are ``Card(color, face)`` tuples. Colors use the RLCard shorthand
letters ``r g b y``; an undeclared wild card has ``color=None``. Actions are
integers in ``[0, 60]``: ids 0-59 are ``"c-f"`` in color-major order and 60
is ``"draw"``.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

COLORS = ("r", "g", "b", "y")
COLOR_NAMES = {"r": "red", "g": "green", "b": "blue", "y": "yellow"}
FACES = (
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
    "skip", "reverse", "draw_2", "wild", "wild_draw_4",
)
WILD_FACES = ("wild", "wild_draw_4")

HAND_SIZE = 7
DECK_SIZE = 108
MIN_PLAYERS, MAX_PLAYERS = 2, 10
DEFAULT_MAX_TURNS = 3000

ACTIONS = tuple(f"{c}-{f}" for c in COLORS for f in FACES) + ("draw",)
ACTION_INDEX = {code: i for i, code in enumerate(ACTIONS)}
DRAW = ACTION_INDEX["draw"]
NUM_ACTIONS = len(ACTIONS)


class Card(NamedTuple):
    color: Optional[str]
    face: str

    def __str__(self) -> str:
        return self.face if self.color is None else f"{self.color}-{self.face}"


class IllegalActionError(ValueError):
    pass


class GameOverError(RuntimeError):
    pass


def action_code(action: int) -> str:
    return ACTIONS[action]


def action_id(code: str) -> int:
    try:
        return ACTION_INDEX[code]
    except KeyError:
        raise ValueError(f"unknown action shorthand {code!r}") from None


def decode_action(action: int) -> tuple[str, str]:
    """``(color, face)`` of a play action; raises for ``draw``."""
    if not 0 <= action < DRAW:
        raise ValueError(f"{action} is not a play action")
    return COLORS[action // len(FACES)], FACES[action % len(FACES)]


def _encode(color: str, face: str) -> int:
    return COLORS.index(color) * len(FACES) + FACES.index(face)


# card -> the action(s) that play it
_CARD_ACTIONS: dict[Card, tuple[int, ...]] = {}
for _c in COLORS:
    for _f in FACES[:13]:
        _CARD_ACTIONS[Card(_c, _f)] = (_encode(_c, _f),)
for _f in WILD_FACES:
    _CARD_ACTIONS[Card(None, _f)] = tuple(_encode(_c, _f) for _c in COLORS)


def card_for_action(action: int) -> Card:
    """The physical card consumed by a play action."""
    color, face = decode_action(action)
    return Card(None, face) if face in WILD_FACES else Card(color, face)


def standard_deck() -> list[Card]:
    deck = []
    for c in COLORS:
        deck.append(Card(c, "0"))
        for f in FACES[1:13]:
            deck += [Card(c, f), Card(c, f)]
    for f in WILD_FACES:
        deck += [Card(None, f)] * 4
    return deck


@dataclass(frozen=True)
class Rules:
    """Rule switches.

    The defaults are the reference rules: the starter card has no effect, a
    reverse acts as a skip with two players, a drawn card that matches the
    target color (or any drawn wild) is played at once the way RLCard does,
    and wild_draw_4 is only legal when nothing else is.
    """

    starter_effects: bool = False
    play_drawn_card: bool = True
    restrict_wild_draw_4: bool = True
    two_player_reverse_skips: bool = True


DEFAULT_RULES = Rules()


@dataclass
class GameState:
    num_players: int
    hands: list[list[Card]]
    draw_pile: list[Card]  # top is the last element
    discard_pile: list[Card]  # top is the last element
    target: tuple[str, str]
    rng: random.Random
    current_seat: int = 0
    direction: int = 1
    turn_count: int = 0
    history: list[tuple[int, int]] = field(default_factory=list)
    winner: Optional[int] = None
    max_turns: int = DEFAULT_MAX_TURNS
    rules: Rules = DEFAULT_RULES

    def copy(self) -> "GameState":
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return GameState(
            num_players=self.num_players,
            hands=[list(h) for h in self.hands],
            draw_pile=list(self.draw_pile),
            discard_pile=list(self.discard_pile),
            target=self.target,
            rng=rng,
            current_seat=self.current_seat,
            direction=self.direction,
            turn_count=self.turn_count,
            history=list(self.history),
            winner=self.winner,
            max_turns=self.max_turns,
            rules=self.rules,
        )

    def fingerprint(self) -> str:
        """Stable digest of the full state, generator included."""
        payload = repr((
            self.num_players, self.hands, self.draw_pile, self.discard_pile,
            self.target, self.current_seat, self.direction, self.turn_count,
            self.history, self.winner, self.max_turns, self.rng.getstate(),
        ))
        return hashlib.sha256(payload.encode()).hexdigest()

    def next_seat(self, steps: int = 1) -> int:
        return (self.current_seat + steps * self.direction) % self.num_players


@dataclass(frozen=True)
class Observation:
    num_players: int
    seat: int
    cards_per_seat: tuple[int, ...]
    last_played: tuple[int, Optional[int]]  # (action, seat); seat None for the starter
    own_hand: tuple[Card, ...]
    next_seat: int
    recent_moves: tuple[tuple[int, int], ...]
    legal: tuple[int, ...]


@dataclass(frozen=True)
class GameResult:
    winner: Optional[int]
    payoffs: tuple[float, ...]
    turns: int
    terminated_by_cap: bool


def new_game(
    num_players: int,
    seed: int,
    max_turns: int = DEFAULT_MAX_TURNS,
    rules: Rules = DEFAULT_RULES,
) -> GameState:
    if not MIN_PLAYERS <= num_players <= MAX_PLAYERS:
        raise ValueError(f"num_players must be in [{MIN_PLAYERS}, {MAX_PLAYERS}], got {num_players}")
    rng = random.Random(seed)
    deck = standard_deck()
    rng.shuffle(deck)
    hands: list[list[Card]] = [[] for _ in range(num_players)]
    for _ in range(HAND_SIZE):
        for hand in hands:
            hand.append(deck.pop())
    # burned wilds stay on the discard pile under the starter
    discard = [deck.pop()]
    while discard[-1].color is None:
        discard.append(deck.pop())
    starter = discard[-1]
    state = GameState(
        num_players=num_players,
        hands=hands,
        draw_pile=deck,
        discard_pile=discard,
        target=(starter.color, starter.face),
        rng=rng,
        max_turns=max_turns,
        rules=rules,
    )
    if rules.starter_effects:
        if starter.face == "skip":
            state.current_seat = 1
        elif starter.face == "reverse":
            state.direction = -1
            state.current_seat = num_players - 1
        elif starter.face == "draw_2":
            _deal(state, 0, 2)
    return state


def is_terminal(state: GameState) -> bool:
    return state.winner is not None or state.turn_count >= state.max_turns


def winner(state: GameState) -> Optional[int]:
    return state.winner


def payoffs(state: GameState) -> GameResult:
    if not is_terminal(state):
        raise GameOverError("game is not finished")
    n = state.num_players
    if state.winner is None:
        return GameResult(None, (0.0,) * n, state.turn_count, True)
    pay = tuple(1.0 if s == state.winner else -1.0 for s in range(n))
    return GameResult(state.winner, pay, state.turn_count, False)


def legal_actions(state: GameState) -> list[int]:
    if is_terminal(state):
        raise GameOverError("no legal actions in a finished game")
    color, face = state.target
    legal: set[int] = set()
    wd4: tuple[int, ...] = ()
    restrict = state.rules.restrict_wild_draw_4
    for card in state.hands[state.current_seat]:
        if card.color is None:
            if restrict and card.face == "wild_draw_4":
                wd4 = _CARD_ACTIONS[card]
            else:
                legal.update(_CARD_ACTIONS[card])
        elif card.color == color or card.face == face:
            legal.update(_CARD_ACTIONS[card])
    if not legal:
        if wd4:
            return list(wd4)
        return [DRAW]
    return sorted(legal)


def _draw_one(state: GameState) -> Optional[Card]:
    if not state.draw_pile:
        if len(state.discard_pile) <= 1:
            return None
        top = state.discard_pile.pop()
        state.draw_pile = state.discard_pile
        state.rng.shuffle(state.draw_pile)
        state.discard_pile = [top]
    return state.draw_pile.pop()


def _deal(state: GameState, seat: int, count: int) -> None:
    hand = state.hands[seat]
    for _ in range(count):
        card = _draw_one(state)
        if card is None:
            return
        hand.append(card)


def _apply_play(state: GameState, seat: int, card: Card, color: str) -> None:
    state.discard_pile.append(card)
    face = card.face
    state.target = (color, face)
    if not state.hands[seat]:
        state.winner = seat
        return
    if face == "skip":
        state.current_seat = state.next_seat(2)
    elif face == "reverse":
        if state.num_players == 2 and state.rules.two_player_reverse_skips:
            state.current_seat = seat
        else:
            state.direction = -state.direction
            state.current_seat = state.next_seat()
    elif face == "draw_2" or face == "wild_draw_4":
        _deal(state, state.next_seat(), 2 if face == "draw_2" else 4)
        state.current_seat = state.next_seat(2)
    else:
        state.current_seat = state.next_seat()


def step(state: GameState, action: int, *, inplace: bool = False) -> GameState:
    """Apply ``action`` for the seat to move.

    Returns a new state unless ``inplace`` is set. An illegal action raises
    ``IllegalActionError`` and leaves ``state`` untouched.
    """
    if action not in legal_actions(state):
        raise IllegalActionError(
            f"{action_code(action) if 0 <= action < NUM_ACTIONS else action} "
            f"is not legal for seat {state.current_seat}"
        )
    if not inplace:
        state = state.copy()
    seat = state.current_seat
    state.history.append((seat, action))
    state.turn_count += 1

    if action == DRAW:
        card = _draw_one(state)
        if card is None:
            state.current_seat = state.next_seat()
        elif state.rules.play_drawn_card and card.color is None:
            # drawn wilds go straight down with a random color and no effect
            color = COLORS[state.rng.randrange(4)]
            state.history.append((seat, _encode(color, card.face)))
            state.discard_pile.append(card)
            state.target = (color, card.face)
            state.current_seat = state.next_seat()
        elif state.rules.play_drawn_card and card.color == state.target[0]:
            state.history.append((seat, _CARD_ACTIONS[card][0]))
            _apply_play(state, seat, card, card.color)
        else:
            state.hands[seat].append(card)
            state.current_seat = state.next_seat()
        return state

    color, face = decode_action(action)
    card = Card(None, face) if face in WILD_FACES else Card(color, face)
    state.hands[seat].remove(card)
    _apply_play(state, seat, card, color)
    return state


def observe(state: GameState, seat: int) -> Observation:
    if not 0 <= seat < state.num_players:
        raise ValueError(f"seat {seat} out of range")
    last: tuple[int, Optional[int]] | None = None
    for s, a in reversed(state.history):
        if a != DRAW:
            last = (a, s)
            break
    if last is None:
        starter = next(c for c in reversed(state.discard_pile) if c.color is not None)
        last = (_CARD_ACTIONS[starter][0], None)
    legal = tuple(legal_actions(state)) if seat == state.current_seat and not is_terminal(state) else ()
    return Observation(
        num_players=state.num_players,
        seat=seat,
        cards_per_seat=tuple(len(h) for h in state.hands),
        last_played=last,
        own_hand=tuple(state.hands[seat]),
        next_seat=(seat + state.direction) % state.num_players,
        recent_moves=tuple(state.history[-5:]),
        legal=legal,
    )


def card_multiset(state: GameState) -> Counter:
    """All cards in play; equals ``Counter(standard_deck())`` when conserved."""
    counts = Counter(state.draw_pile)
    counts.update(state.discard_pile)
    for hand in state.hands:
        counts.update(hand)
    return counts
