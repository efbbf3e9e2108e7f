import random
from collections import Counter

import pytest

from llmuno.engine import (
    COLORS, DRAW, FACES, Card, GameState, action_id, is_terminal, legal_actions, new_game, standard_deck, step,
)

SAMPLE_HAND = [Card("r", "1"), Card("g", "2"), Card("y", "1"), Card("g", "9"),
             Card("y", "7"), Card("r", "skip"), Card("y", "5")]
SAMPLE_HISTORY = [(0, "draw"), (2, "y-3"), (1, "g-wild"), (0, "g-draw_2"), (1, "g-skip")]
SAMPLE_BLOCK = """\
Current Game State
Number of Players:
3 (Player 0, Player 1, Player 2)
Number of Cards per Player:
Player 0: 3, Player 1: 5, Player 2: 7
Last Played Card:
green skip (played by Player 1)
Your Hand:
red 1, green 2, yellow 1, green 9, yellow 7, red skip, yellow 5
Next Player: Player 1
Recent Moves (last 5 cards played):
Player 0: draw
Player 2: yellow 3
Player 1: green wild
Player 0: green draw_2
Player 1: green skip
Legal Actions: A: green 2, B: green 9, C: red skip"""


def build_state(hands, target, *, discard=(), history=(), current_seat=0, direction=1, seed=0):
    """A consistent GameState holding ``hands``; the rest of the deck is split into piles."""
    rest = Counter(standard_deck())
    for card in [c for h in hands for c in h] + list(discard):
        rest[card] -= 1
        assert rest[card] >= 0, f"too many copies of {card}"
    pool = sorted(rest.elements(), key=str)
    random.Random(seed).shuffle(pool)
    starter = Card(*target) if target[1] not in ("wild", "wild_draw_4") else Card(None, target[1])
    discard = list(discard)
    if not discard:
        pool.remove(starter)
        discard = [starter]
    return GameState(
        num_players=len(hands),
        hands=[list(h) for h in hands],
        draw_pile=pool,
        discard_pile=discard,
        target=target,
        rng=random.Random(seed),
        current_seat=current_seat,
        direction=direction,
        history=[(s, action_id(a)) for s, a in history],
        turn_count=len(history),
    )


@pytest.fixture
def sample_state():
    others = [Card("b", "4"), Card("b", "5"), Card("r", "8")], \
             [Card("b", "1"), Card("b", "2"), Card("r", "3"), Card("y", "8"), Card("g", "4")]
    discard = [Card("r", "9"), Card("y", "3"), Card(None, "wild"), Card("g", "draw_2"), Card("g", "skip")]
    return build_state([others[0], others[1], SAMPLE_HAND], ("g", "skip"), discard=discard,
                       history=SAMPLE_HISTORY, current_seat=2, direction=-1)


def brute_force_legal(state):
    """Scan every (action, card in hand) pair against each matching clause."""
    color, face = state.target
    hand = state.hands[state.current_seat]
    plays, wd4 = [], []
    for a in range(DRAW):
        c, f = COLORS[a // len(FACES)], FACES[a % len(FACES)]
        for card in hand:
            if f in ("wild", "wild_draw_4"):
                holds = card.color is None and card.face == f
            else:
                holds = card.color == c and card.face == f
            if not holds:
                continue
            if f == "wild_draw_4":
                wd4.append(a)
            elif c == color or f == face or f == "wild":
                plays.append(a)
            break
    if plays:
        return sorted(plays)
    if wd4:
        return sorted(wd4)
    return [DRAW]


def random_walk(num_players, seed, steps=None, rng=None):
    """Yield successive states of a game played with uniformly random legal moves."""
    rng = rng or random.Random(seed)
    state = new_game(num_players, seed)
    yield state
    n = 0
    while not is_terminal(state) and (steps is None or n < steps):
        legal = legal_actions(state)
        step(state, legal[rng.randrange(len(legal))], inplace=True)
        n += 1
        yield state


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
