# %% [markdown]
# # One game, move by move
# Two seats: a random player against the majority-color rule player.

# %%
import random

from llmuno.agents import rule_act, random_act
from llmuno.engine import action_code, is_terminal, new_game, observe, payoffs, step

state = new_game(2, seed=2024)
rng = random.Random(1)
print("starter:", state.target, "| hands:", [len(h) for h in state.hands])

# %%
while not is_terminal(state):
    seat = state.current_seat
    obs = observe(state, seat)
    action = random_act(obs, rng) if seat == 0 else rule_act(obs)
    if state.turn_count < 12:
        print(f"turn {state.turn_count:>3}  seat {seat}  legal {len(obs.legal):>2}  plays {action_code(action)}")
    step(state, action, inplace=True)

# %%
result = payoffs(state)
print("winner:", result.winner, "after", result.turns, "turns; payoffs", result.payoffs)
