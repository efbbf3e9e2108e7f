# %% [markdown]
# # Cloze scoring with rotated letters
# Each legal move appears under every letter once, so a model that simply likes "A"
# adds the same amount to every move.

# %%
import numpy as np

from llmuno.engine import action_code, action_id
from llmuno.prompting import rotations
from llmuno.scoring import TokenDistribution, cloze_select

legal = tuple(action_id(c) for c in ("g-2", "g-9", "r-skip"))
shifts = rotations(legal)
for a in shifts:
    print(a.shift, {k: action_code(v) for k, v in a.mapping.items()})

# %%
# A letter-biased but content-blind model.
bias = {"A": 0.6, "B": 0.25, "C": 0.1}
_, table = cloze_select(legal, [TokenDistribution(bias)] * 3, shifts)
print({action_code(s.action): round(s.cumulative, 12) for s in table})

# %%
# Now add some content preference on top: whichever letter shows r-skip gets a boost.
dists = []
for a in shifts:
    probs = np.array([bias[L] for L in a.letters])
    probs[a.letters.index(a.letter_for(action_id("r-skip")))] += 0.05
    dists.append(TokenDistribution(dict(zip(a.letters, probs.tolist()))))
chosen, table = cloze_select(legal, dists, shifts)
print("chosen:", action_code(chosen), {action_code(s.action): round(s.cumulative, 4) for s in table})
