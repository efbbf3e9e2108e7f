# %% [markdown]
# # Opening-seat advantage
# Identical random players still win at different rates depending on where they sit.

# %%
from llmuno.harness import preset, run_experiment

GAMES = 2000

# %%
for name in ("e1", "e3a", "e4"):
    report = run_experiment(preset(name, games=GAMES)).report
    rates = " / ".join(f"{100 * report.win_rate(s):.1f}%" for s in range(report.num_players))
    print(f"{name:>4}: {rates}   (capped {report.capped})")

# %% [markdown]
# With only a couple of thousand games the seat gaps sit close to the sampling noise;
# the full presets use 10,000 games (100,000 for e4).
