# %% [markdown]
# # A cooperative LLM seat against a scripted backend
# Seat 2 is prompted to help seat 1 win. The backend is a keyword mock, so the run is
# offline and reproducible; swap the backend section of a config for a real endpoint.

# %%
import tempfile
from pathlib import Path

from llmuno.backend import BackendSpec
from llmuno.harness import preset, run_experiment
from llmuno.stats import summarize_run

backend = BackendSpec(kind="mock", script="content-keyword", keyword="draw_2", keyword_prob=0.9)
out = Path(tempfile.mkdtemp()) / "e5b"
config = preset("e5b", games=300, backend=backend, out_dir=str(out))
result = run_experiment(config)

# %%
print(summarize_run(out).to_text())

# %%
print((out / "turns.csv").read_text().splitlines()[:7])
