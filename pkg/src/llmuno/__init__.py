"""Language-model seats for multi-player UNO, with seat-bias baselines and z-tests."""

from .engine import (
    ACTIONS, DRAW, Card, GameResult, GameState, IllegalActionError, Observation, Rules,
    action_code, action_id, is_terminal, legal_actions, new_game, observe, payoffs, step,
)
from .agents import AgentSpec, LLMAgent, RandomAgent, RuleAgent, random_act, rule_act
from .harness import ExperimentConfig, load_config, preset, presets, run_experiment
from .stats import summarize_run, z_test

__version__ = "0.1.0"
