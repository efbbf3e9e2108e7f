"""Batch runner: seats, seeds, failure policy and on-disk records.

Game ``g`` of an experiment is seeded from ``(master_seed, g)`` alone, so a
run gives the same records whatever the worker count.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional

from . import stats
from .agents import AgentSpec, Decision, LLMAgent, RandomAgent, RuleAgent, random_act
from .backend import BackendError, BackendSpec, make_backend
from .engine import (
    DEFAULT_MAX_TURNS, DEFAULT_RULES, GameResult, Rules, action_code, is_terminal, new_game, observe, payoffs, step,
)
from .prompting import template_hash

log = logging.getLogger(__name__)

FAILURE_POLICIES = ("abort_game", "random_fallback")
TURN_LOGGING = ("none", "llm", "all")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    num_players: int
    seats: tuple[AgentSpec, ...]
    games: int = 10_000
    master_seed: int = 0
    max_turns: int = DEFAULT_MAX_TURNS
    baseline_p0: float = 0.5
    test_seat: Optional[int] = None
    assisted_seat: Optional[int] = None
    out_dir: Optional[str] = None
    backend: Optional[BackendSpec] = None
    parallelism: int = 1
    on_backend_failure: str = "abort_game"
    max_attempts: int = 3
    log_turns: str = "llm"
    rules: Rules = DEFAULT_RULES
    # must be picklable (module-level) when parallelism > 1
    payoff_shaping: Optional[Callable[[GameResult], tuple]] = None

    def __post_init__(self):
        object.__setattr__(self, "seats", tuple(self.seats))
        if len(self.seats) != self.num_players:
            raise ValueError(f"{len(self.seats)} seats configured for {self.num_players} players")
        if self.games < 1:
            raise ValueError("games must be >= 1")
        if not 0.0 < self.baseline_p0 < 1.0:
            raise ValueError("baseline_p0 must be in (0, 1)")
        if self.on_backend_failure not in FAILURE_POLICIES:
            raise ValueError(f"on_backend_failure must be one of {FAILURE_POLICIES}")
        if self.log_turns not in TURN_LOGGING:
            raise ValueError(f"log_turns must be one of {TURN_LOGGING}")
        if self.parallelism < 1 or self.max_attempts < 1:
            raise ValueError("parallelism and max_attempts must be >= 1")
        for seat, spec in enumerate(self.seats):
            spec.check_seat(seat)
            if spec.assisted_seat is not None and not 0 <= spec.assisted_seat < self.num_players:
                raise ValueError(f"seat {seat} assists nonexistent seat {spec.assisted_seat}")
        for s in (self.test_seat, self.assisted_seat):
            if s is not None and not 0 <= s < self.num_players:
                raise ValueError(f"seat {s} out of range")
        if any(s.kind == "llm" for s in self.seats) and self.backend is None:
            raise ValueError("llm seats need a backend")

    @property
    def tested_seat(self) -> int:
        """Seat whose win rate is tested against ``baseline_p0``."""
        if self.test_seat is not None:
            return self.test_seat
        if self.assisted_seat is not None:
            return self.assisted_seat
        return next((i for i, s in enumerate(self.seats) if s.kind == "llm"), 0)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class GameRecord:
    game_id: int
    winner: Optional[int]
    turns: int
    capped: bool
    payoffs: tuple
    rows: list[dict] = field(default_factory=list)
    attempts: int = 1
    backend_failures: int = 0
    fallback_turns: int = 0
    missing_tokens: int = 0


@dataclass
class RunResult:
    report: stats.RunReport
    records: list[GameRecord]
    template_hash: str


def derive_seed(*parts) -> int:
    """64-bit seed from an ordered tuple of ints/strings."""
    text = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


def _make_agents(config: ExperimentConfig, seed: int):
    agents = []
    backend = make_backend(config.backend) if config.backend is not None else None
    for seat, spec in enumerate(config.seats):
        if spec.kind == "random":
            agents.append(RandomAgent(random.Random(derive_seed(seed, "seat", seat))))
        elif spec.kind == "rule":
            agents.append(RuleAgent())
        else:
            agents.append(LLMAgent(spec, seat, backend))
    return agents


def _play_once(config: ExperimentConfig, game_id: int, seed: int) -> GameRecord:
    state = new_game(config.num_players, seed, config.max_turns, config.rules)
    agents = _make_agents(config, seed)
    fallback_rng = random.Random(derive_seed(seed, "fallback"))
    rows: list[dict] = []
    failures = fallbacks = 0
    while not is_terminal(state):
        seat = state.current_seat
        obs = observe(state, seat)
        try:
            decision = agents[seat].act(obs)
        except BackendError:
            failures += 1
            if config.on_backend_failure == "abort_game":
                raise
            log.warning("game %d turn %d: backend failed, playing a random move", game_id, state.turn_count)
            decision = Decision(random_act(obs, fallback_rng), "random", fallback=True)
            fallbacks += 1
        if config.log_turns == "all" or (config.log_turns == "llm" and config.seats[seat].kind == "llm"):
            base = dict(game_id=game_id, turn=state.turn_count, seat=seat, method=decision.method,
                        fallback=int(decision.fallback))
            if decision.rows:
                rows.extend({**base, **row} for row in decision.rows)
            else:
                rows.append({**base, "action": action_code(decision.action), "chosen": 1})
        step(state, decision.action, inplace=True)
    result = payoffs(state)
    pay = tuple(config.payoff_shaping(result)) if config.payoff_shaping else result.payoffs
    missing = sum(getattr(a, "missing_tokens", 0) for a in agents)
    return GameRecord(game_id, result.winner, result.turns, result.terminated_by_cap, pay, rows,
                      backend_failures=failures, fallback_turns=fallbacks, missing_tokens=missing)


def play_game(config: ExperimentConfig, game_id: int) -> GameRecord:
    """Play one game; under ``abort_game`` a failed game is replayed on a fresh derived seed."""
    failures = 0
    for attempt in range(config.max_attempts):
        seed = derive_seed(config.master_seed, game_id, attempt)
        try:
            record = _play_once(config, game_id, seed)
        except BackendError as exc:
            failures += 1
            log.warning("game %d attempt %d aborted: %s", game_id, attempt, exc)
            continue
        record.attempts = attempt + 1
        record.backend_failures += failures
        return record
    raise BackendError(f"game {game_id} failed {config.max_attempts} times; giving up")


def play_games(config: ExperimentConfig) -> list[GameRecord]:
    ids = range(config.games)
    if config.parallelism == 1:
        records = [play_game(config, g) for g in ids]
    else:
        chunk = max(1, config.games // (config.parallelism * 4))
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            records = list(pool.map(partial(play_game, config), ids, chunksize=chunk))
    records.sort(key=lambda r: r.game_id)
    return records


def build_report(config: ExperimentConfig, records: list[GameRecord]) -> stats.RunReport:
    wins = [0] * config.num_players
    capped = 0
    for r in records:
        if r.capped:
            capped += 1
        else:
            wins[r.winner] += 1
    seat = config.tested_seat
    return stats.RunReport(
        name=config.name,
        num_players=config.num_players,
        games=len(records),
        wins=wins,
        capped=capped,
        test_seat=seat,
        p0=config.baseline_p0,
        ztest=stats.z_test(wins[seat], len(records), config.baseline_p0),
        fallback_turns=sum(r.fallback_turns for r in records),
        backend_failures=sum(r.backend_failures for r in records),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records(out_dir, config: ExperimentConfig, records: list[GameRecord], report: stats.RunReport) -> None:
    out = Path(out_dir)
    with open(out / stats.GAMES_FILE, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(stats.games_fields(config.num_players))
        for r in records:
            writer.writerow([r.game_id, _fmt(r.winner), r.turns, int(r.capped)] + [_fmt(p) for p in r.payoffs])
    if config.log_turns != "none":
        with open(out / stats.TURNS_FILE, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(stats.TURN_FIELDS)
            for r in records:
                for row in r.rows:
                    writer.writerow([_fmt(row.get(k)) for k in stats.TURN_FIELDS])
    meta = dict(
        name=config.name,
        num_players=config.num_players,
        games=config.games,
        master_seed=config.master_seed,
        baseline_p0=config.baseline_p0,
        test_seat=config.tested_seat,
        capped=report.capped,
        backend_failures=report.backend_failures,
        fallback_turns=report.fallback_turns,
        missing_tokens=sum(r.missing_tokens for r in records),
        template_hash=template_hash(),
        rules=dataclasses.asdict(config.rules),
    )
    (out / stats.META_FILE).write_text(json.dumps(meta, indent=2) + "\n")
    save_config(config, out / "config.ini")
    report.write_csv(out / stats.SUMMARY_FILE)


def run_experiment(config: ExperimentConfig) -> RunResult:
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")  # fail fast on an unwritable directory
        probe.unlink()
    records = play_games(config)
    report = build_report(config, records)
    if config.out_dir is not None:
        write_records(config.out_dir, config, records, report)
    return RunResult(report, records, template_hash())


# ---------------------------------------------------------------- presets

DEFAULT_MOCK = BackendSpec(kind="mock", script="position-biased", weights=(("A", 0.7),))
RANDOM, RULE = AgentSpec("random"), AgentSpec("rule")


def presets() -> list[ExperimentConfig]:
    return [
        ExperimentConfig("e1", 2, (RANDOM, RANDOM), games=10_000, baseline_p0=0.5, test_seat=0),
        ExperimentConfig("e2", 2, (RULE, RULE), games=10_000, baseline_p0=0.5, test_seat=0),
        ExperimentConfig("e3a", 3, (RANDOM,) * 3, games=10_000, baseline_p0=1 / 3, test_seat=0),
        ExperimentConfig("e3b", 3, (RULE,) * 3, games=10_000, baseline_p0=1 / 3, test_seat=0),
        ExperimentConfig("e4", 3, (RULE, RULE, RANDOM), games=100_000, baseline_p0=1 / 3, test_seat=1),
        ExperimentConfig("e5a", 2, (RANDOM, AgentSpec("llm", "cloze")), games=10_000,
                         baseline_p0=0.4896, test_seat=1, backend=DEFAULT_MOCK),
        ExperimentConfig("e5b", 3, (RULE, RULE, AgentSpec("llm", "cloze", "cooperative", 1)), games=10_000,
                         baseline_p0=0.35, assisted_seat=1, test_seat=1, backend=DEFAULT_MOCK),
    ]


def preset(name: str, method: Optional[str] = None, **changes) -> ExperimentConfig:
    """Look up a preset by name; ``method`` switches its LLM seats' prompting method."""
    for config in presets():
        if config.name == name.lower():
            if method is not None:
                seats = tuple(dataclasses.replace(s, method=method) if s.kind == "llm" else s
                              for s in config.seats)
                changes["seats"] = seats
                changes.setdefault("name", f"{config.name}-{method}")
            return config.replace(**changes)
    raise KeyError(f"no preset named {name!r}; known: {[c.name for c in presets()]}")


# ---------------------------------------------------------------- config files
#
# INI layout: [experiment], optional [rules] and [backend], one [seatN] per seat.
# fixed-table payloads are written "A:0.1 B:0.2 | A:0.3 B:0.4" (one entry per query).

def _parse_pairs(text: str) -> tuple[tuple[str, float], ...]:
    pairs = []
    for item in text.replace(",", " ").split():
        token, sep, value = item.rpartition(":")
        if not sep:
            raise ValueError(f"expected token:probability, got {item!r}")
        pairs.append((token, float(value)))
    return tuple(pairs)


def _format_pairs(pairs) -> str:
    return " ".join(f"{t}:{p!r}" for t, p in pairs)


def _opt_int(value: Optional[str]) -> Optional[int]:
    return None if value in (None, "") else int(value)


def _backend_from_section(sec) -> BackendSpec:
    kw = dict(kind=sec.get("kind", "mock"))
    for key in ("base_url", "model", "script", "keyword"):
        if key in sec:
            kw[key] = sec[key]
    if sec.get("auth_env"):
        kw["auth_env"] = sec["auth_env"]
    for key in ("top_k", "retries", "max_in_flight"):
        if key in sec:
            kw[key] = sec.getint(key)
    for key in ("timeout", "keyword_prob"):
        if key in sec:
            kw[key] = sec.getfloat(key)
    if sec.get("requests_per_second"):
        kw["requests_per_second"] = sec.getfloat("requests_per_second")
    if sec.get("weights"):
        kw["weights"] = _parse_pairs(sec["weights"])
    if sec.get("table"):
        kw["table"] = tuple(_parse_pairs(e) for e in sec["table"].split("|"))
    return BackendSpec(**kw)


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    exp = parser["experiment"]
    n = exp.getint("num_players")
    seats = []
    for s in range(n):
        name = f"seat{s}"
        if name not in parser:
            raise ValueError(f"missing [{name}] section in {path}")
        sec = parser[name]
        seats.append(AgentSpec(
            kind=sec.get("kind"),
            method=sec.get("method") or None,
            role=sec.get("role", "autonomous"),
            assisted_seat=_opt_int(sec.get("assisted_seat")),
        ))
    rules = DEFAULT_RULES
    if "rules" in parser:
        sec = parser["rules"]
        rules = Rules(**{f.name: sec.getboolean(f.name, getattr(DEFAULT_RULES, f.name))
                         for f in dataclasses.fields(Rules)})
    return ExperimentConfig(
        name=exp.get("name", Path(path).stem),
        num_players=n,
        seats=tuple(seats),
        games=exp.getint("games", 10_000),
        master_seed=exp.getint("master_seed", 0),
        max_turns=exp.getint("max_turns", DEFAULT_MAX_TURNS),
        baseline_p0=exp.getfloat("baseline_p0", 0.5),
        test_seat=_opt_int(exp.get("test_seat")),
        assisted_seat=_opt_int(exp.get("assisted_seat")),
        out_dir=exp.get("out_dir") or None,
        backend=_backend_from_section(parser["backend"]) if "backend" in parser else None,
        parallelism=exp.getint("parallelism", 1),
        on_backend_failure=exp.get("on_backend_failure", "abort_game"),
        max_attempts=exp.getint("max_attempts", 3),
        log_turns=exp.get("log_turns", "llm"),
        rules=rules,
    )


def save_config(config: ExperimentConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "name": config.name,
        "num_players": str(config.num_players),
        "games": str(config.games),
        "master_seed": str(config.master_seed),
        "max_turns": str(config.max_turns),
        "baseline_p0": repr(config.baseline_p0),
        "test_seat": _fmt(config.test_seat),
        "assisted_seat": _fmt(config.assisted_seat),
        "out_dir": config.out_dir or "",
        "parallelism": str(config.parallelism),
        "on_backend_failure": config.on_backend_failure,
        "max_attempts": str(config.max_attempts),
        "log_turns": config.log_turns,
    }
    parser["rules"] = {k: str(v).lower() for k, v in dataclasses.asdict(config.rules).items()}
    if config.backend is not None:
        b = config.backend
        sec = {k: _fmt(v) for k, v in dataclasses.asdict(b).items() if k not in ("weights", "table")}
        sec["weights"] = _format_pairs(b.weights)
        sec["table"] = " | ".join(_format_pairs(e) for e in b.table)
        parser["backend"] = sec
    for s, spec in enumerate(config.seats):
        sec = {"kind": spec.kind}
        if spec.kind == "llm":
            sec.update(method=spec.method, role=spec.role, assisted_seat=_fmt(spec.assisted_seat))
        parser[f"seat{s}"] = sec
    with open(path, "w") as fh:
        parser.write(fh)
