"""One-sided one-proportion z-tests and run reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

GAMES_FILE = "games.csv"
TURNS_FILE = "turns.csv"
SUMMARY_FILE = "summary.csv"
META_FILE = "run.json"

TURN_FIELDS = ("game_id", "turn", "seat", "method", "shift", "letter", "token_prob",
               "action", "cumulative", "chosen", "fallback")
SUMMARY_FIELDS = ("seat", "wins", "games", "win_rate", "p0", "z", "p_value")


def games_fields(num_players: int) -> tuple[str, ...]:
    return ("game_id", "winner", "turns", "capped") + tuple(f"seat{s}_payoff" for s in range(num_players))


class RecordsError(RuntimeError):
    """Run directory is missing records or they do not parse."""


_SQRT2 = math.sqrt(2.0)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_sf(z: float) -> float:
    """Upper tail ``1 - Phi(z)``, computed directly so it keeps precision for large z."""
    return 0.5 * math.erfc(z / _SQRT2)


@dataclass(frozen=True)
class ZTestResult:
    p_hat: float
    p0: float
    n: int
    z: float
    p_value: float
    significant_05: bool
    significant_01: bool


def z_test(wins: int, n: int, p0: float) -> ZTestResult:
    """Test H1: p > p0 for ``wins`` successes out of ``n``. No continuity correction."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= wins <= n:
        raise ValueError(f"wins must be in [0, {n}], got {wins}")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must be in (0, 1), got {p0}")
    p_hat = wins / n
    z = (p_hat - p0) / math.sqrt(p0 * (1.0 - p0) / n)
    p = normal_sf(z)
    return ZTestResult(p_hat, p0, n, z, p, p < 0.05, p < 0.01)


@dataclass
class RunReport:
    name: str
    num_players: int
    games: int
    wins: list[int]
    capped: int
    test_seat: Optional[int]
    p0: Optional[float]
    ztest: Optional[ZTestResult]
    fallback_turns: int
    backend_failures: int

    def win_rate(self, seat: int) -> float:
        return self.wins[seat] / self.games

    @property
    def capped_rate(self) -> float:
        return self.capped / self.games

    def summary_rows(self) -> list[dict]:
        rows = []
        for s in range(self.num_players):
            row = dict(seat=s, wins=self.wins[s], games=self.games,
                       win_rate=f"{self.win_rate(s):.6f}", p0="", z="", p_value="")
            if s == self.test_seat and self.ztest is not None:
                row.update(p0=repr(self.ztest.p0), z=f"{self.ztest.z:.6f}", p_value=f"{self.ztest.p_value:.6g}")
            rows.append(row)
        return rows

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.summary_rows())

    def to_text(self) -> str:
        lines = [f"run: {self.name}  games: {self.games}  players: {self.num_players}",
                 f"{'seat':>4}  {'wins':>7}  {'win rate':>9}"]
        for s in range(self.num_players):
            mark = "  <- tested" if s == self.test_seat else ""
            lines.append(f"{s:>4}  {self.wins[s]:>7}  {100 * self.win_rate(s):>8.2f}%{mark}")
        lines.append(f"capped games: {self.capped} ({100 * self.capped_rate:.2f}%)")
        lines.append(f"fallback turns: {self.fallback_turns}  backend failures: {self.backend_failures}")
        if self.ztest is not None:
            t = self.ztest
            flag = "p<0.01" if t.significant_01 else "p<0.05" if t.significant_05 else "n.s."
            lines.append(f"z-test seat {self.test_seat}: p_hat={t.p_hat:.4f} p0={t.p0:.4f} n={t.n} "
                         f"z={t.z:.3f} p={t.p_value:.3g} ({flag})")
        return "\n".join(lines)


def _read_meta(run_dir: Path) -> dict:
    path = run_dir / META_FILE
    if not path.exists():
        raise RecordsError(f"missing {META_FILE} in {run_dir}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RecordsError(f"corrupt {path}: {exc}") from exc


def summarize_run(run_dir) -> RunReport:
    """Recompute a run's report from its raw CSV records."""
    run_dir = Path(run_dir)
    games_path = run_dir / GAMES_FILE
    if not run_dir.is_dir() or not games_path.exists():
        raise RecordsError(f"no game records in {run_dir}")
    meta = _read_meta(run_dir)
    n_players = int(meta["num_players"])
    wins = [0] * n_players
    capped = games = 0
    seen = set()
    try:
        with open(games_path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != games_fields(n_players):
                raise RecordsError(f"unexpected header in {games_path}: {reader.fieldnames}")
            for row in reader:
                gid = int(row["game_id"])
                if gid in seen:
                    raise RecordsError(f"duplicate game_id {gid}")
                seen.add(gid)
                games += 1
                if row["capped"] == "1":
                    capped += 1
                else:
                    wins[int(row["winner"])] += 1
    except (ValueError, KeyError, IndexError) as exc:
        raise RecordsError(f"corrupt record in {games_path}: {exc}") from exc
    if games == 0:
        raise RecordsError(f"{games_path} holds no games")

    fallback_turns = 0
    turns_path = run_dir / TURNS_FILE
    if turns_path.exists():
        flagged = set()
        with open(turns_path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["fallback"] == "1":
                    flagged.add((row["game_id"], row["turn"]))
        fallback_turns = len(flagged)

    test_seat = meta.get("test_seat")
    p0 = meta.get("baseline_p0")
    ztest = z_test(wins[test_seat], games, p0) if test_seat is not None and p0 is not None else None
    return RunReport(
        name=meta.get("name", run_dir.name),
        num_players=n_players,
        games=games,
        wins=wins,
        capped=capped,
        test_seat=test_seat,
        p0=p0,
        ztest=ztest,
        fallback_turns=fallback_turns,
        backend_failures=int(meta.get("backend_failures", 0)),
    )
