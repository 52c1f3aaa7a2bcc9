"""Human-writable file formats: the game text grammar and the YAML run
configuration.

Game file grammar (line-oriented, ``#`` comments)::

    players: 2
    actions 0: Heads Tails
    actions 1: Heads Tails
    payoffs:
    1 -1
    -1 1
    -1 1
    1 -1

After ``payoffs:`` there is one line per joint action profile, in
lexicographic profile order with player 0 varying slowest, holding one
payoff per player.  Parse failures raise ConfigError with the file and
line number.

The run configuration is a YAML mapping with explicit keys; see
load_run_config for the field list.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .equilibrium import EquilibriumProfile
from .games import StageGame
from .harness import RunConfig, game_from_dict
from .schedule import Schedule


class ConfigError(ValueError):
    """A located configuration diagnostic."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


# -- game text format ---------------------------------------------------------


def parse_game_text(text: str, source: str = "<string>") -> StageGame:
    lines = text.splitlines()
    players = None
    actions: dict[int, list[str]] = {}
    payoff_rows: list[list[float]] = []
    in_payoffs = False
    for lineno, raw in enumerate(lines, start=1):
        where = f"{source}:{lineno}"
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_payoffs:
            try:
                payoff_rows.append([float(tok) for tok in line.split()])
            except ValueError:
                raise ConfigError(f"non-numeric payoff entry in {line!r}", where)
            continue
        if ":" not in line:
            raise ConfigError(f"expected 'key: value', got {line!r}", where)
        key, _, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if key == "players":
            try:
                players = int(value)
            except ValueError:
                raise ConfigError(f"players must be an integer, got {value!r}", where)
            if players < 1:
                raise ConfigError("players must be at least 1", where)
        elif key.startswith("actions"):
            try:
                idx = int(key.split(None, 1)[1])
            except (IndexError, ValueError):
                raise ConfigError(
                    f"expected 'actions <player>:', got {key!r}", where
                )
            names = value.split()
            if not names:
                raise ConfigError(f"player {idx} has no actions", where)
            actions[idx] = names
        elif key == "payoffs":
            in_payoffs = True
        else:
            raise ConfigError(f"unknown key {key!r}", where)
    if players is None:
        raise ConfigError("missing 'players:' line", source)
    if sorted(actions) != list(range(players)):
        raise ConfigError(
            f"need 'actions i:' for each player 0..{players - 1}, got {sorted(actions)}",
            source,
        )
    if not in_payoffs:
        raise ConfigError("missing 'payoffs:' section", source)
    counts = [len(actions[i]) for i in range(players)]
    profiles = int(np.prod(counts))
    if len(payoff_rows) != profiles:
        raise ConfigError(
            f"expected {profiles} payoff lines (one per joint profile), got {len(payoff_rows)}",
            source,
        )
    for i, row in enumerate(payoff_rows):
        if len(row) != players:
            raise ConfigError(
                f"payoff line {i + 1} has {len(row)} entries, expected {players}",
                source,
            )
    flat = np.asarray(payoff_rows, dtype=np.float64)  # (profiles, players)
    payoffs = np.moveaxis(flat.reshape(counts + [players]), -1, 0)
    return StageGame(
        payoffs, action_names=tuple(tuple(actions[i]) for i in range(players))
    )


def load_game_file(path) -> StageGame:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read game file: {exc}", str(path))
    return parse_game_text(text, source=str(path))


def format_game_text(game: StageGame) -> str:
    names = game.action_names or tuple(
        tuple(f"a{j}" for j in range(c)) for c in game.action_counts
    )
    out = [f"players: {game.num_players}"]
    for i, per in enumerate(names):
        out.append(f"actions {i}: " + " ".join(per))
    out.append("payoffs:")
    for profile in np.ndindex(*game.action_counts):
        out.append(" ".join(repr(float(game.payoffs[(p, *profile)])) for p in range(game.num_players)))
    return "\n".join(out) + "\n"


# -- run configuration ---------------------------------------------------------


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing required key {key!r}", where)
    return mapping[key]


def _roster_entry(entry, idx: int, source: str) -> dict:
    where = f"{source}: roster[{idx}]"
    if not isinstance(entry, dict):
        raise ConfigError("roster entry must be a mapping", where)
    agent = _require(entry, "agent", where)
    if agent == "learner":
        return {"agent": "learner"}
    if agent == "opponent":
        policy = _require(entry, "policy", where)
        if not isinstance(policy, dict) or "kind" not in policy:
            raise ConfigError("opponent policy must be a mapping with 'kind'", where)
        kind = policy["kind"]
        if kind == "stationary":
            _require(policy, "probs", where)
        elif kind == "scripted":
            _require(policy, "actions", where)
        elif kind == "eventually_stationary":
            for k in ("pre", "switch_round", "probs"):
                _require(policy, k, where)
        elif kind == "fictitious_play":
            pass
        else:
            raise ConfigError(f"unknown policy kind {kind!r}", where)
        return {"agent": "opponent", "policy": policy}
    raise ConfigError(f"agent must be 'learner' or 'opponent', got {agent!r}", where)


def build_run_config(doc: dict, source: str = "<config>", base_dir=None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping", source)
    game_field = _require(doc, "game", source)
    if isinstance(game_field, str):
        path = Path(game_field)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        game = load_game_file(path)
    elif isinstance(game_field, dict):
        try:
            game = game_from_dict(game_field)
        except Exception as exc:
            raise ConfigError(f"invalid inline game: {exc}", f"{source}: game")
    else:
        raise ConfigError("game must be a file path or inline mapping", f"{source}: game")

    roster_field = _require(doc, "roster", source)
    if not isinstance(roster_field, list) or len(roster_field) != game.num_players:
        raise ConfigError(
            f"roster must list one agent per player ({game.num_players})",
            f"{source}: roster",
        )
    roster = tuple(_roster_entry(e, i, source) for i, e in enumerate(roster_field))

    sched_field = dict(doc.get("schedule") or {})
    sched_field.setdefault("actions_total", game.actions_total)
    try:
        schedule = Schedule(**sched_field)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid schedule: {exc}", f"{source}: schedule")

    override = None
    if doc.get("equilibrium_override") is not None:
        rows = doc["equilibrium_override"]
        where = f"{source}: equilibrium_override"
        if not isinstance(rows, list) or len(rows) != game.num_players:
            raise ConfigError("need one probability vector per player", where)
        try:
            strategies = tuple(np.asarray(r, dtype=np.float64) for r in rows)
            override = EquilibriumProfile(strategies, "mixed", "user-supplied")
        except Exception as exc:
            raise ConfigError(f"invalid override: {exc}", where)
        for p, s in enumerate(strategies):
            if len(s) != game.action_counts[p]:
                raise ConfigError(
                    f"override for player {p} has {len(s)} entries, "
                    f"expected {game.action_counts[p]}",
                    where,
                )

    def _int_field(key, default):
        val = doc.get(key, default)
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"{key} must be an integer", f"{source}: {key}")
        return val

    try:
        return RunConfig(
            game=game,
            roster=roster,
            schedule=schedule,
            eq_override=override,
            round_budget=_int_field("round_budget", 1_000_000),
            epoch_budget=_int_field("epoch_budget", 1_000_000),
            master_seed=_int_field("master_seed", 0),
            trial_count=_int_field("trial_count", 1),
            window=_int_field("window", 3),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), source)


def load_run_config(path) -> tuple[RunConfig, dict]:
    """Parse a YAML run configuration; returns (RunConfig, output options).

    Recognised output options (all optional): ``trace_dir``,
    ``summary_csv``, ``report_json``, ``make_dirs`` (bool; whether
    missing output directories are created rather than rejected).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", str(path))
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(f"YAML parse error: {exc}", where)
    config = build_run_config(doc, source=str(path), base_dir=path.parent)
    output = doc.get("output") or {}
    if not isinstance(output, dict):
        raise ConfigError("output must be a mapping", f"{path}: output")
    return config, output
