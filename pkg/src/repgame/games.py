"""Finite normal-form stage games and the arithmetic built on them.

A game is a dense payoff tensor ``u[i, a_0, ..., a_{n-1}]`` giving player
``i``'s utility for every joint action profile.  Strategies are plain 1-D
numpy probability vectors.  All operations here are pure functions that
enumerate profiles exactly; nothing is sampled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Probability vectors must sum to 1 within this tolerance.
PROB_SUM_TOL = 1e-12


def as_strategy(probs, n_actions: int | None = None) -> np.ndarray:
    """Validate and return a mixed strategy as a float64 vector.

    Raises ValueError for negative entries, a sum away from 1 by more
    than ``PROB_SUM_TOL``, or (when given) a wrong length.
    """
    vec = np.asarray(probs, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"strategy must be a 1-D vector, got shape {vec.shape}")
    if n_actions is not None and vec.shape[0] != n_actions:
        raise ValueError(
            f"strategy has {vec.shape[0]} entries, player has {n_actions} actions"
        )
    if np.any(vec < 0):
        raise ValueError("strategy entries must be nonnegative")
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"strategy entries sum to {total!r}, expected 1")
    return vec


def pure_strategy(action: int, n_actions: int) -> np.ndarray:
    """Degenerate strategy putting all mass on ``action``."""
    if not 0 <= action < n_actions:
        raise ValueError(f"action {action} out of range [0, {n_actions})")
    vec = np.zeros(n_actions, dtype=np.float64)
    vec[action] = 1.0
    return vec


def is_pure(strategy: np.ndarray) -> bool:
    return int(np.count_nonzero(strategy)) == 1


def linf_distance(p, q) -> float:
    """Max-over-actions absolute difference between two frequency vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return float(np.max(np.abs(p - q)))


@dataclass(frozen=True)
class StageGame:
    """One-shot n-player game with finite action sets.

    ``payoffs`` has shape ``(n, |A_0|, ..., |A_{n-1}|)``; entry
    ``payoffs[i][a]`` is player i's utility at joint profile ``a``.
    Profiles are indexed lexicographically with player 0 slowest.
    Instances are immutable and safe to share across workers.
    """

    payoffs: np.ndarray
    action_names: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.payoffs, dtype=np.float64)
        if arr.ndim < 2:
            raise ValueError("payoff tensor needs at least (player, action) axes")
        n = arr.shape[0]
        if arr.ndim != n + 1:
            raise ValueError(
                f"payoff tensor for {n} players must have {n + 1} axes, got {arr.ndim}"
            )
        if any(c < 1 for c in arr.shape[1:]):
            raise ValueError("every player needs at least one action")
        if not np.all(np.isfinite(arr)):
            raise ValueError("payoffs must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "payoffs", arr)
        if self.action_names is not None:
            names = tuple(tuple(per) for per in self.action_names)
            if tuple(len(per) for per in names) != self.action_counts:
                raise ValueError("action_names do not match action counts")
            object.__setattr__(self, "action_names", names)

    @property
    def num_players(self) -> int:
        return self.payoffs.shape[0]

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.payoffs.shape[1:])

    @property
    def actions_total(self) -> int:
        """Total number of actions summed over all players."""
        return sum(self.action_counts)

    def action_name(self, player: int, action: int) -> str:
        if self.action_names is not None:
            return self.action_names[player][action]
        return str(action)

    def payoff(self, player: int, profile) -> float:
        return float(self.payoffs[player][tuple(int(a) for a in profile)])

    def _check_player(self, player: int) -> None:
        if not 0 <= player < self.num_players:
            raise ValueError(f"player {player} out of range")


def _full_profile(game: StageGame, player: int, own, others) -> list[np.ndarray]:
    """Assemble the per-player strategy list, validating shapes."""
    others = list(others)
    if len(others) != game.num_players - 1:
        raise ValueError(
            f"expected {game.num_players - 1} opponent strategies, got {len(others)}"
        )
    strategies = []
    j = 0
    for p, count in enumerate(game.action_counts):
        if p == player:
            strategies.append(as_strategy(own, count))
        else:
            strategies.append(as_strategy(others[j], count))
            j += 1
    return strategies


def expected_utility(game: StageGame, player: int, own, others) -> float:
    """Exact expected utility of ``own`` against independent opponent mixes.

    Sums payoff times product probability over every joint profile via
    tensor contraction, so the result is exact up to float round-off.
    """
    game._check_player(player)
    strategies = _full_profile(game, player, own, others)
    arr = game.payoffs[player]
    for strat in strategies:
        arr = np.tensordot(strat, arr, axes=(0, 0))
    return float(arr)


def pure_action_values(game: StageGame, player: int, others) -> np.ndarray:
    """Expected utility of each of ``player``'s pure actions vs. ``others``."""
    game._check_player(player)
    others = list(others)
    if len(others) != game.num_players - 1:
        raise ValueError(
            f"expected {game.num_players - 1} opponent strategies, got {len(others)}"
        )
    opp_counts = [c for p, c in enumerate(game.action_counts) if p != player]
    validated = [as_strategy(s, c) for s, c in zip(others, opp_counts)]
    arr = np.moveaxis(game.payoffs[player], player, 0)
    for strat in validated:
        arr = np.tensordot(arr, strat, axes=(1, 0))
    return arr


def best_response(game: StageGame, player: int, others) -> tuple[int, float]:
    """Best pure action and its value; ties broken toward the lowest index."""
    values = pure_action_values(game, player, others)
    action = int(np.argmax(values))  # argmax returns the first maximiser
    return action, float(values[action])


def payoff_range(game: StageGame, player: int) -> float:
    """Best minus worst outcome for ``player`` over all joint profiles."""
    game._check_player(player)
    arr = game.payoffs[player]
    return float(arr.max() - arr.min())


def regret(game: StageGame, profile, player: int) -> float:
    """Gain available to ``player`` from a unilateral best-response deviation.

    Zero (up to round-off) at a Nash equilibrium; mathematically never
    negative.
    """
    profile = list(profile)
    if len(profile) != game.num_players:
        raise ValueError("profile needs one strategy per player")
    others = [s for p, s in enumerate(profile) if p != player]
    _, br_value = best_response(game, player, others)
    own_value = expected_utility(game, player, profile[player], others)
    return br_value - own_value
