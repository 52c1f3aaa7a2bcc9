"""Deterministic Nash equilibrium precomputation.

All learning agents in a run must agree on one equilibrium, so every
solver here is fully deterministic: identical games yield bit-identical
output.  Two players get support enumeration; three or more get pure
profile enumeration with an explicit error (plus a user override path)
when no pure equilibrium exists.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .games import StageGame, as_strategy, is_pure, pure_strategy, regret

# A candidate profile is accepted only if every player's regret is below this.
REGRET_TOL = 1e-9
# Probabilities from the linear solve may dip this far below zero before
# being clipped and renormalised.
CLIP_TOL = -1e-12


class EquilibriumUnavailableError(RuntimeError):
    """No equilibrium can be computed deterministically; supply an override."""


@dataclass(frozen=True)
class EquilibriumProfile:
    """A verified Nash equilibrium: one strategy per player."""

    strategies: tuple[np.ndarray, ...]
    kind: str  # "pure" | "mixed"
    provenance: str  # "pure-enumeration" | "support-enumeration-2p" | "user-supplied"

    def __post_init__(self):
        frozen = []
        for vec in self.strategies:
            arr = np.asarray(vec, dtype=np.float64).copy()
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "strategies", tuple(frozen))


def _verify(game: StageGame, strategies) -> bool:
    return all(
        regret(game, strategies, p) <= REGRET_TOL for p in range(game.num_players)
    )


def enumerate_pure_nash(game: StageGame) -> list[tuple[int, ...]]:
    """All pure Nash profiles in lexicographic order (player 0 slowest).

    Non-strict: a profile survives if no unilateral deviation does
    strictly better.  Returns an empty list when no pure NE exists.
    """
    found = []
    for profile in np.ndindex(*game.action_counts):
        ok = True
        for player in range(game.num_players):
            idx = list(profile)
            current = game.payoffs[(player, *profile)]
            for dev in range(game.action_counts[player]):
                idx[player] = dev
                if game.payoffs[(player, *idx)] > current:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            found.append(tuple(int(a) for a in profile))
    return found


def _supports_lex(n_actions: int):
    """All nonempty supports of a player in lexicographic tuple order."""
    supports = []
    for size in range(1, n_actions + 1):
        supports.extend(itertools.combinations(range(n_actions), size))
    supports.sort()
    return supports


def _solve_support(game: StageGame, whose: int, support_own, support_opp):
    """Strategy for ``1 - whose`` making ``whose`` indifferent on its support.

    Builds the indifference-plus-normalisation linear system and solves it
    (least squares when non-square).  Returns None when the system is
    singular or the solution is not a probability vector.
    """
    opp = 1 - whose
    k_own, k_opp = len(support_own), len(support_opp)
    # Unknowns: probability on each opp support action, plus the common value.
    mat = np.zeros((k_own + 1, k_opp + 1))
    rhs = np.zeros(k_own + 1)
    for r, a in enumerate(support_own):
        for c, b in enumerate(support_opp):
            profile = (a, b) if whose == 0 else (b, a)
            mat[r, c] = game.payoffs[(whose, *profile)]
        mat[r, k_opp] = -1.0
    mat[k_own, :k_opp] = 1.0
    rhs[k_own] = 1.0
    try:
        if k_own == k_opp:
            sol = np.linalg.solve(mat, rhs)
        else:
            sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    except np.linalg.LinAlgError:
        return None
    probs = sol[:k_opp]
    if np.any(probs < CLIP_TOL):
        return None
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if total <= 0:
        return None
    probs = probs / total
    full = np.zeros(game.action_counts[opp])
    full[list(support_opp)] = probs
    return full


def _iter_support_equilibria(game: StageGame):
    if game.num_players != 2:
        raise ValueError("support enumeration requires exactly 2 players")
    c0, c1 = game.action_counts
    sup0_all = _supports_lex(c0)
    sup1_by_size: dict[int, list] = {}
    for s in _supports_lex(c1):
        sup1_by_size.setdefault(len(s), []).append(s)
    for total in range(2, c0 + c1 + 1):
        for s0 in sup0_all:
            k1 = total - len(s0)
            if k1 < 1 or k1 > c1:
                continue
            for s1 in sup1_by_size[k1]:
                pi1 = _solve_support(game, 0, s0, s1)
                if pi1 is None:
                    continue
                pi0 = _solve_support(game, 1, s1, s0)
                if pi0 is None:
                    continue
                strategies = (pi0, pi1)
                if not _verify(game, strategies):
                    continue
                kind = "pure" if all(is_pure(s) for s in strategies) else "mixed"
                yield EquilibriumProfile(strategies, kind, "support-enumeration-2p")


def support_enumeration_2p(game: StageGame) -> list[EquilibriumProfile]:
    """All support-enumeration equilibria of a 2-player game.

    Support pairs are visited by (total support size, lexicographic
    support sets); degenerate indifference systems are skipped.  Every
    returned profile passes the regret check.
    """
    return list(_iter_support_equilibria(game))


def profile_from_pure(game: StageGame, profile, provenance: str = "pure-enumeration") -> EquilibriumProfile:
    strategies = tuple(
        pure_strategy(a, c) for a, c in zip(profile, game.action_counts)
    )
    return EquilibriumProfile(strategies, "pure", provenance)


def compute_equilibrium(
    game: StageGame, override: EquilibriumProfile | None = None
) -> EquilibriumProfile:
    """The shared equilibrium every learner in a run precomputes.

    Deterministic selection rule: first support-enumeration result for
    2-player games, first lexicographic pure NE otherwise.  An override
    (verified against the regret tolerance) takes precedence.
    """
    if override is not None:
        strategies = tuple(
            as_strategy(s, c) for s, c in zip(override.strategies, game.action_counts)
        )
        if len(strategies) != game.num_players:
            raise ValueError("override needs one strategy per player")
        if not _verify(game, strategies):
            raise ValueError(
                f"override profile fails the regret <= {REGRET_TOL} check"
            )
        return EquilibriumProfile(strategies, override.kind, "user-supplied")
    if game.num_players == 2:
        for profile in _iter_support_equilibria(game):
            return profile
        raise EquilibriumUnavailableError(
            "support enumeration found no equilibrium; supply an override"
        )
    pure = enumerate_pure_nash(game)
    if not pure:
        raise EquilibriumUnavailableError(
            f"no pure equilibrium in a {game.num_players}-player game; "
            "supply an override (general n-player mixed solving is out of scope)"
        )
    return profile_from_pure(game, pure[0])
