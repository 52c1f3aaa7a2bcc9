"""Epoch-batched hypothesis-testing learner with equilibrium retreat.

The agent plays a shared precomputed equilibrium while the "everyone is
playing the equilibrium" null hypothesis survives, then locks onto a pure
action and adapts it by best response  under a hysteresis margin while the
"everyone is stationary" hypothesis survives.  Rejecting both triggers a
complete restart.  All hypothesis inputs are public observations plus the
shared equilibrium, so several learners in the same game keep identical
flags at every epoch boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumProfile
from .games import StageGame, expected_utility, linf_distance, payoff_range, pure_action_values, pure_strategy

# Stream-purpose codes for the documented seed-splitting scheme.
STREAM_PLAY = 0
STREAM_RESET_PICK = 1


@dataclass(frozen=True)
class EpochOutcome:
    """Everything observable about one completed epoch of one learner.

    This is the unit of trace persistence: flag transitions, histograms
    and thresholds recorded here are sufficient to re-derive every
    decision the learner made (except the uniformly random action pick,
    whose legality but not value can be rechecked).
    """

    me: int
    t: int
    rounds: int
    counts: tuple[tuple[int, ...], ...]
    eps_e: float
    eps_s: float
    eps_s_next: float
    margin: float
    eq_hyp_before: bool
    eq_hyp_after: bool
    grace_before: bool
    grace_after: bool
    stat_hyp_after: bool
    phi_before: tuple[float, ...]
    phi_after: tuple[float, ...]
    switched: bool
    restart: bool
    restarts_total: int


class EquilibriumRetreatAgent:
    """One player's learning state machine.

    Mutable and single-threaded; distinct agents own independent random
    streams and may run in parallel trials.
    """

    def __init__(
        self,
        game: StageGame,
        me: int,
        schedule,
        eq_profile: EquilibriumProfile,
        seed: int | None = None,
        streams: tuple[np.random.Generator, np.random.Generator] | None = None,
    ):
        if streams is None:
            if seed is None:
                raise ValueError("provide either seed or streams")
            root = np.random.SeedSequence(seed)
            play_ss, pick_ss = root.spawn(2)
            streams = (
                np.random.Generator(np.random.PCG64(play_ss)),
                np.random.Generator(np.random.PCG64(pick_ss)),
            )
        self.game = game
        self.me = int(me)
        self.schedule = schedule
        self.eq_profile = eq_profile
        self._play_rng, self._pick_rng = streams
        self.n_players = game.num_players
        self.n_actions = game.action_counts[self.me]
        self.max_actions = max(game.action_counts)
        self.mu = payoff_range(game, self.me)
        self.restarts = 0
        self._reset()

    # -- state management -------------------------------------------------

    def _reset(self) -> None:
        """Fresh restart state: forget histories and flags, keep the
        precomputed equilibrium and the random streams."""
        self.t = 0
        self.round_in_epoch = 0
        self.eq_hyp = True  # equilibrium null hypothesis alive
        self.stat_hyp = True  # stationarity null hypothesis alive
        self.grace = False  # one-epoch stationarity grace after eq rejection
        self.phi = np.array(self.eq_profile.strategies[self.me])
        self.h_prev: list[np.ndarray] | None = None
        self.h_curr = [np.zeros(c, dtype=np.int64) for c in self.game.action_counts]
        self._buffer: np.ndarray | None = None

    def flags(self) -> tuple[int, bool, bool, bool, int]:
        return (self.t, self.eq_hyp, self.stat_hyp, self.grace, self.restarts)

    @property
    def epoch_rounds(self) -> int:
        return int(self.schedule.rounds(self.t))

    def rounds_left_in_epoch(self) -> int:
        return self.epoch_rounds - self.round_in_epoch

    def _ensure_buffer(self) -> None:
        # The whole epoch's action draws are taken in one vectorised call;
        # per-round act() and segment play consume the same stream state.
        if self._buffer is None:
            self._buffer = self._play_rng.choice(
                self.n_actions, size=self.epoch_rounds, p=self.phi
            )

    # -- play --------------------------------------------------------------

    def act(self) -> int:
        """Action for the current round, drawn from phi. Idempotent until
        the round is committed by observe()."""
        self._ensure_buffer()
        return int(self._buffer[self.round_in_epoch])

    def act_segment(self, length: int) -> np.ndarray:
        if length > self.rounds_left_in_epoch():
            raise ValueError("segment crosses an epoch boundary")
        self._ensure_buffer()
        start = self.round_in_epoch
        return self._buffer[start : start + length]

    def observe(self, joint) -> EpochOutcome | None:
        """Commit one round's joint action profile (own action included).

        Returns the epoch outcome when this round closes the epoch,
        performing the restart internally if the stationarity hypothesis
        was rejected.
        """
        joint = list(joint)
        if len(joint) != self.n_players:
            raise ValueError(
                f"joint profile has {len(joint)} actions for {self.n_players} players"
            )
        for p, a in enumerate(joint):
            self.h_curr[p][int(a)] += 1
        self.round_in_epoch += 1
        if self.round_in_epoch == self.epoch_rounds:
            return self._epoch_end()
        return None

    def observe_segment(self, joint_matrix: np.ndarray) -> EpochOutcome | None:
        """Commit a block of rounds (shape: rounds x players) at once."""
        joint_matrix = np.asarray(joint_matrix)
        n_rounds = joint_matrix.shape[0]
        if n_rounds > self.rounds_left_in_epoch():
            raise ValueError("segment crosses an epoch boundary")
        for p in range(self.n_players):
            self.h_curr[p] += np.bincount(
                joint_matrix[:, p], minlength=self.game.action_counts[p]
            )
        self.round_in_epoch += n_rounds
        if self.round_in_epoch == self.epoch_rounds:
            return self._epoch_end()
        return None

    # -- epoch-end processing ----------------------------------------------

    def _epoch_end(self) -> EpochOutcome:
        n_rounds = self.epoch_rounds
        eq_before, grace_before = self.eq_hyp, self.grace
        phi_before = self.phi
        eps_e_t = self.schedule.eps_e(self.t)
        eps_s_t = self.schedule.eps_s(self.t)
        eps_s_next = self.schedule.eps_s(self.t + 1)
        margin = self.n_players * self.max_actions * eps_s_next * self.mu
        freq_curr = [h / n_rounds for h in self.h_curr]
        switched = False

        if not self.eq_hyp:
            # Stationarity test over every player, self included, unless
            # this is the single grace epoch right after rejection.
            if not self.grace:
                assert self.h_prev is not None
                prev_total = int(self.h_prev[0].sum())
                for p in range(self.n_players):
                    prev_freq = self.h_prev[p] / prev_total
                    if linf_distance(freq_curr[p], prev_freq) > eps_s_t:
                        self.stat_hyp = False
            self.grace = False
            # Best-response adjustment with hysteresis: switch only for a
            # strictly more-than-margin improvement over the current action.
            others = [f for p, f in enumerate(freq_curr) if p != self.me]
            values = pure_action_values(self.game, self.me, others)
            best_action = int(np.argmax(values))
            current_value = expected_utility(self.game, self.me, self.phi, others)
            if float(values[best_action]) > current_value + margin:
                self.phi = pure_strategy(best_action, self.n_actions)
                switched = True

        if eq_before:
            # Equilibrium test over every player, self included.
            for p in range(self.n_players):
                if linf_distance(freq_curr[p], self.eq_profile.strategies[p]) > eps_e_t:
                    self.eq_hyp = False
                    self.phi = pure_strategy(
                        int(self._pick_rng.integers(self.n_actions)), self.n_actions
                    )
                    self.grace = True
                    break

        counts = tuple(tuple(int(c) for c in h) for h in self.h_curr)
        outcome_restart = not self.stat_hyp
        if outcome_restart:
            self.restarts += 1
        outcome = EpochOutcome(
            me=self.me,
            t=self.t,
            rounds=n_rounds,
            counts=counts,
            eps_e=eps_e_t,
            eps_s=eps_s_t,
            eps_s_next=eps_s_next,
            margin=margin,
            eq_hyp_before=eq_before,
            eq_hyp_after=self.eq_hyp,
            grace_before=grace_before,
            grace_after=self.grace,
            stat_hyp_after=self.stat_hyp,
            phi_before=tuple(float(x) for x in phi_before),
            phi_after=tuple(float(x) for x in self.phi),
            switched=switched,
            restart=outcome_restart,
            restarts_total=self.restarts,
        )
        if outcome_restart:
            self._reset()
        else:
            self.h_prev = self.h_curr
            self.h_curr = [
                np.zeros(c, dtype=np.int64) for c in self.game.action_counts
            ]
            self.t += 1
            self.round_in_epoch = 0
            self._buffer = None
        return outcome
