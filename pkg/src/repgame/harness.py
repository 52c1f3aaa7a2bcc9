"""Round-synchronous trial driver, trace records, convergence detection,
trace replay validation and batch statistics.

Randomness is keyed by ``SeedSequence([master_seed, trial, player,
purpose])`` so per-agent streams are independent and results do not
depend on execution order or parallelism.  A trace is a header record
plus one epoch record per learner per completed epoch; partial epochs at
budget exhaustion are marked and excluded from statistics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumProfile, compute_equilibrium
from .games import StageGame, expected_utility, linf_distance, payoff_range, pure_action_values
from .learner import STREAM_PLAY, STREAM_RESET_PICK, EpochOutcome, EquilibriumRetreatAgent
from .opponents import (
    EventuallyStationaryPolicy,
    FictitiousPlayPolicy,
    OpponentPolicy,
    ScriptedPolicy,
    StationaryPolicy,
)
from .schedule import Schedule

TRACE_SCHEMA = 1
# Segment size used when no learner defines epoch boundaries.
_FALLBACK_CHUNK = 4096


def agent_stream(master_seed: int, trial: int, player: int, purpose: int) -> np.random.Generator:
    """The documented seed-splitting scheme; see module docstring."""
    ss = np.random.SeedSequence([int(master_seed), int(trial), int(player), int(purpose)])
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a trial or batch."""

    game: StageGame
    roster: tuple[dict, ...]  # per-player agent descriptors
    schedule: Schedule
    eq_override: EquilibriumProfile | None = None
    round_budget: int = 1_000_000
    epoch_budget: int = 1_000_000
    master_seed: int = 0
    trial_count: int = 1
    window: int = 3

    def __post_init__(self):
        if len(self.roster) != self.game.num_players:
            raise ValueError("roster length must equal the number of players")
        if self.round_budget < 1 or self.epoch_budget < 1:
            raise ValueError("budgets must be at least 1")
        if self.trial_count < 1:
            raise ValueError("trial_count must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        object.__setattr__(self, "roster", tuple(dict(r) for r in self.roster))


@dataclass
class RunTrace:
    header: dict
    events: list  # epoch records, one dict per learner per epoch
    rounds_used: int
    epochs: int
    truncated: bool
    partial_rounds: int


@dataclass(frozen=True)
class RunSummary:
    trial: int
    converged: bool | None  # None: insufficient data for the window
    kind: str
    final_phi: dict
    restarts: int
    rounds_used: int
    epochs: int
    epochs_to_convergence: int | None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    epochs_checked: int
    divergence: dict | None  # first divergence: {epoch, player, field, message}


# -- configuration (de)serialisation ---------------------------------------


def game_to_dict(game: StageGame) -> dict:
    return {
        "num_players": game.num_players,
        "action_names": [list(per) for per in game.action_names]
        if game.action_names
        else None,
        "payoffs": game.payoffs.tolist(),
    }


def game_from_dict(d: dict) -> StageGame:
    names = d.get("action_names")
    return StageGame(
        np.asarray(d["payoffs"], dtype=np.float64),
        action_names=tuple(tuple(per) for per in names) if names else None,
    )


def schedule_to_dict(s: Schedule) -> dict:
    return {
        "epsilon_base": s.epsilon_base,
        "actions_total": s.actions_total,
        "decay": s.decay,
        "offset": s.offset,
        "rate": s.rate,
        "epoch0_rounds": s.epoch0_rounds,
        "cap": s.cap,
    }


def schedule_from_dict(d: dict) -> Schedule:
    return Schedule(**d)


def equilibrium_to_dict(eq: EquilibriumProfile) -> dict:
    return {
        "strategies": [list(map(float, s)) for s in eq.strategies],
        "kind": eq.kind,
        "provenance": eq.provenance,
    }


def equilibrium_from_dict(d: dict) -> EquilibriumProfile:
    return EquilibriumProfile(
        tuple(np.asarray(s, dtype=np.float64) for s in d["strategies"]),
        d["kind"],
        d["provenance"],
    )


def config_to_dict(config: RunConfig) -> dict:
    return {
        "game": game_to_dict(config.game),
        "roster": [dict(r) for r in config.roster],
        "schedule": schedule_to_dict(config.schedule),
        "eq_override": equilibrium_to_dict(config.eq_override)
        if config.eq_override
        else None,
        "round_budget": config.round_budget,
        "epoch_budget": config.epoch_budget,
        "master_seed": config.master_seed,
        "trial_count": config.trial_count,
        "window": config.window,
    }


def config_from_dict(d: dict) -> RunConfig:
    return RunConfig(
        game=game_from_dict(d["game"]),
        roster=tuple(d["roster"]),
        schedule=schedule_from_dict(d["schedule"]),
        eq_override=equilibrium_from_dict(d["eq_override"])
        if d.get("eq_override")
        else None,
        round_budget=d["round_budget"],
        epoch_budget=d["epoch_budget"],
        master_seed=d["master_seed"],
        trial_count=d["trial_count"],
        window=d["window"],
    )


# -- agent construction -----------------------------------------------------


def _build_policy(desc: dict, game: StageGame, player: int, ss: np.random.SeedSequence) -> OpponentPolicy:
    kind = desc.get("kind")
    if kind == "stationary":
        return StationaryPolicy(desc["probs"], np.random.Generator(np.random.PCG64(ss)))
    if kind == "scripted":
        return ScriptedPolicy(desc["actions"])
    if kind == "eventually_stationary":
        post_ss, pre_ss = ss.spawn(2)
        pre = _build_policy(desc["pre"], game, player, pre_ss)
        return EventuallyStationaryPolicy(
            pre,
            desc["switch_round"],
            desc["probs"],
            np.random.Generator(np.random.PCG64(post_ss)),
        )
    if kind == "fictitious_play":
        return FictitiousPlayPolicy(game, player, desc.get("initial_counts"))
    raise ValueError(f"unknown opponent policy kind {kind!r}")


def _build_agents(config: RunConfig, trial: int, eq: EquilibriumProfile):
    learners: dict[int, EquilibriumRetreatAgent] = {}
    policies: dict[int, OpponentPolicy] = {}
    for player, entry in enumerate(config.roster):
        if entry["agent"] == "learner":
            streams = (
                agent_stream(config.master_seed, trial, player, STREAM_PLAY),
                agent_stream(config.master_seed, trial, player, STREAM_RESET_PICK),
            )
            learners[player] = EquilibriumRetreatAgent(
                config.game, player, config.schedule, eq, streams=streams
            )
        elif entry["agent"] == "opponent":
            ss = np.random.SeedSequence(
                [int(config.master_seed), int(trial), int(player), STREAM_PLAY]
            )
            policies[player] = _build_policy(entry["policy"], config.game, player, ss)
        else:
            raise ValueError(f"unknown roster entry {entry!r}")
    return learners, policies


def _outcome_record(outcome: EpochOutcome, seq: int) -> dict:
    return {
        "type": "epoch",
        "seq": seq,
        "player": outcome.me,
        "t": outcome.t,
        "rounds": outcome.rounds,
        "counts": [list(c) for c in outcome.counts],
        "eps_e": outcome.eps_e,
        "eps_s": outcome.eps_s,
        "eps_s_next": outcome.eps_s_next,
        "margin": outcome.margin,
        "eq_hyp_before": outcome.eq_hyp_before,
        "eq_hyp_after": outcome.eq_hyp_after,
        "grace_before": outcome.grace_before,
        "grace_after": outcome.grace_after,
        "stat_hyp_after": outcome.stat_hyp_after,
        "phi_before": list(outcome.phi_before),
        "phi_after": list(outcome.phi_after),
        "switched": outcome.switched,
        "restart": outcome.restart,
        "restarts_total": outcome.restarts_total,
    }


# -- trial driver ------------------------------------------------------------


def run_trial(config: RunConfig, trial: int) -> RunTrace:
    """Play one seeded trial to its budget and return the full trace.

    Rounds are strictly simultaneous: all actions for a round are drawn
    before any agent observes the joint profile.  Deterministic in
    (config, trial).
    """
    eq = compute_equilibrium(config.game, config.eq_override)
    learners, policies = _build_agents(config, trial, eq)
    n = config.game.num_players
    learner_list = [learners[p] for p in sorted(learners)]
    vector_ok = all(not pol.history_dependent for pol in policies.values())

    header = {
        "type": "header",
        "schema": TRACE_SCHEMA,
        "trial": trial,
        "config": config_to_dict(config),
        "equilibrium": equilibrium_to_dict(eq),
    }
    events: list[dict] = []
    seq = 0
    rounds_used = 0
    epochs = 0
    truncated = False
    partial = 0

    while rounds_used < config.round_budget and epochs < config.epoch_budget:
        remaining = (
            learner_list[0].rounds_left_in_epoch() if learner_list else _FALLBACK_CHUNK
        )
        seg = min(remaining, config.round_budget - rounds_used)
        if vector_ok:
            cols = []
            for p in range(n):
                agent = learners.get(p)
                if agent is not None:
                    cols.append(np.asarray(agent.act_segment(seg), dtype=np.int64))
                else:
                    cols.append(np.asarray(policies[p].act_segment(seg), dtype=np.int64))
            joint = np.column_stack(cols)
            outcomes = [lr.observe_segment(joint) for lr in learner_list]
            for pol in policies.values():
                pol.observe_segment(joint)
        else:
            outcomes = [None] * len(learner_list)
            for _ in range(seg):
                acts = [
                    learners[p].act() if p in learners else policies[p].act()
                    for p in range(n)
                ]
                for i, lr in enumerate(learner_list):
                    out = lr.observe(acts)
                    if out is not None:
                        outcomes[i] = out
                for pol in policies.values():
                    pol.observe(acts)
        rounds_used += seg
        if learner_list:
            if seg < remaining:
                truncated = True
                partial = seg
                break
            for out in outcomes:
                assert out is not None
                events.append(_outcome_record(out, seq))
            seq += 1
            epochs += 1

    return RunTrace(
        header=header,
        events=events,
        rounds_used=rounds_used,
        epochs=epochs,
        truncated=truncated,
        partial_rounds=partial,
    )


# -- convergence detection ----------------------------------------------------


def _epoch_groups(trace: RunTrace) -> list[list[dict]]:
    groups: dict[int, list[dict]] = {}
    for rec in trace.events:
        groups.setdefault(rec["seq"], []).append(rec)
    return [groups[k] for k in sorted(groups)]


def _stable_suffix_start(groups: list[list[dict]]) -> int | None:
    """Earliest epoch index from which no restart occurs and every
    learner's strategy is frozen through the end; None if the last epoch
    itself is unstable."""
    start = None
    ref_phi = {rec["player"]: rec["phi_after"] for rec in groups[-1]}
    for i in range(len(groups) - 1, -1, -1):
        stable = not any(rec["restart"] for rec in groups[i]) and all(
            rec["phi_before"] == ref_phi[rec["player"]]
            and rec["phi_after"] == ref_phi[rec["player"]]
            for rec in groups[i]
        )
        if not stable:
            break
        start = i
    return start


def detect_convergence(trace: RunTrace, window: int | None = None) -> RunSummary:
    """Window rule: converged iff the last ``window`` complete epochs saw
    no restart and no strategy change by any learner.

    The theoretical guarantees this toolkit probes are asymptotic; a
    finite-window detector is an operationalisation and can in
    principle mislabel.
    """
    if window is None:
        window = trace.header["config"]["window"]
    groups = _epoch_groups(trace)
    trial = trace.header["trial"]
    restarts = max((rec["restarts_total"] for g in groups for rec in g), default=0)
    final_phi = (
        {rec["player"]: tuple(rec["phi_after"]) for rec in groups[-1]} if groups else {}
    )
    if len(groups) < window:
        return RunSummary(
            trial=trial,
            converged=None,
            kind="insufficient-data",
            final_phi=final_phi,
            restarts=restarts,
            rounds_used=trace.rounds_used,
            epochs=trace.epochs,
            epochs_to_convergence=None,
        )
    start = _stable_suffix_start(groups)
    stable = start is not None and len(groups) - start >= window
    kind = "none"
    if stable:
        last = groups[-1]
        window_groups = groups[-window:]
        if all(rec["eq_hyp_after"] for rec in last):
            kind = "equilibrium-hypothesis-held"
        else:
            n = len(window_groups[0][0]["counts"])
            pure_lock = True
            for p in range(n):
                plays = []
                for g in window_groups:
                    counts = g[0]["counts"][p]
                    nonzero = [i for i, c in enumerate(counts) if c]
                    if len(nonzero) != 1:
                        pure_lock = False
                        break
                    plays.append(nonzero[0])
                if not pure_lock or len(set(plays)) != 1:
                    pure_lock = False
                    break
            if pure_lock:
                kind = "pure-profile-lock"
            elif len(last) == 1 and sorted(last[0]["phi_after"]) == sorted(
                [0.0] * (len(last[0]["phi_after"]) - 1) + [1.0]
            ):
                kind = "best-response-lock"
    converged = stable and kind != "none"
    return RunSummary(
        trial=trial,
        converged=converged,
        kind=kind,
        final_phi=final_phi,
        restarts=restarts,
        rounds_used=trace.rounds_used,
        epochs=trace.epochs,
        epochs_to_convergence=start if converged else None,
    )


# -- trace replay validation ---------------------------------------------------


class _Divergence(Exception):
    def __init__(self, epoch, player, fieldname, message):
        super().__init__(message)
        self.info = {
            "epoch": epoch,
            "player": player,
            "field": fieldname,
            "message": message,
        }


def _check(cond, epoch, player, fieldname, message):
    if not cond:
        raise _Divergence(epoch, player, fieldname, message)


def _is_pure_vector(phi) -> bool:
    return sorted(phi) == [0.0] * (len(phi) - 1) + [1.0]


def validate_trace(trace: RunTrace) -> ValidationReport:
    """Re-derive every flag transition, threshold comparison and strategy
    switch from the recorded histograms; report the first divergence.

    Traces produced by run_trial must validate cleanly; any tampering
    with a record shows up as a divergence at that epoch.
    """
    cfg = trace.header["config"]
    game = game_from_dict(cfg["game"])
    sched = schedule_from_dict(cfg["schedule"])
    eq = equilibrium_from_dict(trace.header["equilibrium"])
    groups = _epoch_groups(trace)
    n = game.num_players

    state: dict[int, dict] = {}
    for rec0 in groups[0] if groups else []:
        p = rec0["player"]
        state[p] = {
            "t": 0,
            "eq_hyp": True,
            "grace": False,
            "restarts": 0,
            "phi": [float(x) for x in eq.strategies[p]],
            "h_prev": None,
            "mu": payoff_range(game, p),
        }

    try:
        for seq, group in enumerate(groups):
            ref = group[0]
            for rec in group[1:]:
                _check(
                    rec["counts"] == ref["counts"],
                    seq,
                    rec["player"],
                    "counts",
                    "histograms differ across learners in one epoch",
                )
                for f in ("t", "eq_hyp_after", "stat_hyp_after", "grace_after", "restarts_total"):
                    _check(
                        rec[f] == ref[f],
                        seq,
                        rec["player"],
                        f,
                        "flag tuples differ across learners in one epoch",
                    )
            for rec in group:
                p = rec["player"]
                st = state[p]
                _check(rec["t"] == st["t"], seq, p, "t", f"expected t={st['t']}")
                rounds = int(sched.rounds(st["t"]))
                _check(
                    rec["rounds"] == rounds, seq, p, "rounds", f"expected N^t={rounds}"
                )
                for q in range(n):
                    _check(
                        sum(rec["counts"][q]) == rounds
                        and len(rec["counts"][q]) == game.action_counts[q],
                        seq,
                        p,
                        "counts",
                        f"histogram for player {q} does not total N^t",
                    )
                eps_e = sched.eps_e(st["t"])
                eps_s = sched.eps_s(st["t"])
                eps_s_next = sched.eps_s(st["t"] + 1)
                margin = n * max(game.action_counts) * eps_s_next * st["mu"]
                for fname, val in (
                    ("eps_e", eps_e),
                    ("eps_s", eps_s),
                    ("eps_s_next", eps_s_next),
                    ("margin", margin),
                ):
                    _check(
                        rec[fname] == val, seq, p, fname, f"threshold mismatch: {val}"
                    )
                _check(
                    rec["eq_hyp_before"] == st["eq_hyp"],
                    seq,
                    p,
                    "eq_hyp_before",
                    "equilibrium-hypothesis entry flag mismatch",
                )
                _check(
                    rec["grace_before"] == st["grace"],
                    seq,
                    p,
                    "grace_before",
                    "grace entry flag mismatch",
                )
                _check(
                    rec["phi_before"] == st["phi"],
                    seq,
                    p,
                    "phi_before",
                    "strategy at epoch start mismatch",
                )
                freq = [np.asarray(c, dtype=np.float64) / rounds for c in rec["counts"]]

                stat_exp = True
                grace_after = st["grace"]
                phi_after = list(st["phi"])
                switched = False
                if not st["eq_hyp"]:
                    if not st["grace"]:
                        _check(
                            st["h_prev"] is not None,
                            seq,
                            p,
                            "stat_hyp_after",
                            "stationarity test without a previous epoch",
                        )
                        prev_total = sum(st["h_prev"][0])
                        for q in range(n):
                            prev = np.asarray(st["h_prev"][q], dtype=np.float64) / prev_total
                            if linf_distance(freq[q], prev) > eps_s:
                                stat_exp = False
                    grace_after = False
                    others = [f for q, f in enumerate(freq) if q != p]
                    values = pure_action_values(game, p, others)
                    best = int(np.argmax(values))
                    cur = expected_utility(game, p, st["phi"], others)
                    if float(values[best]) > cur + margin:
                        phi_after = [0.0] * game.action_counts[p]
                        phi_after[best] = 1.0
                        switched = True
                eq_after = st["eq_hyp"]
                if st["eq_hyp"]:
                    for q in range(n):
                        if linf_distance(freq[q], eq.strategies[q]) > eps_e:
                            eq_after = False
                            grace_after = True
                            break
                _check(
                    rec["stat_hyp_after"] == stat_exp,
                    seq,
                    p,
                    "stat_hyp_after",
                    "stationarity flag does not follow from histograms",
                )
                _check(
                    rec["eq_hyp_after"] == eq_after,
                    seq,
                    p,
                    "eq_hyp_after",
                    "equilibrium flag does not follow from histograms",
                )
                _check(
                    rec["grace_after"] == grace_after,
                    seq,
                    p,
                    "grace_after",
                    "grace flag does not follow from transitions",
                )
                _check(
                    rec["switched"] == switched,
                    seq,
                    p,
                    "switched",
                    "best-response switch violates the strict margin rule",
                )
                if st["eq_hyp"] and not eq_after:
                    # The new pure action is random; only purity is checkable.
                    _check(
                        _is_pure_vector(rec["phi_after"]),
                        seq,
                        p,
                        "phi_after",
                        "post-rejection strategy is not a pure action",
                    )
                    phi_after = list(rec["phi_after"])
                else:
                    _check(
                        rec["phi_after"] == phi_after,
                        seq,
                        p,
                        "phi_after",
                        "strategy update does not follow from the margin rule",
                    )
                restart = not stat_exp
                _check(
                    rec["restart"] == restart,
                    seq,
                    p,
                    "restart",
                    "restart marker inconsistent with stationarity flag",
                )
                _check(
                    rec["restarts_total"] == st["restarts"] + (1 if restart else 0),
                    seq,
                    p,
                    "restarts_total",
                    "restart counter inconsistent",
                )
                if restart:
                    st.update(
                        t=0,
                        eq_hyp=True,
                        grace=False,
                        restarts=st["restarts"] + 1,
                        phi=[float(x) for x in eq.strategies[p]],
                        h_prev=None,
                    )
                else:
                    st.update(
                        t=st["t"] + 1,
                        eq_hyp=eq_after,
                        grace=grace_after,
                        phi=phi_after,
                        h_prev=rec["counts"],
                    )
    except _Divergence as d:
        return ValidationReport(ok=False, epochs_checked=len(groups), divergence=d.info)
    return ValidationReport(ok=True, epochs_checked=len(groups), divergence=None)


# -- batch ----------------------------------------------------------------------


@dataclass
class BatchResult:
    config_dict: dict
    summaries: list[RunSummary]
    convergence_fraction: float
    kind_counts: dict
    restart_histogram: dict
    mean_epochs_to_convergence: float | None
    traces: list[RunTrace] | None = None


def _aggregate(config: RunConfig, summaries: list[RunSummary], traces=None) -> BatchResult:
    converged = [s for s in summaries if s.converged]
    kinds: dict[str, int] = {}
    restarts: dict[int, int] = {}
    for s in summaries:
        kinds[s.kind] = kinds.get(s.kind, 0) + 1
        restarts[s.restarts] = restarts.get(s.restarts, 0) + 1
    epochs_tc = [
        s.epochs_to_convergence for s in converged if s.epochs_to_convergence is not None
    ]
    return BatchResult(
        config_dict=config_to_dict(config),
        summaries=summaries,
        convergence_fraction=len(converged) / len(summaries),
        kind_counts=kinds,
        restart_histogram=restarts,
        mean_epochs_to_convergence=(
            sum(epochs_tc) / len(epochs_tc) if epochs_tc else None
        ),
        traces=traces,
    )


def _one_trial(args):
    config, trial = args
    trace = run_trial(config, trial)
    return trace, detect_convergence(trace)


def run_batch(
    config: RunConfig,
    workers: int = 1,
    keep_traces: bool = False,
    on_trace=None,
) -> BatchResult:
    """Run all trials of the config; aggregation is order-independent.

    ``on_trace(trace, summary)`` is called per trial in trial order
    (e.g. to persist traces); set ``keep_traces`` to retain them in the
    result.
    """
    jobs = [(config, t) for t in range(config.trial_count)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_trial, jobs))
    else:
        results = [_one_trial(j) for j in jobs]
    summaries = []
    traces = [] if keep_traces else None
    for trace, summary in results:
        summaries.append(summary)
        if keep_traces:
            traces.append(trace)
        if on_trace is not None:
            on_trace(trace, summary)
    return _aggregate(config, summaries, traces)
