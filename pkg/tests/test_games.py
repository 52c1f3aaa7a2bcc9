import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repgame.catalog import (
    coordination_3p,
    matching_pennies,
    prisoners_dilemma,
    rock_paper_scissors,
)
from repgame.games import (
    StageGame,
    as_strategy,
    best_response,
    expected_utility,
    linf_distance,
    payoff_range,
    pure_action_values,
    pure_strategy,
    regret,
)


# -- hypothesis strategies ----------------------------------------------------


def random_game(rng: np.random.Generator, n_players: int, n_actions: int) -> StageGame:
    shape = (n_players,) + (n_actions,) * n_players
    return StageGame(rng.uniform(-5, 5, size=shape))


def simplex(rng: np.random.Generator, k: int) -> np.ndarray:
    x = rng.exponential(size=k)
    return x / x.sum()


prob_vectors = st.integers(2, 4).flatmap(
    lambda k: st.lists(st.floats(1e-3, 1.0), min_size=k, max_size=k)
).map(lambda xs: np.asarray(xs) / np.sum(xs))


# -- expected_utility ----------------------------------------------------------


def test_expected_utility_matching_pennies_pure_vs_mixed():
    g = matching_pennies()
    assert expected_utility(g, 0, pure_strategy(0, 2), [[0.7, 0.3]]) == pytest.approx(0.4)


def test_expected_utility_uniform_own_is_zero():
    g = matching_pennies()
    for opp in ([0.3, 0.7], [1.0, 0.0], [0.55, 0.45]):
        assert expected_utility(g, 0, [0.5, 0.5], [opp]) == pytest.approx(0.0)


def test_expected_utility_three_player_coordination():
    g = coordination_3p()
    val = expected_utility(g, 0, pure_strategy(0, 2), [[0.5, 0.5], [0.5, 0.5]])
    assert val == pytest.approx(0.25)


def test_expected_utility_rejects_dimension_mismatch():
    g = matching_pennies()
    with pytest.raises(ValueError):
        expected_utility(g, 0, [0.5, 0.3, 0.2], [[0.5, 0.5]])
    with pytest.raises(ValueError):
        expected_utility(g, 0, [0.5, 0.5], [[0.5, 0.3, 0.2]])


def test_expected_utility_linearity_in_own_strategy():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(2, 5))
        g = random_game(rng, n, k)
        own = simplex(rng, k)
        others = [simplex(rng, k) for _ in range(n - 1)]
        mixed = expected_utility(g, 0, own, others)
        decomposed = sum(
            own[a] * expected_utility(g, 0, pure_strategy(a, k), others)
            for a in range(k)
        )
        assert mixed == pytest.approx(decomposed, abs=1e-10)


def test_monte_carlo_payoff_oracle():
    # Sampled mean payoff agrees with exact enumeration within 4 standard errors.
    rng = np.random.default_rng(2024)
    g = rock_paper_scissors()
    own = np.array([0.2, 0.5, 0.3])
    opp = np.array([0.5, 0.3, 0.2])
    n = 10**6
    a0 = rng.choice(3, size=n, p=own)
    a1 = rng.choice(3, size=n, p=opp)
    samples = g.payoffs[0][a0, a1]
    exact = expected_utility(g, 0, own, [opp])
    se = samples.std(ddof=1) / np.sqrt(n)
    assert abs(samples.mean() - exact) <= 4 * se


# -- best_response ---------------------------------------------------------------


def test_best_response_rps_vs_skewed_opponent():
    g = rock_paper_scissors()
    action, value = best_response(g, 0, [[0.5, 0.3, 0.2]])
    assert action == 1  # Paper
    assert value == pytest.approx(0.3)
    values = pure_action_values(g, 0, [[0.5, 0.3, 0.2]])
    assert values == pytest.approx([-0.1, 0.3, -0.2])


def test_best_response_tie_breaks_to_lowest_index():
    g = matching_pennies()
    action, value = best_response(g, 0, [[0.5, 0.5]])
    assert (action, value) == (0, pytest.approx(0.0))


def test_best_response_dominant_defect():
    g = prisoners_dilemma()
    for w in np.linspace(0.0, 1.0, 11):
        action, _ = best_response(g, 0, [[w, 1 - w]])
        assert action == 1  # Defect


def test_best_response_dominates_every_pure_action():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(2, 5))
        g = random_game(rng, n, k)
        others = [simplex(rng, k) for _ in range(n - 1)]
        _, value = best_response(g, 0, others)
        for a in range(k):
            assert value >= expected_utility(g, 0, pure_strategy(a, k), others) - 1e-12


# -- linf_distance -----------------------------------------------------------------


def test_linf_distance_examples():
    assert linf_distance([0.6, 0.4], [0.5, 0.5]) == pytest.approx(0.1)
    assert linf_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert linf_distance([1, 0, 0], [0, 0, 1]) == 1.0


def test_linf_distance_rejects_length_mismatch():
    with pytest.raises(ValueError):
        linf_distance([0.5, 0.5], [1.0, 0.0, 0.0])


@settings(max_examples=100)
@given(prob_vectors, prob_vectors, prob_vectors)
def test_linf_distance_symmetry_and_triangle(p, q, r):
    k = min(len(p), len(q), len(r))
    p, q, r = p[:k] / p[:k].sum(), q[:k] / q[:k].sum(), r[:k] / r[:k].sum()
    assert linf_distance(p, q) == linf_distance(q, p)
    assert linf_distance(p, r) <= linf_distance(p, q) + linf_distance(q, r) + 1e-12
    assert 0.0 <= linf_distance(p, q) <= 1.0


# -- payoff_range / regret ------------------------------------------------------------


def test_payoff_range_examples():
    assert payoff_range(matching_pennies(), 0) == 2.0
    assert payoff_range(matching_pennies(), 1) == 2.0
    assert payoff_range(prisoners_dilemma(), 0) == 5.0
    constant = StageGame(np.full((2, 2, 2), 7.0))
    assert payoff_range(constant, 0) == 0.0


def test_regret_examples():
    mp = matching_pennies()
    uniform = [np.array([0.5, 0.5]), np.array([0.5, 0.5])]
    assert regret(mp, uniform, 0) == pytest.approx(0.0, abs=1e-12)
    assert regret(mp, uniform, 1) == pytest.approx(0.0, abs=1e-12)
    pd = prisoners_dilemma()
    cc = [pure_strategy(0, 2), pure_strategy(0, 2)]
    assert regret(pd, cc, 0) == pytest.approx(2.0)
    assert regret(pd, cc, 1) == pytest.approx(2.0)
    skew = [pure_strategy(0, 2), np.array([0.5, 0.5])]
    assert regret(mp, skew, 1) == pytest.approx(1.0)
    assert regret(mp, skew, 0) == pytest.approx(0.0, abs=1e-12)


def test_regret_nonnegative_on_random_profiles():
    rng = np.random.default_rng(99)
    for _ in range(30):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(2, 4))
        g = random_game(rng, n, k)
        profile = [simplex(rng, k) for _ in range(n)]
        for p in range(n):
            assert regret(g, profile, p) >= -1e-12


# -- type invariants -----------------------------------------------------------------


def test_strategy_validation():
    assert as_strategy([0.5, 0.5]).sum() == 1.0
    with pytest.raises(ValueError):
        as_strategy([0.5, 0.6])
    with pytest.raises(ValueError):
        as_strategy([-0.1, 1.1])


def test_stage_game_validation():
    with pytest.raises(ValueError):
        StageGame(np.array([[1.0, np.nan], [0.0, 0.0]])[None].repeat(2, axis=0))
    g = matching_pennies()
    assert g.num_players == 2
    assert g.action_counts == (2, 2)
    assert g.actions_total == 4
    assert g.payoff(0, (0, 0)) == 1.0
