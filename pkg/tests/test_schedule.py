import math

import numpy as np
import pytest

from repgame.schedule import (
    PRODUCT_LIMIT,
    Schedule,
    check_valid_prefix,
    epoch_params,
    never_restart_lower_bound,
)

DEFAULT = Schedule(epsilon_base=0.5, actions_total=4)


# -- epoch parameters -----------------------------------------------------------


def test_epoch_params_default_family_frozen_values():
    p0 = epoch_params(DEFAULT, 0)
    assert (p0.eps_e, p0.eps_s, p0.rounds) == (0.5, 0.5, 32)
    p1 = epoch_params(DEFAULT, 1)
    assert (p1.eps_e, p1.eps_s, p1.rounds) == (0.25, 0.5, 128)
    p2 = epoch_params(DEFAULT, 2)
    assert p2.eps_e == pytest.approx(1 / 6)
    assert p2.eps_s == 0.25
    assert p2.rounds == 906


def test_epoch_params_six_action_values():
    s = Schedule(epsilon_base=0.5, actions_total=6)
    assert [epoch_params(s, t).rounds for t in range(3)] == [48, 192, 1358]


def test_eps_coupling():
    for s in (DEFAULT, Schedule(epsilon_base=0.3, actions_total=6, decay="geometric")):
        assert s.eps_s(0) == s.eps_e(0)
        for t in range(25):
            assert s.eps_s(t + 1) == s.eps_e(t)


def test_epoch_params_pure_function():
    a = epoch_params(DEFAULT, 5)
    b = epoch_params(DEFAULT, 5)
    assert a == b


def test_geometric_decay():
    s = Schedule(epsilon_base=0.5, actions_total=4, decay="geometric", rate=0.5)
    assert s.eps_e(0) == 0.5
    assert s.eps_e(3) == 0.5 * 0.5**3


def test_harmonic_offset():
    s = Schedule(epsilon_base=1 / 30, actions_total=6, offset=29.0)
    assert s.eps_e(0) == pytest.approx((1 / 30) * 30 / 30)
    assert s.eps_e(30) == pytest.approx((1 / 30) * 30 / 60)


def test_epoch0_rounds_override():
    s = Schedule(epsilon_base=0.5, actions_total=4, epoch0_rounds=5)
    assert s.rounds(0) == 5
    assert s.rounds(1) == 128  # override touches only epoch 0


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        Schedule(epsilon_base=0.0, actions_total=4)
    with pytest.raises(ValueError):
        Schedule(epsilon_base=1.5, actions_total=4)
    with pytest.raises(ValueError):
        Schedule(epsilon_base=0.5, actions_total=0)
    with pytest.raises(ValueError):
        Schedule(epsilon_base=0.5, actions_total=4, decay="cubic")


# -- validity checking -------------------------------------------------------------


def test_default_family_valid_long_prefix():
    report = check_valid_prefix(DEFAULT, 1000)
    assert report.valid
    assert report.eps_e_decreasing and report.eps_s_decreasing
    assert report.rounds_nondecreasing and report.factors_positive
    assert report.first_bad_t is None


class _ForcedRoundsSchedule:
    """Default epsilons but every epoch forced to one round."""

    actions_total = 4

    def eps_e(self, t):
        return DEFAULT.eps_e(t)

    def eps_s(self, t):
        return DEFAULT.eps_s(t)

    def rounds(self, t):
        return 1


class _ConstantEpsSchedule:
    actions_total = 4

    def eps_e(self, t):
        return 0.5

    def eps_s(self, t):
        return 0.5

    def rounds(self, t):
        return DEFAULT.rounds(t)


def test_forced_single_round_schedule_fails():
    report = check_valid_prefix(_ForcedRoundsSchedule(), 10)
    assert not report.valid
    assert not report.factors_positive
    assert report.first_bad_t == 1


def test_constant_eps_schedule_fails_monotonicity():
    report = check_valid_prefix(_ConstantEpsSchedule(), 10)
    assert not report.valid
    assert not report.eps_e_decreasing


def test_short_horizon_rejected():
    with pytest.raises(ValueError):
        check_valid_prefix(DEFAULT, 1)


# -- never-restart bound -------------------------------------------------------------


def test_single_factor_value():
    prod_s, prod_e = never_restart_lower_bound(DEFAULT, 1)
    # t=1: both thresholds are 0.25, N^1 = 128.
    assert prod_e == pytest.approx(1 - 4 / (128 * 0.0625))
    assert prod_e == pytest.approx(0.5)
    assert prod_s == pytest.approx(prod_e)


def test_products_monotone_nonincreasing():
    prods = [never_restart_lower_bound(DEFAULT, T) for T in range(1, 30)]
    for (s1, e1), (s2, e2) in zip(prods, prods[1:]):
        assert s2 <= s1 + 1e-15
        assert e2 <= e1 + 1e-15


def test_factor_bound_holds_exactly():
    # The ceiling in N^t makes each factor at least 2**-(1/t)^2, exactly.
    T = 10_000
    t = np.arange(1, T + 1, dtype=np.float64)
    eps_e = 0.5 / (t + 1)
    rounds = DEFAULT.rounds_array(t)
    factors = 1.0 - 4.0 / (rounds * eps_e**2)
    assert np.all(factors >= 2.0 ** -(1.0 / t) ** 2)


def test_partial_products_bounded_below_by_limit():
    for T in (10, 100, 1000):
        prod_s, prod_e = never_restart_lower_bound(DEFAULT, T)
        assert prod_s >= PRODUCT_LIMIT
        assert prod_e >= PRODUCT_LIMIT


def test_product_limit_constant():
    assert PRODUCT_LIMIT == pytest.approx(2.0 ** -(math.pi**2 / 6), abs=1e-12)


def test_nonpositive_factor_raises_in_bound():
    with pytest.raises(ValueError):
        never_restart_lower_bound(_ForcedRoundsSchedule(), 5)
