import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covertcomm.channels import ChannelPair, GaussianPair, MultiSymbolChannel, bsc_pair
from covertcomm.divergence import chi_k, kl, mixture_divergence_exact
from covertcomm.errors import AssumptionError, ConfigError
from covertcomm.process import (
    CovertParameters,
    support_revealing_constant,
    asymptotic_constants,
    covertness_budget,
    multi_symbol_constants,
    omega_schedule,
    parse_schedule,
    scaling_class,
    single_letter_budget,
    solve_alpha_for_budget,
)

D_MAIN_DESK = 2.649995081249796  # D(BSC(0.05) rows), frozen
BUDGET_DESK = 9.822933719135006e-04  # n D(Q_alpha||Q0) at n=1e4, inv_log, frozen


def test_schedule_values():
    assert omega_schedule("inv_log", 10_000) == pytest.approx(0.108574, abs=1e-6)
    assert omega_schedule("log_over_sqrt", 10_000) == pytest.approx(0.092103, abs=1e-6)
    assert omega_schedule("power(0.25)", 10_000) == pytest.approx(0.1)
    assert omega_schedule("power:0.25", 10_000) == pytest.approx(0.1)


@pytest.mark.parametrize("bad", ["linear", "power(0.7)", "power(0)"])
def test_schedule_rejects(bad):
    with pytest.raises(ConfigError):
        parse_schedule(bad)


def test_schedule_rejects_tiny_n():
    with pytest.raises(ConfigError):
        omega_schedule("inv_log", 2)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["inv_log", "log_over_sqrt", "power(0.1)", "power(0.4)"]), st.integers(100, 10**8))
def test_schedule_growth_conditions(kind, n):
    w1, w2 = omega_schedule(kind, n), omega_schedule(kind, 4 * n)
    assert w2 < w1  # vanishing
    assert w2 * math.sqrt(4 * n) > w1 * math.sqrt(n)  # mean weight grows


def test_parameter_pack():
    p = CovertParameters.from_schedule(10_000, "inv_log")
    assert p.alpha_n == pytest.approx(p.omega_n / 100)
    assert p.beta_n == pytest.approx(p.alpha_n / 2)
    assert p.mean_weight == pytest.approx(p.omega_n * 100)
    assert p.to_dict()["gamma"] == "nan"


def test_budget_reference(desk_pair):
    p = CovertParameters.from_schedule(10_000, "inv_log")
    assert covertness_budget(p, desk_pair) == pytest.approx(BUDGET_DESK, rel=1e-12)
    assert covertness_budget(p, desk_pair, alpha=0.0) == 0.0
    p2 = CovertParameters.from_alpha(20_000, p.alpha_n)
    assert covertness_budget(p2, desk_pair) == pytest.approx(2 * covertness_budget(p, desk_pair), rel=1e-12)


def test_gaussian_budget_near_leading_term():
    g = GaussianPair(1.0, 1.0, 1.0)
    a = 1e-3
    lead = a * a / 2 * math.expm1(1.0)
    assert single_letter_budget(a, g) == pytest.approx(lead, rel=1e-2)


def test_solve_alpha_reference(desk_pair):
    a = solve_alpha_for_budget(desk_pair, 10_000, 0.01)
    assert a == pytest.approx(3.46e-3, rel=2e-3)
    assert 10_000 * mixture_divergence_exact(a, desk_pair.Q1, desk_pair.Q0) == pytest.approx(0.01, rel=1e-9)
    assert solve_alpha_for_budget(desk_pair, 10_000, 1e-12) < 1e-6
    same = ChannelPair.from_distributions([0.9, 0.1], [0.1, 0.9], [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(AssumptionError):
        solve_alpha_for_budget(same, 100, 0.01)


def test_asymptotic_constants_reference(desk_pair):
    c = asymptotic_constants(desk_pair, xi=0.5)
    assert c.converse_msg_ceiling == pytest.approx(math.sqrt(12) * D_MAIN_DESK, rel=1e-12)
    assert c.converse_msg_ceiling == pytest.approx(9.17985, abs=1e-5)
    assert c.key_const == 0.0
    assert asymptotic_constants(desk_pair, xi=0.0).msg_const == pytest.approx(c.converse_msg_ceiling)
    # key constant of a symmetric pair vanishes exactly at xi = 0
    sym = bsc_pair(0.2, 0.2)
    assert asymptotic_constants(sym, xi=0.0).key_const == 0.0


def test_multi_symbol_reduces_to_single(desk_pair):
    one = MultiSymbolChannel(desk_pair.P0, desk_pair.Q0, [desk_pair.P1], [desk_pair.Q1], [1.0])
    two = MultiSymbolChannel(desk_pair.P0, desk_pair.Q0, [desk_pair.P1] * 2, [desk_pair.Q1] * 2, [0.5, 0.5])
    ref = asymptotic_constants(desk_pair, 0.3)
    for ch in (one, two):
        got = multi_symbol_constants(ch, 0.3)
        assert got.msg_const == pytest.approx(ref.msg_const, rel=1e-12)
        assert got.key_const == pytest.approx(ref.key_const, abs=1e-12)


def test_multi_symbol_ternary_hand_sum():
    P0, Q0 = [0.9, 0.1], [0.7, 0.3]
    P, Q, w = [[0.2, 0.8], [0.4, 0.6]], [[0.4, 0.6], [0.5, 0.5]], [0.25, 0.75]
    got = multi_symbol_constants(MultiSymbolChannel(P0, Q0, P, Q, w), 0.5)
    q_bar = 0.25 * np.array(Q[0]) + 0.75 * np.array(Q[1])
    scale = math.sqrt(2 / chi_k(q_bar, Q0))
    d_main = 0.25 * kl(P[0], P0) + 0.75 * kl(P[1], P0)
    d_war = 0.25 * kl(Q[0], Q0) + 0.75 * kl(Q[1], Q0)
    assert got.msg_const == pytest.approx(0.5 * scale * d_main, rel=1e-12)
    assert got.key_const == pytest.approx(scale * max(1.5 * d_war - 0.5 * d_main, 0.0), abs=1e-12)


def test_scaling_classes():
    assert scaling_class(bsc_pair(0.05, 0.4)).logM_class == "Theta(sqrt(n))"
    worse_main = scaling_class(bsc_pair(0.4, 0.05))
    assert (worse_main.logM_class, worse_main.logK_class) == ("Theta(sqrt(n))", "Theta(sqrt(n))")
    not_ac = ChannelPair.from_distributions([0.9, 0.1], [0.1, 0.9], [1.0, 0.0], [0.5, 0.5])
    assert (scaling_class(not_ac).logM_class, scaling_class(not_ac).logK_class) == ("0", "0")
    same_warden = ChannelPair.from_distributions([0.9, 0.1], [0.1, 0.9], [0.5, 0.5], [0.5, 0.5])
    assert (scaling_class(same_warden).logM_class, scaling_class(same_warden).logK_class) == ("Theta(n)", "0")
    revealing = ChannelPair.from_distributions([1.0, 0.0], [0.5, 0.5], [0.6, 0.4], [0.4, 0.6])
    assert scaling_class(revealing).logM_class == "Theta(sqrt(n) log n)"


def test_support_revealing_constant():
    pair = ChannelPair.from_distributions([1.0, 0.0], [0.5, 0.5], [0.6, 0.4], [0.4, 0.6])
    scale = math.sqrt(2 / chi_k(pair.Q1, pair.Q0))
    assert support_revealing_constant(pair, "power(0.25)", 0.5) == pytest.approx(0.5 * 0.5 * scale * 0.75)
    assert support_revealing_constant(pair, "inv_log", 0.5) == pytest.approx(0.5 * 0.5 * scale * 0.5)
    with pytest.raises(AssumptionError):
        support_revealing_constant(bsc_pair(0.05, 0.4), "inv_log")


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 0.45), st.floats(1e-6, 0.3))
def test_budget_monotone_in_alpha(q, a):
    pair = bsc_pair(0.1, q)
    assert single_letter_budget(a, pair) < single_letter_budget(min(2 * a, 1.0), pair)
