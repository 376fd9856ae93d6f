import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from covertcomm.channels import (
    ChannelPair,
    FiniteDistribution,
    GaussianPair,
    MultiSymbolChannel,
    bsc_pair,
    capacity_binary_input,
    gaussian_closed_forms,
    load_channel_pair,
    matrix_pair,
)
from covertcomm.errors import ChannelSpecError


def _doc(**kw):
    d = {
        "schema_version": 1,
        "input_alphabet": ["0", "1"],
        "innocent_index": 0,
        "x1_index": 1,
        "main": [[0.95, 0.05], [0.05, 0.95]],
        "warden": [[0.6, 0.4], [0.4, 0.6]],
    }
    d.update(kw)
    return d


def test_bsc_derived_fields():
    p = bsc_pair(0.25, 0.25)
    assert np.allclose(p.Q0, [0.75, 0.25])
    assert np.allclose(p.Q1, [0.25, 0.75])
    assert p.mu0 == 0.25
    assert p.p1_ac_p0 and p.q1_ac_q0 and not p.q1_eq_q0
    assert p.kappa == 0.0


def test_support_revealing_main_channel():
    p = ChannelPair.from_distributions([1.0, 0.0], [0.5, 0.5], [0.6, 0.4], [0.4, 0.6])
    assert p.kappa == 0.5
    assert not p.p1_ac_p0
    assert p.zeta == math.inf
    assert p.revealing_outputs.tolist() == [1]


def test_identical_warden_rows():
    p = ChannelPair.from_distributions([0.9, 0.1], [0.1, 0.9], [0.5, 0.5], [0.5, 0.5])
    assert p.q1_eq_q0


def test_distribution_validation():
    with pytest.raises(ChannelSpecError):
        FiniteDistribution([0.5, 0.6])
    with pytest.raises(ChannelSpecError):
        FiniteDistribution([1.2, -0.2])
    with pytest.raises(ChannelSpecError):
        FiniteDistribution([])
    d = FiniteDistribution([0.25, 0.75])
    with pytest.raises(ValueError):
        d.probabilities[0] = 1.0


def test_loader_round_trip(tmp_path):
    p = load_channel_pair(_doc())
    assert p == load_channel_pair(p.to_document())
    f = tmp_path / "c.json"
    f.write_text(json.dumps(_doc()))
    assert load_channel_pair(f) == p
    assert matrix_pair(_doc()["main"], _doc()["warden"]) == p


@pytest.mark.parametrize(
    "bad",
    [
        {"extra_field": 1},
        {"main": [[0.9, 0.05], [0.05, 0.95]]},
        {"main": [[1.1, -0.1], [0.05, 0.95]]},
        {"x1_index": 0},
        {"x1_index": 5},
        {"warden": [[0.6, 0.4]]},
    ],
)
def test_loader_rejects_bad_documents(bad):
    with pytest.raises(ChannelSpecError):
        load_channel_pair(_doc(**bad))


def test_loader_missing_file():
    with pytest.raises(ChannelSpecError):
        load_channel_pair("/nonexistent/channel.json")


def test_gaussian_document():
    g = load_channel_pair({"gaussian": {"x1": 1.0, "sigma_main": 1.0, "sigma_warden": 2.0}})
    assert isinstance(g, GaussianPair)
    with pytest.raises(ChannelSpecError):
        GaussianPair(1.0, 0.0, 1.0)


def test_capacity_reference_values():
    c, a = capacity_binary_input(bsc_pair(0.25, 0.25))
    assert c == pytest.approx(0.1308120359411370, abs=1e-9)
    assert a == pytest.approx(0.5, abs=1e-6)
    useless = ChannelPair.from_distributions([0.3, 0.7], [0.3, 0.7], [0.5, 0.5], [0.4, 0.6])
    assert capacity_binary_input(useless)[0] == pytest.approx(0.0, abs=1e-12)
    assert capacity_binary_input(bsc_pair(0.0, 0.4))[0] == pytest.approx(math.log(2), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.001, 0.499))
def test_capacity_matches_bsc_closed_form(p):
    closed = math.log(2) + p * math.log(p) + (1 - p) * math.log(1 - p)
    assert capacity_binary_input(bsc_pair(p, 0.4))[0] == pytest.approx(closed, abs=1e-9)


def _quadrature(x1, sigma):
    p0, p1 = stats.norm(0, sigma), stats.norm(x1, sigma)
    lo, hi = min(0, x1) - 12 * sigma, max(0, x1) + 12 * sigma
    kl = integrate.quad(lambda y: p1.pdf(y) * (p1.logpdf(y) - p0.logpdf(y)), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    zeta = integrate.quad(lambda y: math.exp(2 * p1.logpdf(y) - p0.logpdf(y)), lo - 4 * abs(x1), hi + 4 * abs(x1), epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return kl, zeta


def test_gaussian_closed_forms_reference():
    f = gaussian_closed_forms(GaussianPair(1.0, 1.0, 2.0))
    assert f["main"].kl == pytest.approx(0.5)
    assert f["main"].zeta == pytest.approx(math.e)
    assert f["warden"].kl == pytest.approx(0.125)
    qk, qz = _quadrature(1.0, 1.0)
    assert f["main"].kl == pytest.approx(qk, abs=1e-8)
    assert f["main"].zeta == pytest.approx(qz, abs=1e-8)


def test_gaussian_small_amplitude_vanishes():
    f = gaussian_closed_forms(GaussianPair(1e-9, 1.0, 1.0))["main"]
    assert f.kl == pytest.approx(0.0, abs=1e-15)
    assert f.chi2 == pytest.approx(0.0, abs=1e-15)


def test_multi_symbol_channel_validation():
    ch = MultiSymbolChannel(P0=[0.9, 0.1], Q0=[0.6, 0.4], P=[[0.1, 0.9]], Q=[[0.4, 0.6]], weights=[1.0])
    assert ch.N == 1
    with pytest.raises(ChannelSpecError):
        MultiSymbolChannel(P0=[0.9, 0.1], Q0=[0.6, 0.4], P=[[0.1, 0.9]], Q=[[0.4, 0.6]], weights=[0.5])
