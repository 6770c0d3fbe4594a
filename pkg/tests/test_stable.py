import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from ofi_lab.distributions import StableParams, levy_cdf, stable_cf, stable_mixture_sample, stable_sample
from ofi_lab.errors import DomainError

SCALARS = json.loads(Path(__file__).with_name("data").joinpath("scalars.json").read_text())
S = np.linspace(-5, 5, 101)


def test_alpha_two_is_normal_with_variance_two():
    np.testing.assert_allclose(stable_cf(StableParams(2.0, 0.0), S), np.exp(-(S**2)), rtol=1e-14)


def test_cf_formula():
    p = StableParams(0.7, 0.4)
    s = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    want = np.exp(-(np.abs(s) ** 0.7) * np.exp(-0.5j * math.pi * 0.4 * 0.7 * np.sign(s)))
    np.testing.assert_allclose(stable_cf(p, s), want, rtol=1e-15)


@pytest.mark.parametrize("a,t", [(0.0, 0.0), (2.5, 0.0), (1.5, 0.5), (0.5, 1.2)])
def test_domain(a, t):
    with pytest.raises(DomainError):
        StableParams(a, t)


def test_levy_cdf_value():
    assert float(levy_cdf(1.0)) == pytest.approx(SCALARS["levy_cdf_at_1"], rel=1e-12)


def test_levy_sampler_against_closed_form():
    x = stable_sample(StableParams(0.5, 1.0), 100_000, seed=1)
    assert np.all(x >= 0)
    p_hat = np.mean(x < 1.0)
    assert abs(p_hat - SCALARS["levy_cdf_at_1"]) < 3 * math.sqrt(0.25 / x.size)
    assert stats.kstest(x, levy_cdf).pvalue > 0.01


@pytest.mark.parametrize("a,t", [(1.5, 0.0), (0.8, 0.5), (1.0, 0.0), (1.2, -0.3), (0.6, 1.0)])
def test_sampler_matches_cf(a, t):
    p = StableParams(a, t)
    x = stable_sample(p, 200_000, seed=3)
    s = np.linspace(-3, 3, 25)
    emp = np.exp(1j * np.outer(s, x)).mean(axis=1)
    assert np.max(np.abs(emp - stable_cf(p, s))) < 0.01


def test_one_sided_self_similarity():
    # X(t) = t^{1/alpha} X(1): Lambda(4) for alpha = 1/2 is 16 Lambda(1)
    x1 = stable_sample(StableParams(0.5, 1.0), 100_000, seed=5)
    x4 = stable_sample(StableParams(0.5, 1.0), 100_000, seed=6) * 4**2
    assert stats.ks_2samp(16 * x1, x4).statistic < 0.02


@pytest.mark.parametrize("a", [0.6, 1.0, 1.5])
def test_normal_scale_mixture_identity(a):
    mix = stable_mixture_sample(a, 100_000, seed=11)
    direct = stable_sample(StableParams(a, 0.0), 100_000, seed=12)
    assert stats.ks_2samp(mix, direct).pvalue > 0.01


def test_mixture_without_factor_two_is_detected():
    # sqrt(U) Z alone has half the scale; the KS test must notice
    a = 1.5
    rng = np.random.default_rng(0)
    u = stable_sample(StableParams(a / 2, 1.0), 100_000, rng)
    wrong = np.sqrt(u) * rng.standard_normal(u.size)
    direct = stable_sample(StableParams(a, 0.0), 100_000, seed=12)
    assert stats.ks_2samp(wrong, direct).pvalue < 1e-6
