import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from ofi_lab.errors import BoundViolation, ConfigError, UnsupportedIncrement
from ofi_lab.flow_models import (
    IntensityPath,
    RateConfig,
    SubordinatorSpec,
    driver_law_at,
    driver_mean,
    sample_cox_arrivals,
    sample_inhomogeneous_arrivals,
    sample_poisson_arrivals,
    sample_subordinator_path,
    sample_subordinator_terminal,
)
from ofi_lab.distributions.gig import gig_mean

SCALARS = json.loads(Path(__file__).with_name("data").joinpath("scalars.json").read_text())


def counts(sampler, runs, seed):
    rng = np.random.default_rng(seed)
    return np.array([sampler(rng).size for _ in range(runs)])


def poisson_chisquare(n, lam):
    hi = int(stats.poisson(lam).ppf(1 - 1e-3))
    lo = int(stats.poisson(lam).ppf(1e-3))
    edges = np.r_[0, np.arange(lo + 1, hi + 1), 10**9]
    obs = np.histogram(n, edges)[0]
    p = np.diff(np.r_[0.0, stats.poisson(lam).cdf(edges[1:-1] - 1), 1.0])
    return stats.chisquare(obs, p * n.size).pvalue


# --- Poisson ---------------------------------------------------------------------


def test_unit_poisson_zero_probability():
    n = counts(lambda r: sample_poisson_arrivals(1.0, 1.0, r), 100_000, 1)
    assert abs(np.mean(n == 0) - SCALARS["poisson1_p0"]) < 0.005


def test_poisson_arrivals_sorted_with_exponential_gaps():
    t = sample_poisson_arrivals(4.0, 5000.0, 2)
    assert np.all(np.diff(t) > 0) and t[-1] <= 5000.0
    assert abs(t.size - 20000) < 4 * math.sqrt(20000)
    assert stats.kstest(np.diff(np.r_[0.0, t]), stats.expon(scale=0.25).cdf).pvalue > 0.01


def test_superposition_is_poisson():
    rng = np.random.default_rng(3)
    n = np.array([sample_poisson_arrivals(1.5, 1.0, rng).size + sample_poisson_arrivals(2.5, 1.0, rng).size for _ in range(20_000)])
    assert poisson_chisquare(n, 4.0) > 0.01
    merged = np.sort(np.r_[sample_poisson_arrivals(1.5, 4000.0, rng), sample_poisson_arrivals(2.5, 4000.0, rng)])
    assert stats.kstest(np.diff(merged), stats.expon(scale=0.25).cdf).pvalue > 0.01


@pytest.mark.parametrize("rate,horizon", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_poisson_rejects_nonpositive(rate, horizon):
    with pytest.raises(ValueError):
        sample_poisson_arrivals(rate, horizon, 0)


# --- thinning ----------------------------------------------------------------------


def test_thinning_linear_rate_mean():
    want = integrate.quad(lambda t: 2 * t, 0, 1)[0]
    assert want == pytest.approx(SCALARS["thinning_mean_2t"])
    n = counts(lambda r: sample_inhomogeneous_arrivals(lambda t: 2 * t, 2.0, 1.0, r), 40_000, 4)
    assert abs(n.mean() - want) < 3 * math.sqrt(want / n.size)
    assert poisson_chisquare(n, want) > 0.01


def test_thinning_positions_follow_rate():
    t = sample_inhomogeneous_arrivals(lambda t: 2 * t, 2.0, 1.0, 5)
    rng = np.random.default_rng(5)
    t = np.concatenate([sample_inhomogeneous_arrivals(lambda t: 2 * t, 2.0, 1.0, rng) for _ in range(5000)])
    assert stats.kstest(t, lambda x: x * x).pvalue > 0.01


def test_constant_thinning_is_poisson():
    n = counts(lambda r: sample_inhomogeneous_arrivals(lambda t: 3.0 + 0 * t, 5.0, 1.0, r), 20_000, 6)
    assert poisson_chisquare(n, 3.0) > 0.01


def test_zero_rate_gives_no_arrivals():
    assert sample_inhomogeneous_arrivals(lambda t: 0.0, 3.0, 10.0, 7).size == 0


def test_scalar_rate_function_accepted():
    t = sample_inhomogeneous_arrivals(lambda t: 1.0 if t < 5 else 0.0, 1.0, 10.0, 8)
    assert t.size > 0 and t.max() < 5


def test_bound_violation():
    with pytest.raises(BoundViolation):
        sample_inhomogeneous_arrivals(lambda t: 3 * t, 2.0, 1.0, 9)
    with pytest.raises(BoundViolation):
        sample_inhomogeneous_arrivals(lambda t: -1.0 + 0 * t, 2.0, 5.0, 9)


# --- subordinators -------------------------------------------------------------------


def test_deterministic_path_is_linear():
    grid = np.array([0.0, 0.3, 1.0, 2.5])
    p = sample_subordinator_path(SubordinatorSpec("deterministic_linear", {"slope": 2.5}), grid, 0)
    np.testing.assert_allclose(p.cumulative, 2.5 * grid)


def test_gamma_terminal_moments():
    x = sample_subordinator_terminal(SubordinatorSpec("gamma"), 1.0, 100_000, 10)
    se = math.sqrt(1.0 / x.size)
    assert abs(x.mean() - 1.0) < 3 * se
    # Var of the sample variance for Exp(1) is (mu4 - 1)/n = 8/n
    assert abs(x.var() - 1.0) < 3 * math.sqrt(8.0 / x.size)


def test_stable_self_similarity():
    spec = SubordinatorSpec("stable_one_sided", {"exponent": 0.5})
    a = sample_subordinator_terminal(spec, 1.0, 100_000, 11)
    b = sample_subordinator_terminal(spec, 4.0, 100_000, 12) / 16.0
    assert stats.ks_2samp(a, b).statistic < 0.02


def test_gamma_increments_independent_and_scaled():
    spec = SubordinatorSpec("gamma", {"shape": 2.0, "rate": 4.0})
    cum = sample_subordinator_path(spec, np.array([0.0, 0.5, 2.0]), 13, n_paths=50_000)
    d1, d2 = cum[:, 1], cum[:, 2] - cum[:, 1]
    assert stats.kstest(d1, stats.gamma(1.0, scale=0.25).cdf).pvalue > 0.01
    assert stats.kstest(d2, stats.gamma(3.0, scale=0.25).cdf).pvalue > 0.01
    assert abs(stats.spearmanr(d1, d2)[0]) < 4 / math.sqrt(d1.size)


def test_inverse_gaussian_terminal_law():
    spec = SubordinatorSpec("inverse_gaussian", {"mu": 1.0, "lam": 4.0})
    x = sample_subordinator_terminal(spec, 2.0, 50_000, 14)
    # GIG(-1/2, 4, 4): IG with mean sqrt(4/4)=1 ... scaled by t: mean t sqrt(mu/lam)
    law = stats.invgauss(mu=1.0 / 4.0, scale=4.0)  # mean 1, shape mu t^2 = 4
    assert stats.kstest(x, law.cdf).pvalue > 0.01
    assert driver_mean(spec, 2.0) == pytest.approx(1.0)


def test_gig_family_special_cases_match_dedicated_families():
    g = SubordinatorSpec("gig", {"nu": 2.0, "mu": 0.0, "lam": 2.0})
    ref = SubordinatorSpec("gamma", {"shape": 2.0, "rate": 1.0})
    assert g.has_exact_increments()
    a = sample_subordinator_terminal(g, 0.5, 50_000, 15)
    b = sample_subordinator_terminal(ref, 0.5, 50_000, 16)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_general_gig_terminal_only():
    spec = SubordinatorSpec("gig", {"nu": 1.0, "mu": 1.0, "lam": 1.0})
    assert not spec.has_exact_increments()
    x = sample_subordinator_terminal(spec, 1.0, 50_000, 17)
    assert abs(x.mean() - gig_mean(spec.gig_params)) < 4 * x.std() / math.sqrt(x.size)
    with pytest.raises(UnsupportedIncrement):
        sample_subordinator_path(spec, np.array([0.0, 0.5, 1.0]), 0)
    with pytest.raises(UnsupportedIncrement):
        sample_subordinator_terminal(spec, 2.0, 10, 0)
    with pytest.raises(UnsupportedIncrement):
        driver_law_at(spec, 0.5)
    assert driver_law_at(spec, 1.0) == spec.gig_params


def test_windowed_gig_is_piecewise_linear():
    spec = SubordinatorSpec("gig_windowed", {"nu": 1.0, "mu": 1.0, "lam": 1.0, "window": 1.0})
    grid = np.linspace(0.0, 3.0, 13)
    c = sample_subordinator_path(spec, grid, 18).cumulative
    slopes = np.diff(c).reshape(3, 4)
    np.testing.assert_allclose(slopes, slopes[:, :1] * np.ones((1, 4)), rtol=1e-12)


def test_paths_nondecreasing_and_deterministic():
    spec = SubordinatorSpec("stable_one_sided", {"exponent": 0.7})
    grid = np.linspace(0.0, 2.0, 65)
    a = sample_subordinator_path(spec, grid, 19)
    b = sample_subordinator_path(spec, grid, 19)
    assert a.cumulative[0] == 0 and np.all(np.diff(a.cumulative) >= 0)
    np.testing.assert_array_equal(a.cumulative, b.cumulative)


@pytest.mark.parametrize("grid", [[0.5, 1.0], [0.0, 1.0, 1.0], [0.0, 2.0, 1.0]])
def test_bad_grid(grid):
    with pytest.raises(ValueError):
        sample_subordinator_path(SubordinatorSpec("gamma"), np.array(grid), 0)


@pytest.mark.parametrize(
    "times,cum", [([0.0, 1.0], [0.1, 1.0]), ([0.0, 1.0], [0.0, -1.0]), ([0.0, 0.0], [0.0, 1.0]), ([0.0, 1.0], [0.0, np.inf])]
)
def test_intensity_path_validation(times, cum):
    with pytest.raises(ValueError):
        IntensityPath(np.array(times), np.array(cum))


def test_intensity_path_inverse():
    p = IntensityPath(np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.0, 2.0, 2.0, 5.0]))
    np.testing.assert_allclose(p.value_at([0.5, 1.5, 2.5]), [1.0, 2.0, 3.5])
    np.testing.assert_allclose(p.inverse([1.0, 2.0, 3.5]), [0.5, 1.0, 2.5])


# --- Cox ------------------------------------------------------------------------------


def test_deterministic_cox_is_two_poisson_streams():
    spec = SubordinatorSpec("deterministic_linear", {"slope": 1.0})
    rng = np.random.default_rng(20)
    runs = [sample_cox_arrivals(spec, 3.0, rng) for _ in range(20_000)]
    npl = np.array([r.plus.size for r in runs])
    nmi = np.array([r.minus.size for r in runs])
    assert poisson_chisquare(npl, 3.0) > 0.01 and poisson_chisquare(nmi, 3.0) > 0.01
    assert abs(stats.pearsonr(npl, nmi)[0]) < 4 / math.sqrt(npl.size)


def test_gamma_cox_counts_are_overdispersed():
    spec = SubordinatorSpec("gamma")
    rng = np.random.default_rng(21)
    grid = np.array([0.0, 1.0])
    n = np.array([sample_cox_arrivals(spec, 1.0, rng, grid=grid).plus.size for _ in range(100_000)])
    assert n.var() > n.mean() + 0.5
    assert n.var() == pytest.approx(SCALARS["unit_exp_mixture_var"], rel=0.05)
    # Poisson mixed over Exp(1) is geometric: P(N=k) = 2^-(k+1)
    k = np.arange(8)
    obs = np.r_[np.bincount(np.minimum(n, 8), minlength=9)]
    exp = np.r_[0.5 ** (k + 1), 0.5**8] * n.size
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_multiplier_doubles_buy_mean():
    spec = SubordinatorSpec("gamma", {"shape": 2.0, "rate": 1.0}, alpha_plus=2.0, alpha_minus=1.0)
    rng = np.random.default_rng(22)
    runs = [sample_cox_arrivals(spec, 5.0, rng, grid=np.linspace(0, 5, 11)) for _ in range(20_000)]
    p = np.array([r.plus.size for r in runs])
    m = np.array([r.minus.size for r in runs])
    # E N+ = 2 * 2 * 5 = 20, E N- = 10
    d = p - 2 * m
    assert abs(d.mean()) < 3 * d.std() / math.sqrt(d.size)
    assert abs(m.mean() - 10) < 3 * m.std() / math.sqrt(m.size)


def test_cox_arrivals_within_cells():
    spec = SubordinatorSpec("gig_windowed", {"nu": 1.0, "mu": 1.0, "lam": 1.0, "window": 2.0})
    r = sample_cox_arrivals(spec, 10.0, 23)
    assert r.path.times.tolist() == [0, 2, 4, 6, 8, 10]
    assert np.all(np.diff(r.plus) >= 0) and (r.plus.size == 0 or r.plus[-1] <= 10.0)


def test_cox_deterministic_under_seed():
    spec = SubordinatorSpec("inverse_gaussian", {"mu": 2.0, "lam": 1.0})
    a = sample_cox_arrivals(spec, 4.0, 99)
    b = sample_cox_arrivals(spec, 4.0, 99)
    np.testing.assert_array_equal(a.plus, b.plus)
    np.testing.assert_array_equal(a.minus, b.minus)


# --- configuration ------------------------------------------------------------------


def test_rate_config_validation():
    with pytest.raises(ConfigError):
        RateConfig(1.0, 1.0, [1, 1], [1], [0, 0], [0, 0])
    with pytest.raises(ConfigError):
        RateConfig(1.0, 1.0, [1, np.nan], [1, 1], [0, 0], [0, 0])


def test_category_rates_layout():
    rc = RateConfig(1.0, 2.0, [3, 4], [5, 6], [7, 8], [9, 10])
    np.testing.assert_array_equal(rc.category_rates(), [1, 2, 3, 4, 5, 6, 7, 8, 9, 10])


def test_spec_config_round_trip():
    spec = SubordinatorSpec("gig", {"nu": -0.3, "mu": 1.5, "lam": 0.25, "scale": 3.0}, 2.0, 0.5)
    again = SubordinatorSpec.from_config(spec.to_config())
    assert again == spec
    assert spec.mix_weight == pytest.approx(0.8)


@pytest.mark.parametrize(
    "mapping,key",
    [
        ({"family": "lognormal"}, "family"),
        ({"shape": "1"}, "family"),
        ({"family": "gamma", "shape": "x"}, "shape"),
        ({"family": "gamma", "colour": "1"}, "colour"),
        ({"family": "gamma", "mu": "1"}, "mu"),
        ({"family": "gamma", "alpha_plus": "0"}, "alpha_plus"),
        ({"family": "stable_one_sided", "exponent": "1.5"}, "exponent"),
        ({"family": "gig", "nu": "1", "mu": "1"}, "lam"),
        ({"family": "gig", "nu": "-1", "mu": "0", "lam": "1"}, "nu"),
    ],
)
def test_spec_config_errors_name_key(mapping, key):
    with pytest.raises(ConfigError) as e:
        SubordinatorSpec.from_config(mapping)
    assert e.value.key == key
