import math

import numpy as np
import pytest
from scipy import integrate

from scdensity import distributions as dists
from scdensity import ecf
from scdensity.errors import InvalidInput

ALL = ["gaussian", "cauchy", "comb", "box", "chi2_1"]


def test_gaussian_values():
    g = dists.gaussian()
    assert g.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert g.cf(0.0) == 1
    assert g.iqr() == pytest.approx(1.3489795003921634, rel=1e-12)


def test_gaussian_sample_moments():
    x = dists.gaussian().sample(dists.replicate_rng(11), 10 ** 5).values
    assert abs(x.mean()) < 0.02
    assert abs(x.var() - 1) < 0.02


def test_cauchy_values():
    c = dists.cauchy()
    assert c.pdf(0.0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert c.cf(1.0).real == pytest.approx(math.exp(-1), rel=1e-15)
    x = c.sample(dists.replicate_rng(12), 10 ** 5).values
    assert abs(np.median(x)) < 0.02


def test_comb_parameters():
    c = dists.comb()
    # Marron-Wand #14 written out by hand
    w = [32 / 63, 16 / 63, 8 / 63, 4 / 63, 2 / 63, 1 / 63]
    mu = [-31 / 21, 17 / 21, 41 / 21, 53 / 21, 59 / 21, 62 / 21]
    sd = [32 / 63, 16 / 63, 8 / 63, 4 / 63, 2 / 63, 1 / 63]
    np.testing.assert_allclose(c.weights, w, rtol=1e-15)
    np.testing.assert_allclose(c.means, mu, rtol=1e-15)
    np.testing.assert_allclose(c.sigmas, sd, rtol=1e-15)
    assert sum(c.weights) == pytest.approx(1.0, abs=1e-15)
    assert c.cf(0.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("name", ALL)
def test_pdf_integrates_to_one(name):
    d = dists.get(name)
    if name == "comb":
        pts = sorted(d.means)
        total = integrate.quad(d.pdf, -3, 4, points=pts, limit=400, epsabs=1e-13)[0]
        total += integrate.quad(d.pdf, -np.inf, -3)[0] + integrate.quad(d.pdf, 4, np.inf)[0]
    elif name == "chi2_1":
        # substitute x = u^2 to remove the singularity at 0
        total = integrate.quad(lambda u: 2 * u * d.pdf(u * u), 0, np.inf)[0]
    elif name == "box":
        total = integrate.quad(d.pdf, -0.5, 0.5)[0]
    else:
        total = integrate.quad(d.pdf, -np.inf, np.inf, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("name", ALL)
def test_cf_properties(name):
    d = dists.get(name)
    t = np.linspace(0, 40, 401)
    c = d.cf(t)
    assert np.all(np.abs(c) <= 1 + 1e-12)
    np.testing.assert_allclose(d.cf(-t), np.conj(c), rtol=0, atol=1e-15)
    assert d.cf(0.0) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(d.abs2_cf(t), np.abs(c) ** 2, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("name", ALL)
def test_pdf_nonnegative_and_cdf(name):
    d = dists.get(name)
    x = np.linspace(-10, 10, 2001)
    assert np.all(d.pdf(x) >= 0)
    assert np.all(np.diff(d.cdf(x)) >= -1e-15)


@pytest.mark.parametrize("name", ["gaussian", "cauchy", "comb"])
def test_ecf_consistency(name):
    d = dists.get(name)
    n = 10 ** 5
    s = d.sample(dists.replicate_rng(13), n)
    t = np.linspace(0, 6, 25)
    assert np.max(np.abs(ecf.ecf_at(s, t) - d.cf(t))) < 6 / math.sqrt(n)


@pytest.mark.parametrize("name", ALL)
def test_sampler_determinism(name):
    d = dists.get(name)
    a = d.sample(dists.replicate_rng(5, 3, 100), 100).values
    b = d.sample(dists.replicate_rng(5, 3, 100), 100).values
    c = d.sample(dists.replicate_rng(5, 4, 100), 100).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("name", ["gaussian", "cauchy", "comb", "box"])
def test_sq_integral_and_tail(name):
    d = dists.get(name)
    if name == "comb":
        ref = integrate.quad(lambda x: d.pdf(x) ** 2, -6, 6, points=sorted(d.means), limit=400)[0]
    elif name == "box":
        ref = 1.0
    else:
        ref = integrate.quad(lambda x: d.pdf(x) ** 2, -np.inf, np.inf, limit=400)[0]
    assert d.sq_integral() == pytest.approx(ref, rel=1e-8)
    a, b = -0.3, 0.2
    inner = integrate.quad(lambda x: d.pdf(x) ** 2, a, b)[0]
    assert d.sq_tail(a, b) == pytest.approx(d.sq_integral() - inner, rel=1e-8)


def test_quantile_iqr_roundtrip():
    c = dists.comb()
    q = c.quantile(0.3)
    assert c.cdf(q) == pytest.approx(0.3, abs=1e-12)
    assert dists.cauchy().iqr() == 2.0
    assert dists.Distribution.iqr(dists.cauchy()) == pytest.approx(2.0, rel=1e-12)


def test_registry():
    assert set(dists.names()) == set(ALL)
    with pytest.raises(InvalidInput):
        dists.get("weibull")
    with pytest.raises(InvalidInput):
        dists.GaussianMixture((0.5, 0.6), (0, 1), (1, 1))
