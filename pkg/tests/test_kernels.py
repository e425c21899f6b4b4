import math

import numpy as np
import pytest

from scdensity import distributions as dists
from scdensity import ecf, kernels
from scdensity.errors import (
    BandwidthFallbackWarning,
    InvalidInput,
    NoQualifyingM,
    PilotUnderflow,
    ZeroIQR,
)
from scdensity.model import EcfTable, FrequencyGrid, Sample

from conftest import gaussian_sample


def _with_iqr(n, iq):
    # type-7 quartiles of 0..n-1 sit at 0.25 (n-1) and 0.75 (n-1)
    return Sample(np.arange(n) * iq / (0.5 * (n - 1)))


def test_kg_bandwidth_examples():
    assert kernels.kg_bandwidth(_with_iqr(32, 2.0)) == pytest.approx(0.79, rel=1e-12)
    assert kernels.kg_bandwidth(_with_iqr(10 ** 5, 1.349)) == pytest.approx(0.1065710, rel=1e-6)


def test_kg_bandwidth_fallback():
    s = Sample([0.0] * 10 + [1.0])
    with pytest.warns(BandwidthFallbackWarning):
        h = kernels.kg_bandwidth(s)
    assert h == pytest.approx(1.06 * s.std() * 11 ** -0.2)
    with pytest.raises(ZeroIQR):
        kernels.kg_bandwidth(Sample([3.0] * 5))


def _table(grid, abs2_half):
    half = np.sqrt(np.asarray(abs2_half, dtype=float)).astype(complex)
    half[0] = 1
    return EcfTable(grid, np.concatenate([np.conj(half[:0:-1]), half]))


def test_kt_bandwidth_gaussian_crossing():
    n = 100
    c2 = math.exp(-4) * n / math.log(n)
    grid = FrequencyGrid(0.01, 1000)
    t = grid.positive_nodes
    h = kernels.kt_bandwidth(_table(grid, np.exp(-t * t)), n, c2)
    assert h == pytest.approx(0.25, rel=1e-2)


def test_kt_bandwidth_edge_cases():
    grid = FrequencyGrid(0.1, 200)
    with pytest.raises(NoQualifyingM):
        kernels.kt_bandwidth(_table(grid, np.ones(201)), 100, 1.0)
    assert kernels.kt_bandwidth(_table(grid, np.zeros(201)), 100, 1.0) == pytest.approx(1 / 0.2)
    with pytest.raises(InvalidInput):
        kernels.kt_bandwidth(_table(grid, np.zeros(201)), 2, 1.0)
    with pytest.raises(InvalidInput):
        kernels.kt_bandwidth(_table(grid, np.zeros(201)), 100, 0.0)


def test_kt_bandwidth_scan_oracle():
    rs = np.random.default_rng(1)
    grid = FrequencyGrid(0.5, 120)
    t = grid.positive_nodes
    n, c2 = 200, 1.0
    level = c2 * math.log(n) / n
    for _ in range(25):
        abs2 = np.where(rs.random(121) < 0.15, 0.5, 0.0) * (t < 30)
        expected = None
        for k in range(1, 121):
            if t[k] + math.log(n) > grid.t_max:
                break
            window = (t > t[k]) & (t < t[k] + math.log(n))
            if np.all(abs2[window] < level):
                expected = 1 / (2 * t[k])
                break
        if expected is None:
            with pytest.raises(NoQualifyingM):
                kernels.kt_bandwidth(_table(grid, abs2), n, c2)
        else:
            assert kernels.kt_bandwidth(_table(grid, abs2), n, c2) == pytest.approx(expected)


def test_flat_top_transfer():
    assert kernels.flat_top_transfer(0.0, 1.0) == 1.0
    assert kernels.flat_top_transfer(0.75, 1.0) == pytest.approx(0.5)
    assert kernels.flat_top_transfer(1.5, 1.0) == 0.0
    assert kernels.flat_top_transfer(0.5, 1.0) == 1.0
    np.testing.assert_allclose(kernels.flat_top_transfer(np.array([-3.0, 3.0]), 0.25), [0.5, 0.5])


@pytest.mark.parametrize("spec", [
    kernels.KernelSpec("gaussian", 0.3),
    kernels.KernelSpec("flat_top", 0.3),
    kernels.KernelSpec("optimal_oracle", dist=dists.comb()),
])
def test_transfer_normalized_and_even(spec):
    t = np.linspace(0, 20, 201)
    k = np.asarray(kernels.transfer(spec, t, 500))
    assert k[0] == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(np.asarray(kernels.transfer(spec, -t, 500)), k)
    assert np.all((k >= 0) & (k <= 1 + 1e-15))


def test_kernel_spec_validation():
    with pytest.raises(InvalidInput):
        kernels.KernelSpec("sinc", 1.0)
    with pytest.raises(InvalidInput):
        kernels.KernelSpec("gaussian", 0.0)
    with pytest.raises(InvalidInput):
        kernels.KernelSpec("flat_top")
    with pytest.raises(InvalidInput):
        kernels.KernelSpec("optimal_oracle")


def test_direct_and_spectral_gaussian_agree():
    s = gaussian_sample(100, seed=6)
    spec = kernels.KernelSpec("gaussian", kernels.kg_bandwidth(s))
    a = kernels.kernel_estimate(s, spec, (-5, 5, 401))
    b = kernels.kernel_estimate(s, spec, (-5, 5, 401), method="direct")
    assert np.max(np.abs(a.f - b.f)) < 1e-6
    assert np.all(b.f > 0)
    with pytest.raises(InvalidInput):
        kernels.kernel_estimate(s, kernels.KernelSpec("flat_top", 0.2), (-5, 5, 401), method="direct")


def test_direct_matches_naive():
    x = np.array([0.1, -0.7, 1.9, 0.4])
    h = np.array([0.3, 0.5, 0.2, 1.0])
    grid = np.linspace(-3, 4, 71)
    naive = np.mean([np.exp(-0.5 * ((grid - xi) / hi) ** 2) / (hi * math.sqrt(2 * math.pi))
                     for xi, hi in zip(x, h)], axis=0)
    np.testing.assert_allclose(kernels.gaussian_kde_direct(x, h, grid), naive, rtol=1e-13, atol=1e-300)


def test_optimal_oracle_limits():
    d = dists.gaussian()
    t = np.linspace(0, 5, 51)
    np.testing.assert_allclose(kernels.optimal_transfer(t, d, 10 ** 9), 1.0, atol=1e-9 * math.exp(25))
    np.testing.assert_allclose(kernels.optimal_transfer(t, d, 1), d.abs2_cf(t), rtol=1e-15)
    s = gaussian_sample(300)
    table = ecf.ecf_evaluate(s, ecf.default_grid(s))
    spec = kernels.KernelSpec("optimal_oracle", dist=d)
    phi = kernels.kernel_spectrum(table, spec, s.n)
    assert phi[table.grid.m] == 1
    assert np.all(np.abs(phi) <= np.abs(table.values) + 1e-15)


def test_flat_top_estimate_runs():
    s = gaussian_sample(500, seed=2)
    table = ecf.ecf_evaluate(s, ecf.default_grid(s))
    h = kernels.kt_bandwidth(table, s.n, 1.0)
    curve = kernels.kernel_estimate(s, kernels.KernelSpec("flat_top", h), (-8, 8, 801), ecf=table)
    assert curve.integral() == pytest.approx(1.0, abs=1e-3)


def test_adaptive_reduces_to_fixed():
    s = gaussian_sample(200)
    x = np.linspace(-4, 4, 101)
    h = 0.4
    np.testing.assert_allclose(kernels.gaussian_kde_direct(s.values, np.full(200, h), x),
                               kernels.gaussian_kde_direct(s.values, h, x), rtol=1e-15)


def test_adaptive_normalization():
    s = gaussian_sample(500, seed=4)
    curve = kernels.adaptive_estimate(s, (-15, 15, 3001))
    assert curve.integral() == pytest.approx(1.0, abs=1e-3)
    assert np.all(curve.f > 0)
    with pytest.raises(InvalidInput):
        kernels.adaptive_estimate(Sample(np.arange(5.0)), (-1, 5, 100))


def _sign_changes(f):
    d2 = np.diff(f, 2)
    return int(np.sum(np.signbit(d2[1:]) != np.signbit(d2[:-1])))


def test_adaptive_smoother_cauchy_tails():
    d = dists.cauchy()
    x = np.linspace(-30, 30, 6001)
    tail = np.abs(x) > 5
    wins = 0
    reps = 10
    for r in range(reps):
        s = d.sample(dists.replicate_rng(31, r, 1000), 1000)
        fixed = kernels.gaussian_kde_direct(s.values, kernels.kg_bandwidth(s), x)
        apt = kernels.gaussian_kde_direct(s.values, kernels.adaptive_bandwidths(s), x)
        wins += _sign_changes(apt[tail]) < _sign_changes(fixed[tail])
    assert wins >= 0.8 * reps


def test_pilot_underflow(monkeypatch):
    s = gaussian_sample(50)
    real = kernels.gaussian_kde_direct

    def fake(values, h, x):
        out = real(values, h, x)
        if np.ndim(h) == 0:
            out = out.copy()
            out[0] = 0.0
        return out

    monkeypatch.setattr(kernels, "gaussian_kde_direct", fake)
    with pytest.warns(PilotUnderflow):
        bw = kernels.adaptive_bandwidths(s)
    assert np.all(np.isfinite(bw)) and np.all(bw > 0)
