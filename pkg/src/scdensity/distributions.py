"""Reference densities with exact pdf, characteristic function and sampler.

Gaussian, Cauchy and the Marron-Wand smooth comb are the benchmark
targets. Box and chi-square(1) are provided as known-bad inputs: the first
has a non-integrable characteristic function, the second is not square
integrable.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``;
replicate ``r`` of a run with seed ``s`` and sample size ``n`` draws from
``SeedSequence([s, n, r])``, so replicates are independent of each other and
of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidInput
from .model import Distribution

SQRT_2PI = np.sqrt(2 * np.pi)
SQRT_PI = np.sqrt(np.pi)

# Marron & Wand (1992), "Exact mean integrated squared error", Ann. Statist.
# 20(2), Table 1, density #14 "Smooth Comb":
#   sum_{l=0}^{5} 2^(5-l)/63 * N((65 - 96 (1/2)^l)/21, (32/63)^2 / 2^(2l))
COMB_WEIGHTS = tuple(2.0 ** (5 - l) / 63 for l in range(6))
COMB_MEANS = tuple((65 - 96 * 0.5 ** l) / 21 for l in range(6))
COMB_SIGMAS = tuple((32 / 63) * 0.5 ** l for l in range(6))


def replicate_rng(seed: int, replicate: int = 0, n: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, n, replicate) cell."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(n), int(replicate)])))


class Gaussian(Distribution):
    name = "gaussian"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / SQRT_2PI

    def cdf(self, x):
        return special.ndtr(x)

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * t * t).astype(complex)

    def abs2_cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-t * t)

    def _draw(self, rng, n):
        return rng.standard_normal(n)

    def iqr(self):
        return float(2 * special.ndtri(0.75))

    def sq_integral(self):
        return 1 / (2 * SQRT_PI)

    def sq_tail(self, a, b):
        return float((special.erfc(b) + special.erfc(-a)) / (4 * SQRT_PI))


class Cauchy(Distribution):
    name = "cauchy"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return 1 / (np.pi * (1 + x * x))

    def cdf(self, x):
        return 0.5 + np.arctan(x) / np.pi

    def cf(self, t):
        return np.exp(-np.abs(np.asarray(t, dtype=float))).astype(complex)

    def abs2_cf(self, t):
        return np.exp(-2 * np.abs(np.asarray(t, dtype=float)))

    def _draw(self, rng, n):
        u = rng.random(n)
        return np.tan(np.pi * (u - 0.5))

    def iqr(self):
        return 2.0

    def sq_integral(self):
        return 1 / (2 * np.pi)

    @staticmethod
    def _upper_sq_tail(b):
        # integral_b^inf dx / (pi^2 (1+x^2)^2)
        return (np.arctan2(1.0, b) - b / (1 + b * b)) / (2 * np.pi ** 2)

    def sq_tail(self, a, b):
        return float(self._upper_sq_tail(b) + self._upper_sq_tail(-a))


@dataclass(frozen=True, repr=False)
class GaussianMixture(Distribution):
    weights: tuple
    means: tuple
    sigmas: tuple
    name: str = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not (len(self.weights) == len(self.means) == len(self.sigmas)):
            raise InvalidInput("mixture parameter lists differ in length")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise InvalidInput("mixture weights must be non-negative and sum to 1")
        if np.any(np.asarray(self.sigmas) <= 0):
            raise InvalidInput("mixture sigmas must be positive")

    def _arrays(self):
        return (np.asarray(self.weights), np.asarray(self.means), np.asarray(self.sigmas))

    def pdf(self, x):
        w, mu, s = self._arrays()
        x = np.asarray(x, dtype=float)[..., None]
        return (w * np.exp(-0.5 * ((x - mu) / s) ** 2) / (s * SQRT_2PI)).sum(axis=-1)

    def cdf(self, x):
        w, mu, s = self._arrays()
        x = np.asarray(x, dtype=float)[..., None]
        return (w * special.ndtr((x - mu) / s)).sum(axis=-1)

    def cf(self, t):
        w, mu, s = self._arrays()
        t = np.asarray(t, dtype=float)[..., None]
        return (w * np.exp(1j * t * mu - 0.5 * (s * t) ** 2)).sum(axis=-1)

    def _draw(self, rng, n):
        w, mu, s = self._arrays()
        comp = rng.choice(w.size, size=n, p=w)
        return mu[comp] + s[comp] * rng.standard_normal(n)

    def sq_integral(self):
        w, mu, s = self._arrays()
        var = s[:, None] ** 2 + s[None, :] ** 2
        d = mu[:, None] - mu[None, :]
        return float((w[:, None] * w[None, :] * np.exp(-0.5 * d * d / var) / np.sqrt(2 * np.pi * var)).sum())


class Box(Distribution):
    """Uniform density on ``[-1/2, 1/2]``."""

    name = "box"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 0.5, 1.0, 0.0)

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float) + 0.5, 0.0, 1.0)

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.sinc(t / (2 * np.pi)).astype(complex)

    def _draw(self, rng, n):
        return rng.random(n) - 0.5

    def support(self):
        return (-0.5, 0.5)

    def sq_integral(self):
        return 1.0

    def sq_tail(self, a, b):
        return float(max(0.0, min(a, 0.5) + 0.5) + max(0.0, 0.5 - max(b, -0.5)))


class ChiSquare1(Distribution):
    """Chi-square with one degree of freedom (unbounded at 0)."""

    name = "chi2_1"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(-0.5 * x) / np.sqrt(2 * np.pi * x)
        return np.where(x > 0, out, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, special.gammainc(0.5, 0.5 * np.maximum(x, 0)), 0.0)

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return (1 - 2j * t) ** -0.5

    def _draw(self, rng, n):
        z = rng.standard_normal(n)
        return z * z

    def support(self):
        return (0.0, np.inf)

    def sq_integral(self):
        return np.inf

    def sq_tail(self, a, b):
        return np.inf if a > 0 else super().sq_tail(a, b)


def gaussian() -> Gaussian:
    return Gaussian()


def cauchy() -> Cauchy:
    return Cauchy()


def comb() -> GaussianMixture:
    return GaussianMixture(COMB_WEIGHTS, COMB_MEANS, COMB_SIGMAS, name="comb")


def box() -> Box:
    return Box()


def chi2_1() -> ChiSquare1:
    return ChiSquare1()


_REGISTRY = {
    "gaussian": gaussian,
    "cauchy": cauchy,
    "comb": comb,
    "box": box,
    "chi2_1": chi2_1,
}


def get(name: str) -> Distribution:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise InvalidInput(f"unknown distribution {name!r}; choose from {sorted(_REGISTRY)}") from None


def names() -> list[str]:
    return list(_REGISTRY)
