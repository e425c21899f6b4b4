"""Core value types shared across the package.

All types validate their invariants on construction and hold read-only
numpy arrays, so instances can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInput, NonFiniteValue, TooFewPoints

# Rounding allowance for |Delta| <= 1 and related amplitude bounds.
AMPLITUDE_SLACK = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sample:
    """An ordered set of finite observations, at least two of them."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size < 2:
            raise TooFewPoints(f"TooFewPoints: need at least 2 values, got {vals.size}")
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise NonFiniteValue(int(bad[0]), vals[bad[0]])
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def range(self) -> float:
        return float(self.values.max() - self.values.min())

    def std(self, ddof: int = 1) -> float:
        return float(np.std(self.values, ddof=ddof))

    def iqr(self) -> float:
        """Interquartile range with linear interpolation between order
        statistics (Hyndman-Fan type 7, numpy's default).

        For ``[1, 2, 3, 4]`` this gives ``3.25 - 1.75 = 1.5``.
        """
        q75, q25 = np.percentile(self.values, [75, 25], method="linear")
        return float(q75 - q25)

    def __len__(self):
        return self.n


def validate_sample(raw: Sequence[float]) -> Sample:
    """Build a :class:`Sample`, raising ``TooFewPoints`` or ``NonFiniteValue``."""
    return Sample(np.asarray(raw, dtype=float))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform symmetric grid ``t_k = k * dt`` for ``k = -m..m``."""

    dt: float
    m: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidInput(f"grid spacing must be positive, got {self.dt}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidInput(f"grid half-size must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def size(self) -> int:
        return 2 * self.m + 1

    @property
    def t_max(self) -> float:
        return self.m * self.dt

    @property
    def zero_index(self) -> int:
        return self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1) * self.dt

    @property
    def positive_nodes(self) -> np.ndarray:
        """Nodes ``t_0 .. t_m`` (including zero)."""
        return np.arange(self.m + 1) * self.dt


def _check_hermitian(values: np.ndarray, m: int, what: str):
    if not np.array_equal(values[:m][::-1], np.conj(values[m + 1:])):
        raise InvalidInput(f"{what} is not Hermitian-symmetric")


@dataclass(frozen=True)
class EcfTable:
    """Empirical characteristic function sampled on a :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.size,):
            raise InvalidInput(f"expected {self.grid.size} values, got shape {vals.shape}")
        if vals[self.grid.m] != 1:
            raise InvalidInput("ECF must equal 1 at t = 0")
        _check_hermitian(vals, self.grid.m, "ECF")
        if np.any(np.abs(vals) > 1 + AMPLITUDE_SLACK):
            raise InvalidInput("ECF modulus exceeds 1")
        object.__setattr__(self, "values", _frozen(vals, complex))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def abs2(self) -> np.ndarray:
        return self.values.real ** 2 + self.values.imag ** 2

    def half(self) -> np.ndarray:
        """Values at ``t_0 .. t_m``."""
        return self.values[self.grid.m:]


@dataclass(frozen=True)
class SpectralEstimate:
    """Filtered spectrum of a density estimate.

    ``accepted`` marks the frequencies that contribute; everything else is
    exactly zero. ``n`` and ``sample`` are kept so moments can be derived
    without re-reading the data.
    """

    grid: FrequencyGrid
    values: np.ndarray
    accepted: np.ndarray
    t_star: float
    n: int
    sample: Optional[Sample] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        m = self.grid.m
        vals = np.asarray(self.values, dtype=complex)
        mask = np.asarray(self.accepted, dtype=bool)
        if vals.shape != (self.grid.size,) or mask.shape != (self.grid.size,):
            raise InvalidInput("spectral values and mask must match the grid size")
        if not (self.t_star > 0):
            raise InvalidInput(f"t_star must be positive, got {self.t_star}")
        if not mask[m]:
            raise InvalidInput("t = 0 must be accepted")
        if not np.array_equal(mask, mask[::-1]):
            raise InvalidInput("accepted mask must be symmetric")
        if np.any(vals[~mask] != 0):
            raise InvalidInput("values must vanish outside the accepted set")
        if abs(vals[m] - 1) > AMPLITUDE_SLACK:
            raise InvalidInput("spectral estimate must equal 1 at t = 0")
        _check_hermitian(vals, m, "spectral estimate")
        object.__setattr__(self, "values", _frozen(vals, complex))
        object.__setattr__(self, "accepted", _frozen(mask, bool))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def accepted_count(self) -> int:
        return int(self.accepted.sum())


@dataclass(frozen=True)
class DensityCurve:
    """Density values on a uniform, strictly increasing x-grid."""

    x: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or x.size < 2:
            raise InvalidInput("x and f must be 1-D arrays of equal length >= 2")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise InvalidInput("x-grid must be strictly increasing")
        if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            raise InvalidInput("x-grid must be uniform")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "f", _frozen(f))

    @classmethod
    def on_grid(cls, x_min: float, x_max: float, count: int, f) -> "DensityCurve":
        return cls(np.linspace(x_min, x_max, count), f)

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.f])

    def integral(self) -> float:
        return float(np.trapezoid(self.f, self.x))

    def negative_mass(self) -> float:
        return float(np.trapezoid(np.maximum(-self.f, 0.0), self.x))


def x_grid(x_min: float, x_max: float, count: int) -> np.ndarray:
    if not (x_min < x_max):
        raise InvalidInput(f"need x_min < x_max, got [{x_min}, {x_max}]")
    if count < 2:
        raise InvalidInput("x-grid needs at least 2 points")
    return np.linspace(x_min, x_max, int(count))


class Distribution:
    """A reference density with known pdf and characteristic function.

    Subclasses implement ``pdf``, ``cdf``, ``cf`` and ``_draw``. The default
    ``sq_integral``/``sq_tail`` use quadrature; subclasses override them when
    a closed form exists.
    """

    name: str = "distribution"

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def cf(self, t):
        raise NotImplementedError

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> Sample:
        return Sample(self._draw(rng, int(n)))

    def abs2_cf(self, t):
        c = self.cf(t)
        return c.real ** 2 + c.imag ** 2

    def quantile(self, p: float) -> float:
        from scipy.optimize import brentq

        lo, hi = -1.0, 1.0
        while self.cdf(lo) > p:
            lo *= 2
        while self.cdf(hi) < p:
            hi *= 2
        return float(brentq(lambda x: self.cdf(x) - p, lo, hi, xtol=1e-14, rtol=1e-14))

    def iqr(self) -> float:
        return self.quantile(0.75) - self.quantile(0.25)

    def support(self) -> tuple[float, float]:
        return (-np.inf, np.inf)

    def sq_integral(self) -> float:
        """Integral of pdf squared over the real line."""
        from scipy.integrate import quad

        lo, hi = self.support()
        return float(quad(lambda x: self.pdf(x) ** 2, lo, hi, limit=200)[0])

    def sq_tail(self, a: float, b: float) -> float:
        """Integral of pdf squared outside ``[a, b]``."""
        from scipy.integrate import quad

        lo, hi = self.support()
        total = 0.0
        if a > lo:
            total += quad(lambda x: self.pdf(x) ** 2, lo, a, limit=200)[0]
        if b < hi:
            total += quad(lambda x: self.pdf(x) ** 2, b, hi, limit=200)[0]
        return float(total)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


@dataclass(frozen=True)
class BenchmarkRecord:
    distribution: str
    estimator: str
    n: int
    mise_mean: float
    mise_stderr: float
    replicates: int
    seed: int

    def __post_init__(self):
        if self.mise_mean < 0 or self.mise_stderr < 0:
            raise InvalidInput("MISE mean and stderr must be non-negative")
        if self.replicates < 2:
            raise InvalidInput("a benchmark record needs at least 2 replicates")
