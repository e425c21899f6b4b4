"""Theoretical MISE of convolution estimators and closed-form reference curves.

For an estimator whose spectrum is ``Delta(t) * kappa(t)``,

    MISE = (1/2pi) int [ |kappa|^2 (1 - |phi|^2) / N + |phi|^2 |1 - kappa|^2 ] dt.

Integrals over the half-line are done with adaptive quadrature on doubling
panels ``[0, s], [s, 2s], [2s, 4s], ...`` until the integrand is negligible.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import InvalidInput, InvalidN, QuadratureFailure, TailNotConverged
from .model import Distribution

SQRT_PI = math.sqrt(math.pi)

# the integrand counts as negligible below this level
TAIL_LEVEL = 1e-14
# doubling panels stop here; beyond it the integral is declared divergent
MAX_T = 1e12


def _quad(func, a, b, **kw) -> float:
    """``scipy.integrate.quad`` that raises instead of warning."""
    kw.setdefault("limit", 400)
    kw.setdefault("epsabs", 0.0)
    kw.setdefault("epsrel", 1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, full_output=1, **kw)
    value, err = out[0], out[1]
    if len(out) > 3 and not abs(err) <= 1e-8 * max(abs(value), 1e-300):
        raise QuadratureFailure(f"QuadratureFailure: {out[3]!s} on [{a}, {b}]")
    return float(value)


def half_line_integral(func: Callable[[float], float], scale: float = 1.0) -> float:
    """``int_0^inf func(t) dt`` for a non-negative, eventually decaying integrand."""
    if not scale > 0:
        raise InvalidInput(f"scale must be positive, got {scale}")
    total = _quad(func, 0.0, scale)
    a = scale
    while a < MAX_T:
        b = 2 * a
        part = _quad(func, a, b)
        total += part
        if abs(func(b)) < TAIL_LEVEL and abs(part) <= 1e-13 * abs(total) + 1e-18:
            return total
        a = b
    raise TailNotConverged(f"TailNotConverged: integrand still above {TAIL_LEVEL} at t = {a:.3g}")


def mise_fourier(kernel_transfer: Callable, dist: Distribution, n: int, scale: float = 1.0) -> float:
    """MISE of the estimator with transfer ``kernel_transfer`` for samples of size ``n``.

    ``kernel_transfer`` must be real and even in ``t``. Divergent cases, such
    as ``kappa = 1``, raise ``TailNotConverged``.
    """
    if n < 2:
        raise InvalidN(f"InvalidN: need n >= 2, got {n}")

    def integrand(t):
        p = float(dist.abs2_cf(t))
        k = float(kernel_transfer(t))
        return k * k * (1 - p) / n + p * (1 - k) ** 2

    return half_line_integral(integrand, scale) / math.pi


def min_error_numeric(dist: Distribution, n: int, scale: float = 1.0) -> float:
    """MISE of the optimal kernel, ``(K_N(0) - K_1(0)) / (N - 1)``.

    Evaluated as ``(1/2pi) int p (1 - p) / ((N - 1) p + 1) dt`` with
    ``p = |phi|^2``, which is the same quantity without the cancellation.
    """
    if n < 2:
        raise InvalidN(f"InvalidN: need n >= 2, got {n}")

    def integrand(t):
        p = float(dist.abs2_cf(t))
        return p * (1 - p) / ((n - 1) * p + 1)

    return half_line_integral(integrand, scale) / math.pi


def polylog_half(z: float) -> float:
    """``Li_{1/2}(z)`` for real ``z < 1`` from its integral representation

        Li_s(z) = z / Gamma(s) * int_0^inf u^(s-1) e^(-u) / (1 - z e^(-u)) du.

    The ``u^(-1/2)`` singularity on ``[0, 1]`` is handled by an algebraic
    quadrature weight.
    """
    z = float(z)
    if not z < 1:
        raise InvalidInput(f"polylog_half needs z < 1, got {z}")
    if z == 0:
        return 0.0

    def g(u):
        return math.exp(-u) / (1 - z * math.exp(-u))

    head = _quad(g, 0.0, 1.0, weight="alg", wvar=(-0.5, 0.0))
    # for z << 0 the integrand drops like a Fermi function near u = ln|z|
    knee = max(2.0, 2.0 * math.log1p(abs(z)))
    tail = _quad(lambda u: g(u) / math.sqrt(u), 1.0, knee)
    tail += _quad(lambda u: g(u) / math.sqrt(u), knee, np.inf)
    return z / SQRT_PI * (head + tail)


def gauss_opt_error_closed(n: int) -> float:
    """Optimal-kernel MISE for the standard Gaussian via ``Li_{1/2}(1 - N)``."""
    if n < 2:
        raise InvalidN(f"InvalidN: need n >= 2, got {n}")
    li = polylog_half(1.0 - n)
    return (-n / (n - 1) * li - 1.0) / (2 * SQRT_PI * (n - 1))


def cauchy_opt_error_closed(n: int) -> float:
    """Optimal-kernel MISE for the standard Cauchy density."""
    if n < 2:
        raise InvalidN(f"InvalidN: need n >= 2, got {n}")
    return (n * math.log(n) / (2 * math.pi * (n - 1)) - 1 / (2 * math.pi)) / (n - 1)


def gauss_kg_error_closed(n: int, h: float) -> float:
    """Exact MISE of the Gaussian KDE with bandwidth ``h`` on Gaussian data."""
    if not h > 0:
        raise InvalidInput(f"bandwidth must be positive, got {h}")
    if n < 2:
        raise InvalidN(f"InvalidN: need n >= 2, got {n}")
    r1 = 1 / math.sqrt(1 + h * h)
    return (1 / (n * h) - r1 / n + 1 - 2 / math.sqrt(1 + h * h / 2) + r1) / (2 * SQRT_PI)


def cauchy_kg_error_closed(n: int, h: float) -> float:
    """Exact MISE of the Gaussian KDE with bandwidth ``h`` on Cauchy data.

    ``exp(x^2) erfc(x)`` is evaluated as ``erfcx(x)`` so small ``h`` stays finite.
    """
    if not h > 0:
        raise InvalidInput(f"bandwidth must be positive, got {h}")
    if n < 1:
        raise InvalidN(f"InvalidN: need n >= 1, got {n}")
    return (1 / (2 * SQRT_PI * n * h) + 1 / (2 * math.pi)
            + (n - 1) / (2 * SQRT_PI * n * h) * special.erfcx(1 / h)
            - math.sqrt(2) / (SQRT_PI * h) * special.erfcx(math.sqrt(2) / h))


def gauss_ml_error(n: int) -> float:
    """MISE of the maximum-likelihood Gaussian fit, ``7 / (16 sqrt(pi) n)``."""
    if n < 1:
        raise InvalidN(f"InvalidN: need n >= 1, got {n}")
    return 7 / (16 * SQRT_PI * n)


def rule_of_thumb_h(dist: Distribution, n: int) -> float:
    """``0.79 * IQR * n^(-1/5)`` with the population IQR."""
    return 0.79 * dist.iqr() * n ** -0.2


BOUNDS = ("opt", "kg", "ml")


def reference_value(dist: Distribution, bound: str, n: int) -> float:
    """Reference MISE curve value for one ``n``.

    ``opt`` uses the closed forms where they exist and quadrature otherwise;
    ``kg`` is the Gaussian KDE at the rule-of-thumb bandwidth; ``ml`` is only
    defined for the Gaussian.
    """
    name = getattr(dist, "name", "")
    if bound == "opt":
        if name == "gaussian":
            return gauss_opt_error_closed(n)
        if name == "cauchy":
            return cauchy_opt_error_closed(n)
        return min_error_numeric(dist, n)
    if bound == "kg":
        h = rule_of_thumb_h(dist, n)
        if name == "gaussian":
            return gauss_kg_error_closed(n, h)
        if name == "cauchy":
            return cauchy_kg_error_closed(n, h)
        return mise_fourier(lambda t: math.exp(-0.5 * (h * t) ** 2), dist, n)
    if bound == "ml":
        if name != "gaussian":
            raise InvalidInput("the ML reference is only defined for the Gaussian")
        return gauss_ml_error(n)
    raise InvalidInput(f"unknown bound {bound!r}; choose from {BOUNDS}")
