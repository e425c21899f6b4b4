"""Baseline kernel estimators and the optimal-kernel oracle.

Fixed kernels are applied in frequency space, ``phi_hat = Delta * kappa``,
and inverse-transformed like the self-consistent estimate. The Gaussian
kernel also has a direct real-space route, used for heavy-tailed data and
as an independent check of the spectral one. The adaptive estimator is
real-space only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ecf as _ecf
from .errors import BandwidthFallbackWarning, InvalidInput, NoQualifyingM, PilotUnderflow, ZeroIQR
from .model import DensityCurve, Distribution, EcfTable, FrequencyGrid, Sample, x_grid
from .sc import inverse_transform

KINDS = ("gaussian", "flat_top", "optimal_oracle")
# c^2 values averaged over for the flat-top bandwidth rule
KT_C2_VALUES = (0.25, 0.5, 1.0, 2.0, 4.0)
# Gaussian kernels are cut at this many bandwidths (exp(-50) ~ 2e-22)
_CUTOFF = 10.0


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    h: Optional[float] = None
    dist: Optional[Distribution] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown kernel kind {self.kind!r}")
        if self.kind == "optimal_oracle":
            if self.dist is None:
                raise InvalidInput("optimal_oracle needs a reference distribution")
        elif self.h is None or not self.h > 0:
            raise InvalidInput(f"bandwidth must be positive, got {self.h}")


def kg_bandwidth(sample: Sample) -> float:
    """Rule of thumb ``0.79 * IQR * n^(-1/5)``.

    With a zero IQR this falls back to ``1.06 * sd * n^(-1/5)`` and warns.
    """
    iq = sample.iqr()
    scale = sample.n ** -0.2
    if iq > 0:
        return 0.79 * iq * scale
    sd = sample.std()
    if sd > 0:
        warnings.warn("zero interquartile range; bandwidth from the standard deviation",
                      BandwidthFallbackWarning, stacklevel=2)
        return 1.06 * sd * scale
    raise ZeroIQR("ZeroIQR: interquartile range and standard deviation are both zero")


def kt_bandwidth(ecf: EcfTable, n: int, c2: float = 1.0) -> float:
    """Flat-top bandwidth ``h = 1 / (2 m)``.

    ``m`` is the smallest positive grid node such that ``|Delta|^2`` stays
    below ``c2 * ln(n) / n`` at every node in ``(m, m + ln n)``.
    """
    if n < 3:
        raise InvalidInput(f"flat-top rule needs n >= 3, got {n}")
    if not c2 > 0:
        raise InvalidInput(f"c2 must be positive, got {c2}")
    grid = ecf.grid
    level = c2 * math.log(n) / n
    window = math.log(n)
    t = grid.positive_nodes
    offending = np.flatnonzero(ecf.abs2[grid.m:] >= level)
    for k in range(1, grid.m + 1):
        end = t[k] + window
        if end > grid.t_max:
            break
        # offending nodes strictly inside (t_k, t_k + window)
        lo = np.searchsorted(offending, k, side="right")
        if lo >= offending.size or t[offending[lo]] >= end:
            return 1.0 / (2.0 * t[k])
    raise NoQualifyingM("NoQualifyingM: grid too short for the flat-top bandwidth rule")


def flat_top_transfer(t, h: float):
    """Trapezoid ``lambda(h t)``: 1 up to ``|s| = 1/2``, linear to 0 at ``|s| = 1``."""
    s = np.abs(np.asarray(t, dtype=float) * h)
    out = np.clip(2.0 * (1.0 - s), 0.0, 1.0)
    return out if out.ndim else float(out)


def gaussian_transfer(t, h: float):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * (h * t) ** 2)


def optimal_transfer(t, dist: Distribution, n: int):
    """``N / (N - 1 + |phi|^-2)``, written to stay finite where ``phi`` underflows."""
    p2 = dist.abs2_cf(t)
    return n * p2 / ((n - 1) * p2 + 1.0)


def transfer(spec: KernelSpec, t, n: int):
    if spec.kind == "gaussian":
        return gaussian_transfer(t, spec.h)
    if spec.kind == "flat_top":
        return flat_top_transfer(t, spec.h)
    return optimal_transfer(t, spec.dist, n)


def kernel_spectrum(ecf: EcfTable, spec: KernelSpec, n: int) -> np.ndarray:
    kappa = np.asarray(transfer(spec, ecf.grid.positive_nodes, n), dtype=float)
    half = ecf.half() * kappa
    half[0] = 1.0
    return np.concatenate([np.conj(half[:0:-1]), half])


def gaussian_kde_direct(values: np.ndarray, h, x: np.ndarray) -> np.ndarray:
    """``(1/N) sum_j K_{h_j}(x - X_j)`` by direct summation.

    ``h`` is a scalar or one bandwidth per data point. Points farther than
    ten bandwidths from a chunk of ``x`` are skipped.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    xs = values[order]
    hs = np.broadcast_to(np.asarray(h, dtype=float), values.shape)[order]
    reach = _CUTOFF * float(hs.max())
    out = np.zeros(x.shape, dtype=float)
    chunk = 256
    for start in range(0, x.size, chunk):
        xc = x[start:start + chunk]
        lo = np.searchsorted(xs, xc.min() - reach, side="left")
        hi = np.searchsorted(xs, xc.max() + reach, side="right")
        if hi <= lo:
            continue
        hj = hs[lo:hi]
        z = (xc[:, None] - xs[lo:hi]) / hj
        out[start:start + chunk] = (np.exp(-0.5 * z * z) / hj).sum(axis=1)
    return out / (values.size * math.sqrt(2 * math.pi))


def kernel_estimate(
    sample: Sample,
    spec: KernelSpec,
    x_range,
    grid: Optional[FrequencyGrid] = None,
    ecf: Optional[EcfTable] = None,
    method: str = "spectral",
) -> DensityCurve:
    """Evaluate a fixed-kernel estimate on ``(x_min, x_max, count)``.

    ``method="direct"`` sums Gaussian kernels in real space (Gaussian kind
    only). The spectral route reuses ``ecf`` when given, otherwise tabulates
    the ECF on ``grid`` (default grid when omitted).
    """
    x_min, x_max, count = x_range
    x = x_grid(x_min, x_max, count)
    if method == "direct":
        if spec.kind != "gaussian":
            raise InvalidInput("direct evaluation is only available for the Gaussian kernel")
        return DensityCurve(x, gaussian_kde_direct(sample.values, spec.h, x))
    if method != "spectral":
        raise InvalidInput(f"unknown method {method!r}")
    if ecf is None:
        ecf = _ecf.ecf_evaluate(sample, grid if grid is not None else _ecf.default_grid(sample))
    return DensityCurve(x, inverse_transform(ecf.grid, kernel_spectrum(ecf, spec, sample.n), x))


def adaptive_bandwidths(sample: Sample, alpha: float = 0.5) -> np.ndarray:
    """Per-point bandwidths ``h * (pilot(X_j) / g)^(-alpha)``.

    The pilot is the fixed-bandwidth Gaussian KDE and ``g`` the geometric
    mean of its values at the data points.
    """
    h = kg_bandwidth(sample)
    pilot = gaussian_kde_direct(sample.values, h, sample.values)
    if np.any(pilot <= 1e-300):
        warnings.warn("pilot density underflows at some data points; floored at 1e-300",
                      PilotUnderflow, stacklevel=2)
        pilot = np.maximum(pilot, 1e-300)
    log_pilot = np.log(pilot)
    lam = np.exp(-alpha * (log_pilot - log_pilot.mean()))
    return h * lam


def adaptive_estimate(sample: Sample, x_range, alpha: float = 0.5) -> DensityCurve:
    if sample.n < 10:
        raise InvalidInput(f"adaptive estimate needs n >= 10, got {sample.n}")
    x_min, x_max, count = x_range
    x = x_grid(x_min, x_max, count)
    return DensityCurve(x, gaussian_kde_direct(sample.values, adaptive_bandwidths(sample, alpha), x))
