"""Self-consistent density estimate.

The estimate keeps, at every accepted frequency, the stable non-zero fixed
point of the map ``phi -> N*Delta / (N - 1 + |phi|^-2)`` and zeroes the rest.
Frequencies qualify when ``|Delta|^2`` clears ``4(N-1)/N^2``; the band is
cut at ``t*``, the largest frequency for which at least ``half_fraction`` of
the grid nodes in ``(0, t*]`` qualify.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ecf as _ecf
from .errors import (
    ConvergenceWarning,
    DegenerateSampleWarning,
    ImaginaryResidue,
    InvalidInput,
    InvalidN,
    LatticeWarning,
    NoSolution,
    OverrideOutOfGrid,
    VarianceUndefined,
)
from .model import DensityCurve, EcfTable, FrequencyGrid, Sample, SpectralEstimate, x_grid

IMAG_TOL = 1e-8
# Share of accepted spectral L1 mass allowed in the outer half of the band
# before the spectrum is flagged as too slowly decaying. Non-integrable cfs
# (box, chi-square(1)) trip it, and so does structure finer than the sample
# resolves (the smooth comb below n ~ 1e5).
OUTER_BAND_WARN = 0.025
MAX_POINTS_PER_SIDE = 1 << 15
MIN_X_COUNT = 16
DEFAULT_X_COUNT = 512
MAX_AUTO_X_COUNT = 1 << 15


@dataclass(frozen=True)
class ScConfig:
    half_fraction: float = 0.5
    tstar_override: Optional[float] = None
    correct_negative: bool = False

    def __post_init__(self):
        if not (0 < self.half_fraction <= 1):
            raise InvalidInput(f"half_fraction must lie in (0, 1], got {self.half_fraction}")
        if self.tstar_override is not None and not self.tstar_override > 0:
            raise InvalidInput(f"tstar_override must be positive, got {self.tstar_override}")


def threshold(n: int) -> float:
    """Minimum ``|Delta|^2`` for a non-zero fixed point: ``4(n-1)/n^2``."""
    if n < 2:
        raise InvalidN(f"InvalidN: need n >= 2, got {n}")
    return 4.0 * (n - 1) / (n * n)


def _roots(delta, n: int, sign: float) -> np.ndarray:
    delta = np.asarray(delta, dtype=complex)
    a2 = delta.real ** 2 + delta.imag ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = 1.0 - threshold(n) / a2
    root = np.sqrt(np.maximum(arg, 0.0))
    root = np.where(a2 > 0, root, 0.0)
    return n * delta / (2.0 * (n - 1)) * (1.0 + sign * root)


def phi_plus(delta, n: int) -> np.ndarray:
    """Stable fixed point, evaluated pointwise (square-root argument clamped at 0)."""
    return _roots(delta, n, +1.0)


def phi_minus(delta, n: int) -> np.ndarray:
    """Unstable fixed point, the separatrix between phi_plus and 0."""
    return _roots(delta, n, -1.0)


def self_consistent_map(phi, delta, n: int) -> np.ndarray:
    """One step of ``phi -> N Delta / (N - 1 + |phi|^-2)``, with 0 mapping to 0."""
    p2 = np.abs(phi) ** 2
    return n * np.asarray(delta) * p2 / ((n - 1) * p2 + 1.0)


def _ecf_values(ecf) -> np.ndarray:
    return np.asarray(ecf.values if isinstance(ecf, EcfTable) else ecf, dtype=complex)


def select_accepted(ecf: EcfTable, n: int, config: ScConfig = ScConfig()):
    """Return ``(mask, t_star)`` for ``A = B intersect [-t*, t*]``.

    The node count on ``(0, t*]`` is used as the measure of the interval, so
    with a passing band ``|t| <= 2`` on spacing 0.1 the cutoff is exactly 4.
    If not even the first positive node passes, ``A = {0}`` and ``t* = dt``.
    """
    grid = ecf.grid
    m = grid.m
    passing = ecf.abs2[m:] >= threshold(n)
    passing[0] = True
    if config.tstar_override is not None:
        t_o = config.tstar_override
        if t_o > grid.t_max * (1 + 1e-12):
            raise OverrideOutOfGrid(
                f"OverrideOutOfGrid: t* = {t_o} exceeds grid extent {grid.t_max}")
        k_star = min(m, int(math.floor(t_o / grid.dt + 1e-9)))
        t_star = float(t_o)
    else:
        counts = np.cumsum(passing[1:])
        nodes = np.arange(1, m + 1)
        ok = np.flatnonzero(counts >= config.half_fraction * nodes)
        k_star = int(ok[-1]) + 1 if ok.size else 0
        t_star = max(k_star, 1) * grid.dt
    half = passing.copy()
    half[k_star + 1:] = False
    mask = np.concatenate([half[:0:-1], half])
    return mask, t_star


def sc_spectral(ecf: EcfTable, n: int, config: ScConfig = ScConfig(), sample: Optional[Sample] = None) -> SpectralEstimate:
    mask, t_star = select_accepted(ecf, n, config)
    m = ecf.grid.m
    half = np.where(mask[m:], phi_plus(ecf.half(), n), 0.0)
    half[0] = 1.0
    values = np.concatenate([np.conj(half[:0:-1]), half])
    return SpectralEstimate(ecf.grid, values, mask, t_star, n, sample)


def inverse_transform(grid: FrequencyGrid, values, x) -> np.ndarray:
    """Rectangle-rule inverse Fourier transform ``(dt/2pi) sum e^{-itx} phi(t)``.

    Raises ``ImaginaryResidue`` if the imaginary part of the result exceeds
    ``IMAG_TOL`` anywhere, i.e. when ``values`` are not Hermitian.
    """
    values = np.asarray(values, dtype=complex)
    x = np.asarray(x, dtype=float)
    m = grid.m
    scale = grid.dt / (2 * math.pi)
    pos = values[m + 1:]
    neg = values[:m][::-1]
    # Hermitian pairs cancel exactly; only broken pairs feed the residue
    asym = pos - np.conj(neg)
    bound = scale * (abs(values[m].imag) + np.abs(asym).sum())
    k = np.flatnonzero((pos != 0) | (neg != 0))
    t = (k + 1) * grid.dt
    sym = 0.5 * (pos[k] + np.conj(neg[k]))
    re_part = np.full(x.shape, values[m].real)
    im_part = np.full(x.shape, values[m].imag) if bound >= IMAG_TOL else None
    rows = max(1, (1 << 21) // max(k.size, 1))
    for start in range(0, x.size, rows):
        sl = slice(start, start + rows)
        arg = np.multiply.outer(x[sl], t)
        c, s = np.cos(arg), np.sin(arg)
        re_part[sl] += 2.0 * (c * sym.real + s * sym.imag).sum(axis=1)
        if im_part is not None:
            d = pos[k] + neg[k]
            e = pos[k] - neg[k]
            im_part[sl] += (c * d.imag - s * e.real).sum(axis=1)
    if im_part is not None:
        worst = scale * float(np.max(np.abs(im_part)))
        if worst >= IMAG_TOL:
            raise ImaginaryResidue(f"ImaginaryResidue: max |Im f| = {worst:.3g}")
    return scale * re_part


def sc_density(spec: SpectralEstimate, x_range) -> DensityCurve:
    """Inverse-transform the accepted spectrum onto ``(x_min, x_max, count)``."""
    x_min, x_max, count = x_range
    if count < MIN_X_COUNT:
        raise InvalidInput(f"x count must be >= {MIN_X_COUNT}, got {count}")
    x = x_grid(x_min, x_max, count)
    return DensityCurve(x, inverse_transform(spec.grid, spec.values, x))


def default_x_range(sample: Sample) -> tuple[float, float]:
    r = sample.range or 1.0
    lo, hi = float(sample.values.min()), float(sample.values.max())
    return lo - 0.2 * r, hi + 0.2 * r


def auto_x_count(width: float, t_star: float) -> int:
    """Enough points to resolve the band-limited estimate (4 per half-period)."""
    need = int(math.ceil(4 * width * t_star / math.pi)) + 1
    return int(min(max(DEFAULT_X_COUNT, need), MAX_AUTO_X_COUNT))


def lattice_spacing(sample: Sample, tol: float = 1e-9, max_divisor: int = 12) -> Optional[float]:
    """Common spacing of the data if every gap is an integer multiple of it.

    Offsets from the smallest value must sit within ``tol`` (relative to the
    data magnitude) of a multiple of the spacing. Spacings too fine to be
    told apart from rounding are never reported.
    """
    u = np.unique(sample.values)
    if u.size < 2:
        return None
    g = np.diff(u).min()
    offsets = u - u[0]
    atol = tol * max(1.0, float(np.abs(u).max()))
    for d in range(1, max_divisor + 1):
        s = g / d
        if atol > 1e-3 * s:
            break
        if np.all(np.abs(offsets - np.round(offsets / s) * s) <= atol):
            return float(s)
    return None


def _band_at_edge(spec: SpectralEstimate) -> bool:
    return spec.t_star >= spec.grid.t_max * (1 - 1e-12)


def outer_band_fraction(spec: SpectralEstimate) -> float:
    """Share of ``sum |phi|`` over accepted ``t >= 0`` lying in ``(t*/2, t*]``."""
    m = spec.grid.m
    a = np.abs(spec.values[m:])
    outer = spec.grid.positive_nodes > 0.5 * spec.t_star
    return float(a[outer].sum() / a.sum())


def sc_estimate(
    sample: Sample,
    config: ScConfig = ScConfig(),
    grid: Optional[FrequencyGrid] = None,
    x_range: Optional[tuple[float, float]] = None,
    x_count: Optional[int] = None,
    points_per_side: int = _ecf.DEFAULT_POINTS_PER_SIDE,
    padding: float = _ecf.DEFAULT_PADDING,
    max_points_per_side: int = MAX_POINTS_PER_SIDE,
):
    """Full pipeline: grid, ECF, filtered spectrum, real-space curve.

    Returns ``(curve, spectral_estimate, diagnostics)``. Diagnostics hold
    ``n, dt, t_star, threshold, accepted_count, negative_mass`` and a list of
    warning messages (also emitted through :mod:`warnings`).
    """
    notes = []

    def note(msg, category):
        notes.append(msg)
        warnings.warn(msg, category, stacklevel=3)

    n = sample.n
    # periodic spectra never decay, so widening the grid cannot help
    periodic = True
    if sample.range == 0:
        note("all sample values are identical; the estimate is the transform of the "
             "full-band indicator and does not approximate any density", DegenerateSampleWarning)
    elif lattice_spacing(sample) is not None:
        note("data lie on a lattice; their spectrum is periodic and frequency filtering "
             "is not meaningful (a histogram of the values is usually enough)", LatticeWarning)
    else:
        periodic = False

    if grid is None:
        # the default spacing is fixed by the data range; widen the band
        # until the accepted set stops at an interior node
        grid = _ecf.default_grid(sample, points_per_side, padding)
        table = _ecf.ecf_evaluate(sample, grid)
        while True:
            spec = sc_spectral(table, n, config, sample)
            if (periodic or config.tstar_override is not None
                    or not _band_at_edge(spec) or 2 * grid.m > max_points_per_side):
                break
            grid, table = _ecf.extend_table(sample, table, 2 * grid.m)
    else:
        spec = sc_spectral(_ecf.ecf_evaluate(sample, grid), n, config, sample)

    if config.tstar_override is None:
        if _band_at_edge(spec):
            note(f"accepted band reaches the grid edge (t* = {spec.t_star:.4g}); "
                 "the estimate has not converged on this grid", ConvergenceWarning)
        outer = outer_band_fraction(spec)
        if outer > OUTER_BAND_WARN:
            note(f"{outer:.1%} of the accepted spectrum lies in the outer half of the band; "
                 "the spectrum decays too slowly for the estimate to be near convergence "
                 "(non-integrable characteristic function, or structure finer than "
                 "the sample resolves)", ConvergenceWarning)

    if x_range is not None:
        lo, hi = x_range
    elif periodic:
        # the estimate does not decay away from the data; show one full period
        mid = 0.5 * (float(sample.values.min()) + float(sample.values.max()))
        lo, hi = mid - math.pi / grid.dt, mid + math.pi / grid.dt
    else:
        lo, hi = default_x_range(sample)
    count = x_count if x_count is not None else auto_x_count(hi - lo, spec.t_star)
    curve = sc_density(spec, (lo, hi, count))
    negative_mass = curve.negative_mass()
    if config.correct_negative and negative_mass > 0:
        curve = correct_negative(curve)

    diagnostics = {
        "n": n,
        "dt": grid.dt,
        "t_star": spec.t_star,
        "threshold": threshold(n),
        "accepted_count": spec.accepted_count,
        "negative_mass": negative_mass,
        "warnings": notes,
    }
    return curve, spec, diagnostics


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    spectral_mean: float
    spectral_variance: float


def _require_sample(spec: SpectralEstimate) -> Sample:
    if spec.sample is None:
        raise InvalidInput("spectral estimate carries no sample; moments need the data")
    return spec.sample


def sc_mean(spec: SpectralEstimate) -> float:
    return _require_sample(spec).mean


def sc_moments(spec: SpectralEstimate) -> Moments:
    """Mean and variance of the estimate, analytic and by finite differences.

    The analytic values are the sample mean and ``sum (X - mean)^2 / (N - 2)``.
    The spectral checks differentiate the stable fixed point at ``t = 0``:
    ``mean = -i dphi/dt`` and ``var = -1/2 d^2|phi|^2/dt^2``, by central
    differences with ``Delta`` evaluated directly from the data.
    The mean difference quotient is Richardson-extrapolated.
    """
    sample = _require_sample(spec)
    n = sample.n
    if n <= 2:
        raise VarianceUndefined(f"VarianceUndefined: need n >= 3, got {n}")
    x = sample.values
    mean = float(np.mean(x))
    variance = float(np.sum((x - mean) ** 2) / (n - 2))

    sd = float(np.std(x)) or 1.0
    h_mean = 1e-4 / (sd + abs(mean))
    h_var = 1e-4 / sd
    # central differences at h and 2h, Richardson-combined to O(h^4)
    p = phi_plus(_ecf.ecf_at(sample, [h_mean, -h_mean, 2 * h_mean, -2 * h_mean]), n)
    d1 = (p[0] - p[1]) / (2 * h_mean)
    d2 = (p[2] - p[3]) / (4 * h_mean)
    spectral_mean = float(((4 * d1 - d2) / 3 * -1j).real)
    pv, = phi_plus(_ecf.ecf_at(sample, [h_var]), n)
    spectral_variance = float((1.0 - abs(pv) ** 2) / h_var ** 2)
    return Moments(mean, variance, spectral_mean, spectral_variance)


def correct_negative(curve: DensityCurve, tol: float = 1e-9) -> DensityCurve:
    """Shift the curve down by ``c >= 0`` and clip at zero so it integrates to 1.

    ``c`` is found by bisection on ``integral(max(f - c, 0)) = 1``.
    """
    total = curve.integral()
    if abs(total - 1) > 0.05:
        raise InvalidInput(f"curve integrates to {total:.4g}; expected about 1")
    f = curve.f
    if f.min() >= 0 and total <= 1:
        return curve

    def mass(c):
        return float(np.trapezoid(np.maximum(f - c, 0.0), curve.x))

    if mass(0.0) < 1 - 1e-6:
        raise NoSolution("NoSolution: positive part holds less than unit mass; x-range truncated?")
    lo, hi = 0.0, float(f.max())
    if mass(lo) <= 1:
        return DensityCurve(curve.x, np.maximum(f, 0.0))
    # mass(c) is decreasing and 1-Lipschitz per unit width, so shrinking the
    # bracket below tol / width pins the integral to within tol
    width = curve.x_max - curve.x_min
    while hi - lo > tol / width * 1e-3 and hi - lo > 1e-16 * hi:
        mid = 0.5 * (lo + hi)
        if mass(mid) > 1:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    return DensityCurve(curve.x, np.maximum(f - c, 0.0))


def iterate_map(ecf, n: int, phi0, max_iter: int = 200, tol: float = 1e-12):
    """Iterate the self-consistent map pointwise from ``phi0``.

    Each frequency stops once a step moves it by less than ``tol``. Returns
    ``(phi, iterations, converged)``; frequencies that hit ``max_iter`` are
    reported as not converged rather than raising.
    """
    delta = _ecf_values(ecf)
    phi = np.array(phi0, dtype=complex, copy=True)
    if phi.shape != delta.shape:
        raise InvalidInput("phi0 must match the ECF table shape")
    if not np.all(np.isfinite(phi)):
        raise InvalidInput("phi0 must be finite")
    iterations = np.zeros(phi.shape, dtype=int)
    converged = np.zeros(phi.shape, dtype=bool)
    active = np.arange(phi.size)
    for _ in range(max_iter):
        if active.size == 0:
            break
        new = self_consistent_map(phi[active], delta[active], n)
        step = np.abs(new - phi[active])
        phi[active] = new
        iterations[active] += 1
        done = step < tol
        converged[active[done]] = True
        active = active[~done]
    return phi, iterations, converged
