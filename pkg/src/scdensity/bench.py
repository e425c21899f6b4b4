"""Monte Carlo MISE measurement and scaling fits.

Every replicate draws one sample from its own random stream and feeds it
to all requested estimators, so estimator comparisons are paired. Results
are stored by replicate index and reduced in that order, which makes the
output independent of how many worker threads ran the replicates.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from . import distributions as _dists
from . import ecf as _ecf
from . import kernels as _kernels
from . import sc as _sc
from . import theory as _theory
from .errors import InsufficientPoints, InvalidInput, NoQualifyingM, OverrideOutOfGrid, RangeTooNarrow, ScdError
from .model import BenchmarkRecord, DensityCurve, Distribution, FrequencyGrid, Sample

ESTIMATORS = ("sc", "kg", "kt", "apt", "opt", "truth")
SPECTRAL = ("sc", "kt", "opt")
ISE_METHODS = ("real_space", "fourier")
DEFAULT_N_LIST = (100, 316, 1000, 3162, 10000)
FULL_N_LIST = (100, 316, 1000, 3162, 10000, 31623, 100000, 316228, 1000000)
CSV_HEADER = ("dist", "estimator", "n", "mise_mean", "mise_stderr", "reps", "seed")
# squared truth mass allowed outside the ISE window, relative to int f^2
RANGE_TOL = 1e-6


@dataclass(frozen=True)
class BenchSettings:
    """ISE window and frequency grid for one test density.

    Spectral estimators use a grid whose real-space period is twice the
    window width, so periodic copies of the estimate stay outside it.
    """

    x_min: float
    x_max: float
    x_count: int
    points_per_side: int

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.x_count)

    def grid(self, points_per_side: Optional[int] = None) -> FrequencyGrid:
        return _ecf.grid_for_period(2 * (self.x_max - self.x_min),
                                    points_per_side or self.points_per_side)


SETTINGS = {
    "gaussian": BenchSettings(-8.0, 8.0, 1601, 512),
    "comb": BenchSettings(-4.0, 5.0, 4501, 1024),
    "cauchy": BenchSettings(-200.0, 200.0, 4001, 4096),
}


def settings_for(name: str) -> BenchSettings:
    try:
        return SETTINGS[name]
    except KeyError:
        raise InvalidInput(f"no benchmark settings for {name!r}; choose from {sorted(SETTINGS)}") from None


@dataclass(frozen=True)
class BenchmarkPlan:
    distribution: str
    estimators: tuple
    n_list: tuple = DEFAULT_N_LIST
    replicates: int = 100
    seed: int = 0
    ise_method: str = "real_space"

    def __post_init__(self):
        settings_for(self.distribution)
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if not self.estimators:
            raise InvalidInput("no estimators requested")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise InvalidInput(f"unknown estimator {e!r}; choose from {ESTIMATORS}")
        if len(set(self.estimators)) != len(self.estimators):
            raise InvalidInput("duplicate estimator")
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise InvalidInput("n_list must be non-empty and strictly increasing")
        if self.n_list[0] < 10:
            raise InvalidInput("sample sizes below 10 are not supported")
        if self.replicates < 2:
            raise InvalidInput("need at least 2 replicates")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidInput("seed must be a 64-bit unsigned integer")
        if self.ise_method not in ISE_METHODS:
            raise InvalidInput(f"ise_method must be one of {ISE_METHODS}")
        if self.ise_method == "fourier" and "apt" in self.estimators:
            raise InvalidInput("apt has no spectrum; use the real_space ISE")


def ise(estimate: DensityCurve, truth: Distribution) -> float:
    """``int (f_hat - f)^2`` on the curve's grid plus ``int f^2`` outside it.

    Raises ``RangeTooNarrow`` when the outside part exceeds ``1e-6`` of
    ``int f^2``.
    """
    tail = truth.sq_tail(estimate.x_min, estimate.x_max)
    if not tail <= RANGE_TOL * truth.sq_integral():
        raise RangeTooNarrow(
            f"RangeTooNarrow: [{estimate.x_min}, {estimate.x_max}] leaves {tail:.3g} of int f^2 outside")
    diff = estimate.f - truth.pdf(estimate.x)
    return float(np.trapezoid(diff * diff, estimate.x)) + tail


def ise_fourier(grid: FrequencyGrid, values, truth: Distribution) -> float:
    """Parseval form ``(1/2pi) int |phi_hat - phi|^2 dt`` on the grid plus the
    truth spectrum beyond ``t_max``."""
    diff = np.asarray(values) - truth.cf(grid.nodes)
    inside = grid.dt / (2 * math.pi) * float(np.sum(diff.real ** 2 + diff.imag ** 2))
    tail = _theory._quad(lambda t: float(truth.abs2_cf(t)), grid.t_max, np.inf,
                         epsabs=1e-300, epsrel=1e-10)
    return inside + tail / math.pi


def default_threads() -> int:
    raw = os.environ.get("SCD_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInput(f"SCD_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidInput(f"SCD_THREADS must be a positive integer, got {raw!r}")
    return value


def _spectra(sample: Sample, dist: Distribution, table, estimators) -> dict:
    """Spectral estimates keyed by estimator; KT maps to one spectrum per c^2."""
    n = sample.n
    out = {}
    if "sc" in estimators:
        out["sc"] = _sc.sc_spectral(table, n).values
    if "opt" in estimators:
        out["opt"] = _kernels.kernel_spectrum(table, _kernels.KernelSpec("optimal_oracle", dist=dist), n)
    if "kt" in estimators:
        # small c^2 can fail on heavy-tailed data, where ECF noise crosses the
        # level somewhere in every window; average over the values that work
        kt = []
        for c2 in _kernels.KT_C2_VALUES:
            try:
                h = _kernels.kt_bandwidth(table, n, c2)
            except NoQualifyingM:
                continue
            kt.append(_kernels.kernel_spectrum(table, _kernels.KernelSpec("flat_top", h), n))
        if not kt:
            raise NoQualifyingM("NoQualifyingM: flat-top rule failed for every c^2")
        out["kt"] = kt
    return out


def replicate_ise(plan: BenchmarkPlan, n: int, replicate: int) -> dict:
    """ISE of every estimator in ``plan`` on one replicate sample."""
    dist = _dists.get(plan.distribution)
    settings = settings_for(plan.distribution)
    sample = dist.sample(_dists.replicate_rng(plan.seed, replicate, n), n)
    x = settings.x
    grid = settings.grid()
    need_table = any(e in SPECTRAL for e in plan.estimators) or (
        plan.ise_method == "fourier" and "kg" in plan.estimators)
    table = _ecf.ecf_evaluate(sample, grid) if need_table else None
    spectra = _spectra(sample, dist, table, plan.estimators) if table is not None else {}
    fourier = plan.ise_method == "fourier"

    def from_spectrum(values):
        if fourier:
            return ise_fourier(grid, values, dist)
        return ise(DensityCurve(x, _sc.inverse_transform(grid, values, x)), dist)

    out = {}
    for est in plan.estimators:
        if est in ("sc", "opt"):
            out[est] = from_spectrum(spectra[est])
        elif est == "kt":
            out[est] = float(np.mean([from_spectrum(v) for v in spectra["kt"]]))
        elif est == "kg":
            kernel = _kernels.KernelSpec("gaussian", _kernels.kg_bandwidth(sample))
            if fourier:
                out[est] = from_spectrum(_kernels.kernel_spectrum(table, kernel, n))
            else:
                out[est] = ise(DensityCurve(x, _kernels.gaussian_kde_direct(sample.values, kernel.h, x)), dist)
        elif est == "apt":
            bw = _kernels.adaptive_bandwidths(sample)
            out[est] = ise(DensityCurve(x, _kernels.gaussian_kde_direct(sample.values, bw, x)), dist)
        else:  # truth
            out[est] = 0.0 if fourier else ise(DensityCurve(x, dist.pdf(x)), dist)
    return out


def measure(plan: BenchmarkPlan, threads: Optional[int] = None) -> dict:
    """Per-replicate ISE arrays, ``{(estimator, n): array of length replicates}``.

    A failing replicate aborts the run; the error names the cell and replicate.
    """
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise InvalidInput("threads must be >= 1")
    result = {}
    for n in plan.n_list:
        def task(r, n=n):
            try:
                return replicate_ise(plan, n, r)
            except ScdError as exc:
                exc.args = (f"{plan.distribution} n={n} replicate {r}: {exc}",)
                raise
        if threads == 1:
            rows = [task(r) for r in range(plan.replicates)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(task, range(plan.replicates)))
        for est in plan.estimators:
            result[(est, n)] = np.array([row[est] for row in rows])
    return result


def summarize(plan: BenchmarkPlan, ises: dict) -> list[BenchmarkRecord]:
    records = []
    for est in plan.estimators:
        for n in plan.n_list:
            v = ises[(est, n)]
            records.append(BenchmarkRecord(
                plan.distribution, est, n, float(v.mean()),
                float(v.std(ddof=1) / math.sqrt(v.size)), int(v.size), plan.seed))
    return records


def run_benchmark(plan: BenchmarkPlan, threads: Optional[int] = None) -> list[BenchmarkRecord]:
    """MISE mean and standard error for every (estimator, n) cell of ``plan``."""
    return summarize(plan, measure(plan, threads))


def fit_scaling(records: Sequence[BenchmarkRecord]) -> tuple[float, float]:
    """Least-squares slope of ``ln(mise)`` on ``ln(n)``; returns ``(alpha, stderr)``
    with ``alpha = -slope``."""
    if len({(r.distribution, r.estimator) for r in records}) > 1:
        raise InvalidInput("records mix estimators or distributions")
    if len({r.n for r in records}) < 3:
        raise InsufficientPoints("InsufficientPoints: need at least 3 distinct n values")
    if any(r.mise_mean <= 0 for r in records):
        raise InvalidInput("scaling fit needs positive MISE values")
    fit = stats.linregress(np.log([r.n for r in records]), np.log([r.mise_mean for r in records]))
    return float(-fit.slope), float(fit.stderr)


@dataclass(frozen=True)
class SensitivityRow:
    factor: float
    mean_change: float
    stderr: float
    ok: int
    failures: tuple


def sensitivity_study(
    dist_name: str,
    n: int,
    replicates: int,
    factors: Iterable[float],
    seed: int = 0,
    points_per_side: Optional[int] = None,
) -> list[SensitivityRow]:
    """Relative L2 change of the SC estimate when ``t*`` is scaled by each factor.

    Replicates whose scaled ``t*`` falls off the grid are listed in
    ``failures`` instead of aborting the study.
    """
    factors = [float(f) for f in factors]
    if not factors or any(not f > 0 for f in factors):
        raise InvalidInput("factors must be positive")
    if replicates < 2:
        raise InvalidInput("need at least 2 replicates")
    dist = _dists.get(dist_name)
    settings = settings_for(dist_name)
    grid = settings.grid(points_per_side)
    x = settings.x
    changes = {f: [] for f in factors}
    failures = {f: [] for f in factors}
    for r in range(replicates):
        sample = dist.sample(_dists.replicate_rng(seed, r, n), n)
        table = _ecf.ecf_evaluate(sample, grid)
        base = _sc.sc_spectral(table, n)
        f0 = _sc.inverse_transform(grid, base.values, x)
        norm = math.sqrt(np.trapezoid(f0 * f0, x))
        for fac in factors:
            if fac == 1.0:
                changes[fac].append(0.0)
                continue
            try:
                spec = _sc.sc_spectral(table, n, _sc.ScConfig(tstar_override=fac * base.t_star))
            except OverrideOutOfGrid as exc:
                failures[fac].append((r, str(exc)))
                continue
            d = _sc.inverse_transform(grid, spec.values, x) - f0
            changes[fac].append(math.sqrt(np.trapezoid(d * d, x)) / norm)
    rows = []
    for fac in factors:
        v = np.array(changes[fac])
        mean = float(v.mean()) if v.size else math.nan
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
        rows.append(SensitivityRow(fac, mean, se, int(v.size), tuple(failures[fac])))
    return rows


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path_or_file, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """CSV with a header row, 17 significant digits and ``\\n`` line endings."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def record_rows(records: Iterable[BenchmarkRecord]) -> list[tuple]:
    return [(r.distribution, r.estimator, r.n, r.mise_mean, r.mise_stderr, r.replicates, r.seed)
            for r in records]


def theory_rows(dist_name: str, n_list: Sequence[int], seed: int = 0) -> list[tuple]:
    """Reference rows ``theory_opt``, ``theory_kg`` and (Gaussian only) ``theory_ml``.

    They share the benchmark CSV layout with zero stderr and zero replicates.
    """
    dist = _dists.get(dist_name)
    bounds = ["opt", "kg"] + (["ml"] if dist_name == "gaussian" else [])
    return [(dist_name, f"theory_{b}", int(n), _theory.reference_value(dist, b, int(n)), 0.0, 0, seed)
            for b in bounds for n in n_list]
