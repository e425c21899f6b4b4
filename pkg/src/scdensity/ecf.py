"""Empirical characteristic function on a uniform frequency grid."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateSample, InvalidInput
from .model import EcfTable, FrequencyGrid, Sample

DEFAULT_POINTS_PER_SIDE = 1024
DEFAULT_PADDING = 3.0

# Elements per (frequency x data) block; bounds peak memory at ~32 MB.
_BLOCK = 1 << 22


def default_grid(
    sample: Sample,
    points_per_side: int = DEFAULT_POINTS_PER_SIDE,
    padding: float = DEFAULT_PADDING,
    strict: bool = False,
) -> FrequencyGrid:
    """Grid with spacing ``2*pi / (padding * R)``, ``R`` the sample range.

    The real-space period of the discrete inverse transform is then
    ``padding * R``, so copies of the estimate stay clear of the data.
    A zero range is replaced by 1 unless ``strict`` is set.
    """
    if points_per_side < 64:
        raise InvalidInput(f"points_per_side must be >= 64, got {points_per_side}")
    if not padding >= 1:
        raise InvalidInput(f"padding must be >= 1, got {padding}")
    r = sample.range
    if r == 0:
        if strict:
            raise DegenerateSample("DegenerateSample: all sample values are identical")
        r = 1.0
    return FrequencyGrid(2 * math.pi / (padding * r), int(points_per_side))


def grid_for_period(period: float, points_per_side: int) -> FrequencyGrid:
    """Grid whose inverse transform repeats every ``period`` data units."""
    return FrequencyGrid(2 * math.pi / period, int(points_per_side))


def ecf_at(sample: Sample, t) -> np.ndarray:
    """Direct evaluation of ``mean(exp(i t X))`` at arbitrary frequencies."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = sample.values
    out = np.empty(t.size, dtype=complex)
    rows = max(1, _BLOCK // x.size)
    for start in range(0, t.size, rows):
        arg = np.multiply.outer(t[start:start + rows], x)
        # row-wise numpy sums: fixed pairwise order over j, independent of threads
        out.real[start:start + rows] = np.cos(arg).sum(axis=1) / x.size
        out.imag[start:start + rows] = np.sin(arg).sum(axis=1) / x.size
    return out


def ecf_evaluate(sample: Sample, grid: FrequencyGrid) -> EcfTable:
    """Tabulate the ECF at ``t_k = k dt``, ``k = -m..m``.

    Only ``k >= 0`` is computed; negative frequencies are conjugate mirrors,
    so Hermitian symmetry holds bit-exactly. ``Delta(0)`` is pinned to 1.
    """
    half = ecf_at(sample, grid.positive_nodes)
    half[0] = 1.0
    values = np.concatenate([np.conj(half[:0:-1]), half])
    return EcfTable(grid, values)


def extend_table(sample: Sample, table: EcfTable, m: int) -> tuple[FrequencyGrid, EcfTable]:
    """Same spacing, more nodes; existing values are reused, not recomputed."""
    old = table.grid
    if m <= old.m:
        raise InvalidInput(f"new half-size {m} must exceed {old.m}")
    grid = FrequencyGrid(old.dt, m)
    extra = ecf_at(sample, np.arange(old.m + 1, m + 1) * old.dt)
    half = np.concatenate([table.half(), extra])
    return grid, EcfTable(grid, np.concatenate([np.conj(half[:0:-1]), half]))
