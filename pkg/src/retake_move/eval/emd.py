"""Histograms and exact earth mover's distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels

MAX_GRID = 24


class EMDError(ValueError):
    pass


@dataclass
class Histogram2D:
    masses: np.ndarray  # (rows, cols), rows along y
    cell_size: float
    origin: tuple = (0.0, 0.0)

    @property
    def shape(self):
        return self.masses.shape

    @property
    def total(self):
        return float(self.masses.sum())

    @classmethod
    def zeros(cls, bounds, cell_size):
        x0, y0, x1, y1 = bounds
        cols = int(math.ceil((x1 - x0) / cell_size))
        rows = int(math.ceil((y1 - y0) / cell_size))
        return cls(np.zeros((rows, cols)), float(cell_size), (float(x0), float(y0)))

    def cell_of(self, x, y):
        rows, cols = self.masses.shape
        c = min(max(int((x - self.origin[0]) // self.cell_size), 0), cols - 1)
        r = min(max(int((y - self.origin[1]) // self.cell_size), 0), rows - 1)
        return r, c

    def add(self, x, y, w=1.0):
        self.masses[self.cell_of(x, y)] += w


@dataclass
class Histogram1D:
    edges: np.ndarray
    masses: np.ndarray

    @property
    def width(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def total(self):
        return float(self.masses.sum())

    @classmethod
    def uniform(cls, lo, hi, bins):
        return cls(np.linspace(lo, hi, bins + 1), np.zeros(bins))

    def add(self, v, w=1.0):
        n = len(self.masses)
        i = int(np.searchsorted(self.edges, v, side="right")) - 1
        self.masses[min(max(i, 0), n - 1)] += w


def downsample(masses, max_side=MAX_GRID):
    """Block-sum so that neither side exceeds ``max_side``; total mass is preserved."""
    rows, cols = masses.shape
    f = max(1, int(math.ceil(max(rows, cols) / max_side)))
    if f == 1:
        return masses.astype(np.float64)
    pr, pc = -rows % f, -cols % f
    padded = np.pad(masses.astype(np.float64), ((0, pr), (0, pc)))
    R, C = padded.shape
    return padded.reshape(R // f, f, C // f, f).sum(axis=(1, 3))


def _normalized(masses, name):
    m = np.asarray(masses, dtype=np.float64)
    if (m < 0).any():
        raise EMDError(f"{name} has negative mass")
    total = m.sum()
    if total <= 0:
        raise EMDError(f"{name} has zero total mass")
    return m / total


def transport_cost(supply, demand, cost):
    """Optimal transport cost between two mass vectors (same total) under ``cost``."""
    flow = kernels.transport(np.ascontiguousarray(supply, dtype=np.float64), np.ascontiguousarray(demand, dtype=np.float64), np.ascontiguousarray(cost, dtype=np.float64))
    return float((flow * cost).sum())


def emd2(a, b, max_side=MAX_GRID):
    """EMD between two same-grid 2-D histograms, in cell units of the downsampled grid."""
    ma = a.masses if isinstance(a, Histogram2D) else np.asarray(a)
    mb = b.masses if isinstance(b, Histogram2D) else np.asarray(b)
    if ma.shape != mb.shape:
        raise EMDError(f"grid mismatch {ma.shape} vs {mb.shape}")
    pa = downsample(_normalized(ma, "first histogram"), max_side)
    pb = downsample(_normalized(mb, "second histogram"), max_side)
    ia = np.argwhere(pa > 0)
    ib = np.argwhere(pb > 0)
    sa = pa[pa > 0]
    sb = pb[pb > 0]
    diff = ia[:, None, :].astype(np.float64) - ib[None, :, :].astype(np.float64)
    cost = np.sqrt((diff**2).sum(axis=-1))
    return transport_cost(sa, sb, cost)


def emd1(a, b):
    """EMD between two 1-D histograms on the same uniform bins: sum |CDF_a - CDF_b| * width."""
    if not isinstance(a, Histogram1D):
        raise EMDError("emd1 takes Histogram1D inputs")
    if len(a.edges) != len(b.edges) or not np.allclose(a.edges, b.edges):
        raise EMDError("bin edges differ")
    pa = _normalized(a.masses, "first histogram")
    pb = _normalized(b.masses, "second histogram")
    return float(np.abs(np.cumsum(pa) - np.cumsum(pb)).sum() * a.width)
