"""Structured grids and sampled solution fields.

Axes are either uniform (periodic cells exclude the right endpoint,
bounded axes include both endpoints) or Chebyshev-Gauss-Lobatto points for
collocation methods.  Norms over a grid use per-axis mean weights: uniform
axes weigh every node equally (an RMS norm), Chebyshev axes use
Clenshaw-Curtis quadrature normalized to the interval length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridMismatchError
from .expr import AXIS_NAMES


def chebyshev_nodes(n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """n Gauss-Lobatto points on [lo, hi], ascending."""
    if n < 2:
        raise DimensionError("chebyshev axis needs at least 2 points")
    ref = np.cos(np.pi * np.arange(n - 1, -1, -1) / (n - 1))  # -1 .. 1
    return lo + (hi - lo) * (ref + 1.0) / 2.0


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Quadrature weights for n Gauss-Lobatto points on [-1, 1]."""
    if n < 2:
        raise DimensionError("need at least 2 points")
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(m - 1)
    for k in range(1, m // 2 + 1):
        factor = 2.0 if 2 * k < m else 1.0
        v -= factor * np.cos(2.0 * k * theta[1:-1]) / (4.0 * k * k - 1.0)
    w[1:-1] = 2.0 * v / m
    w[0] = w[-1] = 1.0 / (m * m - 1.0 + (m % 2))
    return w


@dataclass(frozen=True)
class Axis:
    n: int
    lo: float
    hi: float
    periodic: bool = False
    kind: str = "uniform"  # "uniform" | "chebyshev"

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError(f"axis needs >= 2 points, got {self.n}")
        if self.kind == "chebyshev" and self.periodic:
            raise DimensionError("chebyshev axes cannot be periodic")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def dx(self) -> float:
        """Uniform spacing; smallest spacing for chebyshev axes."""
        if self.kind == "chebyshev":
            nd = self.nodes()
            return float(np.min(np.diff(nd)))
        return self.length / (self.n if self.periodic else self.n - 1)

    def nodes(self) -> np.ndarray:
        if self.kind == "chebyshev":
            return chebyshev_nodes(self.n, self.lo, self.hi)
        if self.periodic:
            return self.lo + self.length * np.arange(self.n) / self.n
        return np.linspace(self.lo, self.hi, self.n)

    def mean_weights(self) -> np.ndarray:
        """Weights summing to 1 for weighted-mean norms along this axis."""
        if self.kind == "chebyshev":
            w = clenshaw_curtis_weights(self.n)
            return w / w.sum()
        return np.full(self.n, 1.0 / self.n)


@dataclass(frozen=True)
class Grid:
    axes: tuple[Axis, ...]

    @classmethod
    def uniform(cls, bounds, shape, periodic) -> "Grid":
        if not (len(bounds) == len(shape) == len(periodic)):
            raise DimensionError("bounds/shape/periodic lengths differ")
        return cls(tuple(
            Axis(int(n), float(lo), float(hi), bool(p))
            for (lo, hi), n, p in zip(bounds, shape, periodic)
        ))

    @classmethod
    def chebyshev(cls, bounds, shape) -> "Grid":
        if len(bounds) != len(shape):
            raise DimensionError("bounds/shape lengths differ")
        return cls(tuple(
            Axis(int(n), float(lo), float(hi), False, "chebyshev")
            for (lo, hi), n in zip(bounds, shape)
        ))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def periodic(self) -> bool:
        return all(ax.periodic for ax in self.axes)

    @property
    def kind(self) -> str:
        kinds = {ax.kind for ax in self.axes}
        return kinds.pop() if len(kinds) == 1 else "mixed"

    def nodes(self, axis: int) -> np.ndarray:
        return self.axes[axis].nodes()

    def coords(self, t: float | None = None) -> dict:
        """Sparse broadcastable coordinate arrays keyed by axis name."""
        out = {}
        for a, ax in enumerate(self.axes):
            shape = [1] * self.dim
            shape[a] = ax.n
            out[AXIS_NAMES[a]] = ax.nodes().reshape(shape)
        if t is not None:
            out["t"] = t
        return out

    def mean_weights(self) -> np.ndarray:
        """Tensor-product weights summing to 1 over the whole grid."""
        w = np.ones(())
        for a, ax in enumerate(self.axes):
            shape = [1] * self.dim
            shape[a] = ax.n
            w = w * ax.mean_weights().reshape(shape)
        return np.broadcast_to(w, self.shape)

    def weighted_norm(self, values: np.ndarray) -> float:
        """sqrt of the weighted mean square; RMS on uniform grids."""
        values = np.asarray(values)
        if values.shape[-self.dim:] != self.shape:
            raise GridMismatchError(
                f"field shape {values.shape} does not end with grid shape {self.shape}"
            )
        w = self.mean_weights()
        sq = np.real(values * np.conj(values)) if np.iscomplexobj(values) else values**2
        return float(np.sqrt(np.mean(np.sum(
            sq.reshape(-1, *self.shape) * w, axis=tuple(range(1, self.dim + 1))
        ))))

    def describe(self) -> dict:
        return {
            "shape": list(self.shape),
            "bounds": [[ax.lo, ax.hi] for ax in self.axes],
            "periodic": [ax.periodic for ax in self.axes],
            "kind": [ax.kind for ax in self.axes],
        }

    @classmethod
    def from_description(cls, desc: dict) -> "Grid":
        return cls(tuple(
            Axis(int(n), float(lo), float(hi), bool(p), str(k))
            for n, (lo, hi), p, k in zip(
                desc["shape"], desc["bounds"], desc["periodic"], desc["kind"]
            )
        ))


@dataclass
class SolutionField:
    """One named field sampled at snapshot times; values[0] is the first snapshot."""

    name: str
    values: np.ndarray  # (n_snapshots, *grid_shape)
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.grid.dim + 1:
            raise GridMismatchError(
                f"{self.name}: rank {self.values.ndim} != 1 + grid dim {self.grid.dim}"
            )
        if self.values.shape[1:] != self.grid.shape:
            raise GridMismatchError(
                f"{self.name}: snapshot shape {self.values.shape[1:]} != grid {self.grid.shape}"
            )

    @property
    def n_snapshots(self) -> int:
        return self.values.shape[0]

    def final(self) -> np.ndarray:
        return self.values[-1]


@dataclass
class SolutionSet:
    """Fields plus the shared snapshot-time vector and solver-reported metadata."""

    fields: dict  # name -> SolutionField
    times: np.ndarray
    meta: dict

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for f in self.fields.values():
            if f.n_snapshots != len(self.times):
                raise GridMismatchError(
                    f"{f.name}: {f.n_snapshots} snapshots vs {len(self.times)} times"
                )

    def field(self, name: str) -> SolutionField:
        return self.fields[name]

    @property
    def grid(self) -> Grid:
        return next(iter(self.fields.values())).grid
