"""Uniform node-centred grid, sampled fields and discrete calculus.

Nodes include both end points, so a grid with ``n_cells`` subintervals has
``n_cells + 1`` samples.  Integrals use the composite trapezoid rule, which is
the quadrature that the mirror-ghost Laplacian conserves exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable

import numpy as np

GhostRule = Callable[[np.ndarray, float], tuple[float, float]]


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[x_min, x_max]`` with ``n_cells`` equal subintervals."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got {self.x_min} >= {self.x_max}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ValueError(f"n_cells must be an integer >= 4, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_nodes)
        x[-1] = self.x_max
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n_nodes, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        w.flags.writeable = False
        return w

    def nodes_for(self, distance: float, *, rtol: float = 1e-9) -> int:
        """Convert a length that must be a whole number of cells to a node count."""
        ratio = distance / self.dx
        m = int(round(ratio))
        if abs(ratio - m) > rtol * max(1.0, abs(ratio)):
            raise ValueError(
                f"a must be an integer multiple of dx (a={distance!r}, dx={self.dx!r})"
            )
        return m

    def sample(self, func) -> "Field":
        return Field(self, func(np.asarray(self.x)))

    def constant(self, value: float) -> "Field":
        return Field(self, np.full(self.n_nodes, float(value)))


@dataclass(frozen=True, eq=False)
class Field:
    """Real values sampled at the nodes of ``grid``.

    ``values`` is stored as a read-only float64 copy.
    """

    grid: Grid1D
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if v.size != self.grid.n_nodes:
            raise ValueError(f"field has {v.size} values, grid has {self.grid.n_nodes} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.values.size


def integrate(field: Field) -> float:
    """Composite trapezoid integral of ``field`` over its grid."""
    return float(np.dot(field.grid.weights, field.values))


def cumulative_integral(field: Field) -> np.ndarray:
    """Running trapezoid integral from ``x_min`` to every node (starts at 0)."""
    v = field.values
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * field.grid.dx * (v[1:] + v[:-1]), out=out[1:])
    return out


def central_diff_values(v: np.ndarray, dx: float) -> np.ndarray:
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    # grouped as differences so that constants give exactly zero
    d[0] = (4.0 * (v[1] - v[0]) - (v[2] - v[0])) / (2.0 * dx)
    d[-1] = ((v[-3] - v[-1]) - 4.0 * (v[-2] - v[-1])) / (2.0 * dx)
    return d


def central_diff(field: Field) -> Field:
    """First derivative: centred inside, one-sided second order at the ends."""
    return field.with_values(central_diff_values(field.values, field.grid.dx))


def mirror_ghosts(v: np.ndarray, dx: float) -> tuple[float, float]:
    """Even reflection across both ends (zero normal derivative)."""
    return float(v[1]), float(v[-2])


def second_diff(field: Field, ghosts: GhostRule = mirror_ghosts) -> Field:
    """Three-point second difference.

    ``ghosts(values, dx)`` returns the values just outside the left and right
    boundary; the default mirrors them, i.e. a homogeneous Neumann condition.
    """
    v = field.values
    dx = field.grid.dx
    left, right = ghosts(v, dx)
    padded = np.concatenate(([left], v, [right]))
    return field.with_values((padded[2:] - 2.0 * padded[1:-1] + padded[:-2]) / dx**2)


def shift_values(v: np.ndarray, offset_nodes: int) -> np.ndarray:
    n = v.size
    m = int(offset_nodes)
    if abs(m) > n - 1:
        raise ValueError(f"|offset_nodes| must be <= n_cells, got {m}")
    out = np.zeros_like(v)
    if m == 0:
        out[:] = v
    elif m > 0:
        out[: n - m] = v[m:]
    else:
        out[-m:] = v[: n + m]
    return out


def shift(field: Field, offset_nodes: int) -> Field:
    """Translate by ``offset_nodes`` cells with zero extension outside the grid.

    Positive offsets sample from the right, ``out[i] = v[i + m]``; negative
    offsets sample from the left.
    """
    return field.with_values(shift_values(field.values, offset_nodes))


def interpolate(field: Field, x: float) -> float:
    """Piecewise-linear value at ``x`` (clamped to the grid)."""
    return float(np.interp(x, field.grid.x, field.values))


def norm(values: np.ndarray, grid: Grid1D, kind: str = "L1") -> float:
    """Grid norm of a node array: trapezoid ``L1``/``L2`` or max ``Linf``."""
    kind = kind.upper()
    if kind == "L1":
        return float(np.dot(grid.weights, np.abs(values)))
    if kind == "L2":
        return float(np.sqrt(np.dot(grid.weights, values**2)))
    if kind == "LINF":
        return float(np.max(np.abs(values)))
    raise ValueError(f"unknown norm {kind!r}; expected L1, L2 or Linf")
