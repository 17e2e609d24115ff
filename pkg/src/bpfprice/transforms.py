"""Shift-operator algebra of the kinetic model, made discrete and checkable.

With ``S v(x) = v(x + a)``, ``T v(x) = v(x - a)`` and zero extension outside
the grid, the inverses ``F = (I - S)^{-1} f`` and ``G = (I - T)^{-1} g`` are
finite sums.  The kinetic model then implies that ``F - G`` and ``f + S g``
both solve the plain heat equation; the residual functions below measure how
far a computed trajectory is from doing so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bpf import BpfParams, BpfState
from .grid import Field, Grid1D, norm, second_diff, shift_values


@dataclass(frozen=True)
class TransformReport:
    series_length: int
    heat_residual_FG: float
    heat_residual_fSg: float
    dx: float
    dt_out: float
    metadata: dict = field(default_factory=dict)


def series_length(grid: Grid1D, a_nodes: int) -> int:
    """Smallest J with J * a >= domain length.

    The sums also include the term with J * a == length when that shift still
    maps the last node onto the first one.
    """
    if a_nodes < 1:
        raise ValueError("a_nodes must be >= 1")
    return math.ceil(grid.n_cells / a_nodes)


def _partial_sums(values: np.ndarray, step: int) -> np.ndarray:
    n = values.size
    out = np.zeros_like(values)
    j = 0
    while j * abs(step) <= n - 1:
        out += shift_values(values, j * step)
        j += 1
    return out


def neumann_F(f: Field, a_nodes: int) -> Field:
    """Sum over j >= 0 of S^j f (terminates once the shift leaves the grid)."""
    if a_nodes < 1:
        raise ValueError("a_nodes must be >= 1")
    return f.with_values(_partial_sums(f.values, a_nodes))


def neumann_G(g: Field, a_nodes: int) -> Field:
    """Sum over j >= 0 of T^j g."""
    if a_nodes < 1:
        raise ValueError("a_nodes must be >= 1")
    return g.with_values(_partial_sums(g.values, -a_nodes))


def apply_I_minus_S(v: Field, a_nodes: int) -> Field:
    return v.with_values(v.values - shift_values(v.values, a_nodes))


def apply_I_minus_T(v: Field, a_nodes: int) -> Field:
    return v.with_values(v.values - shift_values(v.values, -a_nodes))


def _uniform_spacing(trajectory: Sequence[BpfState]) -> float:
    if len(trajectory) < 3:
        raise ValueError("need at least 3 snapshots")
    t = np.array([s.t for s in trajectory])
    dt = np.diff(t)
    if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * dt.mean():
        raise ValueError("snapshots must be uniformly spaced in time")
    return float(dt.mean())


def heat_residual(ws: Sequence[np.ndarray], grid: Grid1D, D: float, dt_out: float) -> float:
    """max over interior snapshots of || w_t - D w_xx ||_L2.

    ``w_t`` is the centred difference of neighbouring snapshots and ``w_xx``
    the mirror-ghost second difference.
    """
    worst = 0.0
    for i in range(1, len(ws) - 1):
        wt = (ws[i + 1] - ws[i - 1]) / (2.0 * dt_out)
        wxx = second_diff(Field(grid, ws[i])).values
        worst = max(worst, norm(wt - D * wxx, grid, "L2"))
    return worst


def heat_residual_FG(trajectory: Sequence[BpfState], params: BpfParams) -> float:
    dt_out = _uniform_spacing(trajectory)
    grid = trajectory[0].grid
    m = params.a_nodes(grid)
    ws = [neumann_F(s.f, m).values - neumann_G(s.g, m).values for s in trajectory]
    return heat_residual(ws, grid, params.diffusion, dt_out)


def heat_residual_fSg(trajectory: Sequence[BpfState], params: BpfParams) -> float:
    dt_out = _uniform_spacing(trajectory)
    grid = trajectory[0].grid
    m = params.a_nodes(grid)
    ws = [s.f.values + shift_values(s.g.values, m) for s in trajectory]
    return heat_residual(ws, grid, params.diffusion, dt_out)


def transform_report(trajectory: Sequence[BpfState], params: BpfParams, **metadata) -> TransformReport:
    grid = trajectory[0].grid
    m = params.a_nodes(grid)
    return TransformReport(
        series_length=series_length(grid, m),
        heat_residual_FG=heat_residual_FG(trajectory, params),
        heat_residual_fSg=heat_residual_fSg(trajectory, params),
        dx=grid.dx,
        dt_out=_uniform_spacing(trajectory),
        metadata=dict(metadata),
    )
