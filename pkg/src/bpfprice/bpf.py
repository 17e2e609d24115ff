"""Kinetic (Boltzmann-type) price formation model.

Buyers ``f`` and vendors ``g`` diffuse and meet at rate ``k``.  A trade at
price ``x`` removes one buyer and one vendor there; the buyer reappears as a
vendor at ``x + a`` and the vendor as a buyer at ``x - a``, which in the
equations for f and g reads

    f_t = D f_xx - k f g + k (f g)(x + a)
    g_t = D g_xx - k f g + k (f g)(x - a)

with ``D = sigma^2 / 2``.  The shifted gain terms use zero extension outside
the grid, so ``a`` must be a whole number of cells.  With the support guard on
(the default), a run aborts as soon as trading activity gets within ``a`` of
either end, because past that point the shifts would leak mass.  With
``k = 0`` there is no trading and the guard is inactive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import (
    NoTradesError,
    NumericalInstabilityError,
    SupportGuardError,
)
from .grid import Field, Grid1D, cumulative_integral, integrate, shift, second_diff

#: Most negative density a step may produce before it counts as unstable.
NEGATIVE_TOL = 1e-6
#: Most negative density accepted in user-supplied initial data.
INITIAL_NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class BpfParams:
    k: float
    a: float
    sigma: float = 1.0
    support_guard: bool = True
    guard_tol: float = 1e-10

    def __post_init__(self):
        if not self.k >= 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    @property
    def diffusion(self) -> float:
        return 0.5 * self.sigma**2

    @property
    def c(self) -> float:
        return self.k * self.a

    def a_nodes(self, grid: Grid1D) -> int:
        return grid.nodes_for(self.a)


@dataclass(frozen=True)
class BpfState:
    f: Field
    g: Field
    t: float = 0.0

    def __post_init__(self):
        if self.f.grid != self.g.grid:
            raise ValueError("f and g must share one grid")

    @classmethod
    def initial(cls, f: Field, g: Field, t: float = 0.0) -> "BpfState":
        """Build a state from user data, rejecting negative densities."""
        lo = min(f.values.min(), g.values.min())
        if lo < -INITIAL_NEGATIVE_TOL:
            raise ValueError(f"initial densities must be >= 0 (min {lo:.3g})")
        return cls(f, g, t)

    @property
    def grid(self) -> Grid1D:
        return self.f.grid


class PriceEstimates(NamedTuple):
    argmax_price: float
    mean_price: float
    median_price: float


def bpf_rhs(state: BpfState, params: BpfParams) -> tuple[Field, Field]:
    """Tendencies (df/dt, dg/dt) with mirror ghosts for both diffusions."""
    m = params.a_nodes(state.grid)
    D = params.diffusion
    mu = params.k * state.f.values * state.g.values
    loss = state.f.with_values(mu)
    df = D * second_diff(state.f).values - mu + shift(loss, m).values
    dg = D * second_diff(state.g).values - mu + shift(loss, -m).values
    return state.f.with_values(df), state.g.with_values(dg)


def stable_dt(state: BpfState, params: BpfParams, safety: float = 0.4) -> float:
    """Diffusive limit dx^2/(2D) and reaction limit 1/(2 k max(f, g))."""
    dx = state.grid.dx
    peak = max(float(np.max(state.f.values)), float(np.max(state.g.values)), 0.0)
    limit = dx**2 / (2.0 * params.diffusion)
    limit = min(limit, 1.0 / (2.0 * params.k * peak + 1e-300))
    return safety * limit


def _advance(state: BpfState, params: BpfParams, dt: float, nsteps: int) -> BpfState:
    m = params.a_nodes(state.grid)
    f, g, status, done = K.bpf_advance(
        np.ascontiguousarray(state.f.values), np.ascontiguousarray(state.g.values),
        params.diffusion, float(params.k), m, state.grid.dx, float(dt), int(nsteps),
        NEGATIVE_TOL, bool(params.support_guard and params.k > 0), float(params.guard_tol),
    )
    t = state.t + done * dt
    if status == K.NONFINITE:
        raise NumericalInstabilityError(f"non-finite densities near t={t:.6g}")
    if status == K.INVARIANT:
        lo = min(f.min(), g.min())
        raise NumericalInstabilityError(f"density dropped to {lo:.3g} near t={t:.6g}")
    if status == K.GUARD:
        raise SupportGuardError(
            f"trading activity within a={params.a:g} of the boundary at t={t:.6g}"
        )
    return BpfState(state.f.with_values(f), state.g.with_values(g), t)


def bpf_step(state: BpfState, params: BpfParams, dt: float) -> BpfState:
    """One classical RK4 step of length ``dt``."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    return _advance(state, params, dt, 1)


def evolve(state: BpfState, params: BpfParams, duration: float, dt_max: float) -> BpfState:
    """Advance by ``duration`` in equal RK4 steps no longer than ``dt_max``."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return state
    nsteps = max(1, math.ceil(duration / dt_max * (1 - 1e-12)))
    return _advance(state, params, duration / nsteps, nsteps)


def transaction_density(state: BpfState, params: BpfParams) -> Field:
    """mu = k f g, the local rate of trades."""
    return state.f.with_values(params.k * state.f.values * state.g.values)


def price_estimates(mu: Field) -> PriceEstimates:
    """Argmax (leftmost on ties), mean and median of the trade density."""
    total = integrate(mu)
    if not total > 0:
        raise NoTradesError("transaction density is identically zero")
    x = mu.grid.x
    v = mu.values
    argmax = float(x[int(np.argmax(v))])
    mean = integrate(mu.with_values(x * v)) / total
    cum = cumulative_integral(mu)
    half = 0.5 * total
    j = int(np.searchsorted(cum, half, side="left"))
    if j == 0:
        median = float(x[0])
    else:
        lo, hi = cum[j - 1], cum[j]
        frac = 0.0 if hi == lo else (half - lo) / (hi - lo)
        median = float(x[j - 1] + frac * (x[j] - x[j - 1]))
    return PriceEstimates(argmax, float(mean), median)


def masses(state: BpfState) -> tuple[float, float]:
    return integrate(state.f), integrate(state.g)
