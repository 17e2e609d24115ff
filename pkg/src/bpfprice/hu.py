"""Limit system in total density / imbalance variables.

With ``h = f + g`` and ``u = f - g`` the high-frequency limit becomes

    h_t = D h_xx
    u_t = D u_xx + (h^2 - u^2)_x / (2 eps)

with no-flux conditions ``h_x = 0`` and ``D u_x + (h^2 - u^2) / (2 eps) = 0``
at both ends.  Two semi-discretisations are provided:

``paper_central``
    centred second differences plus the centred difference of
    ``h^2 - u^2``; the boundary rows use ghost values built from the no-flux
    conditions.
``flux_conservative``
    the same interior stencil written as differences of face fluxes, with the
    boundary faces carrying zero flux.  Trapezoid masses of ``h`` and ``u`` are
    then conserved to round-off.

Both advance in time with classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import _kernels as K
from .errors import InvariantViolationError, NoInterfaceError, NumericalInstabilityError
from .grid import Field, Grid1D, integrate

#: Relative u^2 - h^2 excess that aborts a run.
HARD_EXCESS = 1e-4


class Scheme(str, Enum):
    PAPER_CENTRAL = "paper_central"
    FLUX_CONSERVATIVE = "flux_conservative"

    @property
    def code(self) -> int:
        return K.PAPER_CENTRAL if self is Scheme.PAPER_CENTRAL else K.FLUX_CONSERVATIVE


@dataclass(frozen=True)
class HuParams:
    """``epsilon`` is the inverse trading intensity 1/c; ``diffusion`` is D."""

    epsilon: float
    diffusion: float = 1.0
    scheme: Scheme = Scheme.PAPER_CENTRAL
    freeze_h: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.diffusion > 0:
            raise ValueError(f"diffusion must be > 0, got {self.diffusion}")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def c(self) -> float:
        return 1.0 / self.epsilon


@dataclass(frozen=True)
class HuState:
    h: Field
    u: Field
    t: float = 0.0

    def __post_init__(self):
        if self.h.grid != self.u.grid:
            raise ValueError("h and u must share one grid")

    @property
    def grid(self) -> Grid1D:
        return self.h.grid

    def excess(self) -> float:
        """max(u^2 - h^2) over the nodes (absolute)."""
        return float(np.max(self.u.values**2 - self.h.values**2))


def from_fg(f: Field, g: Field, t: float = 0.0) -> HuState:
    if f.grid != g.grid:
        raise ValueError("f and g must share one grid")
    return HuState(f.with_values(f.values + g.values), f.with_values(f.values - g.values), t)


def to_fg(state: HuState) -> tuple[Field, Field]:
    h, u = state.h.values, state.u.values
    return state.h.with_values(0.5 * (h + u)), state.h.with_values(0.5 * (h - u))


def _rhs(state: HuState, params: HuParams, scheme: Scheme) -> tuple[Field, Field]:
    h = np.ascontiguousarray(state.h.values)
    u = np.ascontiguousarray(state.u.values)
    dh = np.empty_like(h)
    du = np.empty_like(u)
    K.hu_rhs(h, u, params.diffusion, params.epsilon, state.grid.dx, scheme.code, dh, du)
    if not (np.all(np.isfinite(dh)) and np.all(np.isfinite(du))):
        raise NumericalInstabilityError("non-finite tendency")
    if params.freeze_h:
        dh[:] = 0.0
    return state.h.with_values(dh), state.u.with_values(du)


def hu_rhs_paper(state: HuState, params: HuParams) -> tuple[Field, Field]:
    """Centred finite-difference tendencies (dh/dt, du/dt)."""
    return _rhs(state, params, Scheme.PAPER_CENTRAL)


def hu_rhs_conservative(state: HuState, params: HuParams) -> tuple[Field, Field]:
    """Face-flux tendencies with zero flux through both boundary faces."""
    return _rhs(state, params, Scheme.FLUX_CONSERVATIVE)


def stable_dt(grid: Grid1D, params: HuParams, h_max: float, safety: float = 0.4) -> float:
    """Largest step the explicit scheme is run with.

    Diffusive limit dx^2/(2D) and advective limit eps*dx/(2 max|h|), times
    ``safety``.
    """
    limit = grid.dx**2 / (2.0 * params.diffusion)
    if h_max > 0:
        limit = min(limit, params.epsilon * grid.dx / (2.0 * h_max))
    return safety * limit


def cell_peclet(grid: Grid1D, params: HuParams, h_max: float) -> float:
    """max|h| dx / (2 eps D); positivity of f and g needs this <= 1."""
    return h_max * grid.dx / (2.0 * params.epsilon * params.diffusion)


def _advance(state, params, dt, nsteps, h_bound):
    h = np.ascontiguousarray(state.h.values, dtype=float)
    u = np.ascontiguousarray(state.u.values, dtype=float)
    h_new, u_new, status, done, worst = K.hu_advance(
        h, u, params.diffusion, params.epsilon, state.grid.dx, params.scheme.code,
        bool(params.freeze_h), float(dt), int(nsteps), HARD_EXCESS,
    )
    t = state.t + done * dt
    bound = h_bound if h_bound is not None else float(np.max(np.abs(h)))
    blown = not (np.all(np.isfinite(h_new)) and np.all(np.isfinite(u_new)))
    if not blown and nsteps:
        blown = (np.max(np.abs(u_new)) > 2.0 * bound + 1e-300
                 or np.max(np.abs(h_new)) > (1.0 + 1e-6) * bound + 1e-300)
    if status == K.NONFINITE or blown:
        raise NumericalInstabilityError(f"hu solver blew up near t={t:.6g} (dt={dt:.3g})")
    if status == K.INVARIANT:
        raise InvariantViolationError(
            f"u^2 - h^2 reached {worst:.3g} * max(h^2) at t={t:.6g}"
        )
    new = HuState(state.h.with_values(h_new), state.u.with_values(u_new), t)
    return new, worst


def hu_step(state: HuState, params: HuParams, dt: float) -> HuState:
    """One RK4 step; h is held fixed when ``params.freeze_h``."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    new, _ = _advance(state, params, dt, 1, None)
    return new


def evolve(state: HuState, params: HuParams, duration: float, dt_max: float,
           h_bound: float | None = None) -> tuple[HuState, float]:
    """Advance by ``duration`` using equal steps no longer than ``dt_max``.

    Returns the new state and the worst relative u^2 - h^2 excess seen after
    any step (``-inf`` when no step was taken).
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return state, -math.inf
    nsteps, dt = steps_for(duration, dt_max)
    return _advance(state, params, dt, nsteps, h_bound)


def steps_for(duration: float, dt_max: float) -> tuple[int, float]:
    """Equal steps covering ``duration`` exactly, none longer than ``dt_max``."""
    if duration <= 0:
        return 0, 0.0
    n = max(1, math.ceil(duration / dt_max * (1 - 1e-12)))
    return n, duration / n


def price_from_u(state: HuState, previous_price: float | None = None) -> float:
    """Location of the downward zero crossing of u.

    Between two nodes with ``u_i > 0 >= u_{i+1}`` the crossing is found by
    linear interpolation.  With several candidates the one nearest
    ``previous_price`` wins, or the steepest one when there is no previous
    price.
    """
    u = state.u.values
    x = state.grid.x
    i = np.nonzero((u[:-1] > 0) & (u[1:] <= 0))[0]
    if i.size == 0:
        raise NoInterfaceError("u has no downward sign change")
    # u[i+1] == 0 exactly lands on the node itself
    frac = u[i] / (u[i] - u[i + 1])
    roots = x[i] + frac * (x[i + 1] - x[i])
    if roots.size == 1:
        return float(roots[0])
    if previous_price is not None:
        return float(roots[np.argmin(np.abs(roots - previous_price))])
    return float(roots[np.argmax(u[i] - u[i + 1])])


def gap_integral(states: Sequence[HuState], dt_out: float | None = None) -> float:
    """Time-trapezoid of the trapezoid integral of h^2 - u^2 over the states.

    ``states`` are snapshots at uniform spacing ``dt_out`` (taken from the
    state times when not given).
    """
    if len(states) < 2:
        return 0.0
    vals = np.array([integrate(s.h.with_values(s.h.values**2 - s.u.values**2)) for s in states])
    if dt_out is None:
        times = np.array([s.t for s in states])
        return float(np.trapezoid(vals, times))
    return float(dt_out * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def moment_bound(epsilon: float, T: float, h_max: float = 1.0) -> float:
    """The a-priori bound 4 eps (1 + T) max h on the gap integral."""
    return 4.0 * epsilon * (1.0 + T) * h_max
