"""Sharp-interface limit: heat flow of h plus a single price jump.

As eps -> 0 the imbalance becomes ``u = h`` left of the price ``p(t)`` and
``u = -h`` to the right, where ``h`` solves the Neumann heat equation and
``p`` splits the total density into the buyer and vendor masses.  The price
can be obtained either from that mass split or by integrating

    p'(t) = -D h_x(p, t) / h(p, t)

and the two routes are compared in the acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import NumericalInstabilityError
from .grid import Field, Grid1D, cumulative_integral, integrate

#: h(p) below this makes the price ODE singular.
H_MIN = 1e-12


@dataclass(frozen=True)
class SharpState:
    h: Field
    p: float
    t: float = 0.0

    def __post_init__(self):
        g = self.h.grid
        if not g.x_min < self.p < g.x_max:
            raise ValueError(f"price {self.p} outside ({g.x_min}, {g.x_max})")

    @property
    def grid(self) -> Grid1D:
        return self.h.grid

    @property
    def buyer_mass(self) -> float:
        return mass_left_of(self.h, self.p)


def heat_stable_dt(grid: Grid1D, D: float, safety: float = 0.4) -> float:
    return safety * grid.dx**2 / (2.0 * D)


def heat_step(h: Field, D: float, dt: float) -> Field:
    """RK4 step of D h_xx with mirror ghosts (homogeneous Neumann)."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return h
    out, status, _ = K.heat_advance(np.ascontiguousarray(h.values), float(D), h.grid.dx, float(dt), 1)
    if status != K.OK:
        raise NumericalInstabilityError("heat step produced non-finite values")
    return h.with_values(out)


def heat_evolve(h: Field, D: float, duration: float, dt_max: float) -> Field:
    if duration <= 0:
        return h
    n = max(1, math.ceil(duration / dt_max * (1 - 1e-12)))
    out, status, _ = K.heat_advance(np.ascontiguousarray(h.values), float(D), h.grid.dx, duration / n, n)
    if status != K.OK:
        raise NumericalInstabilityError("heat flow produced non-finite values")
    return h.with_values(out)


def mass_left_of(h: Field, p: float) -> float:
    """Exact integral of the piecewise-linear interpolant of h over [x_min, p]."""
    grid = h.grid
    cum = cumulative_integral(h)
    s = (p - grid.x_min) / grid.dx
    j = min(max(int(math.floor(s)), 0), grid.n_cells - 1)
    r = (s - j) * grid.dx
    hj, hj1 = h.values[j], h.values[j + 1]
    return float(cum[j] + hj * r + 0.5 * (hj1 - hj) * r * r / grid.dx)


def price_from_mass(h: Field, m_f: float) -> float:
    """Solve ``integral_{x_min}^p h dx = m_f`` for p.

    The cell holding the root is found by binary search on the cumulative
    trapezoid integral; inside it the integral of the linear interpolant is a
    quadratic in ``p`` that is solved in closed form.
    """
    if np.any(h.values < 0):
        raise ValueError("h must be nonnegative")
    cum = cumulative_integral(h)
    total = cum[-1]
    if not 0 < m_f < total:
        raise ValueError(f"m_f={m_f!r} must lie in (0, {total!r})")
    grid = h.grid
    j = int(np.searchsorted(cum, m_f, side="left")) - 1
    j = min(max(j, 0), grid.n_cells - 1)
    target = m_f - cum[j]
    hj, hj1 = h.values[j], h.values[j + 1]
    slope = (hj1 - hj) / grid.dx
    # hj r + slope r^2 / 2 = target on [0, dx]
    if abs(slope) * grid.dx <= 1e-14 * max(hj, hj1, 1e-300):
        r = target / hj
    else:
        disc = hj * hj + 2.0 * slope * target
        r = 2.0 * target / (hj + math.sqrt(max(disc, 0.0)))
    r = min(max(r, 0.0), grid.dx)
    return float(grid.x_min + j * grid.dx + r)


def price_velocity(h: Field, p: float, D: float) -> float:
    """-D h_x(p) / h(p) from linear interpolation of h and its centred slope."""
    v = K.price_velocity(np.ascontiguousarray(h.values), float(p), float(D), h.grid.x_min, h.grid.dx, H_MIN)
    if not np.isfinite(v):
        raise NumericalInstabilityError(f"h(p) below {H_MIN:g} at p={p:.6g}; price ODE singular")
    return float(v)


def _advance(state: SharpState, D: float, dt: float, nsteps: int) -> SharpState:
    grid = state.grid
    h, p, status, done = K.sharp_advance(
        np.ascontiguousarray(state.h.values), float(state.p), float(D), grid.x_min, grid.dx,
        float(dt), int(nsteps), H_MIN,
    )
    t = state.t + done * dt
    if status == K.SINGULAR:
        raise NumericalInstabilityError(f"h(p) below {H_MIN:g} near t={t:.6g}; price ODE singular")
    if status != K.OK:
        raise NumericalInstabilityError(f"heat flow produced non-finite values near t={t:.6g}")
    return SharpState(state.h.with_values(h), p, t)


def price_ode_step(state: SharpState, D: float, dt: float) -> SharpState:
    """One RK4 step of the coupled (h, p) system.

    The price stages see the RK4 stage values of h, so both unknowns are
    advanced consistently to fourth order in time.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    return _advance(state, D, dt, 1)


def evolve(state: SharpState, D: float, duration: float, dt_max: float) -> SharpState:
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return state
    n = max(1, math.ceil(duration / dt_max * (1 - 1e-12)))
    return _advance(state, D, duration / n, n)


def initial_state(h: Field, m_f: float, t: float = 0.0) -> SharpState:
    return SharpState(h, price_from_mass(h, m_f), t)


def reconstruct_u(state: SharpState) -> Field:
    """u = h left of p and -h right of it.

    With p in the cell [x_j, x_{j+1}], nodes up to j carry +h and the rest -h.
    The trapezoid integral of that profile misses m_f - m_g (m_f being the
    interpolant mass left of p) by a deficit in [-dx h_j, dx h_{j+1}], which
    is absorbed by node j when negative and by node j + 1 when positive.
    Either way the blended value stays within [-h, h].
    """
    h = state.h.values
    grid = state.grid
    s = (state.p - grid.x_min) / grid.dx
    j = min(max(int(math.floor(s)), 0), grid.n_cells - 1)
    u = -h.copy()
    u[: j + 1] = h[: j + 1]
    target = 2.0 * mass_left_of(state.h, state.p) - integrate(state.h)
    deficit = target - float(np.dot(grid.weights, u))
    k = j if deficit < 0 else j + 1
    u[k] = min(max(u[k] + deficit / grid.weights[k], -h[k]), h[k])
    return state.h.with_values(u)


def equilibrium_price(h_I: Field, m_f: float) -> float:
    """Price under the flat steady state, mean(h_I) (p - x_min) = m_f."""
    total = integrate(h_I)
    if not 0 < m_f < total:
        raise ValueError(f"m_f={m_f!r} must lie in (0, {total!r})")
    grid = h_I.grid
    return grid.x_min + m_f / (total / grid.length)


def slowest_decay_rate(grid: Grid1D, D: float) -> float:
    """D (pi / L)^2: decay rate of the first non-constant Neumann mode."""
    return D * (math.pi / grid.length) ** 2
