import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bpfprice import sharp
from bpfprice.errors import NumericalInstabilityError
from bpfprice.grid import Field, Grid1D, cumulative_integral, integrate
from bpfprice.sharp import SharpState, equilibrium_price, price_from_mass, reconstruct_u

G = Grid1D(-1, 1, 200)


def test_heat_step_constant_and_mass():
    c = G.constant(0.7)
    assert np.array_equal(sharp.heat_evolve(c, 1.0, 0.1, sharp.heat_stable_dt(G, 1.0)).values, c.values)
    h = G.sample(lambda x: 1 + 0.5 * np.exp(-(((x - 0.3) / 0.2) ** 2)))
    out = sharp.heat_evolve(h, 1.0, 1.0, sharp.heat_stable_dt(G, 1.0))
    assert abs(integrate(out) - integrate(h)) <= 1e-12 * integrate(h)
    one = sharp.heat_step(h, 1.0, 1e-5)
    assert abs(integrate(one) - integrate(h)) <= 1e-14 * integrate(h)
    assert sharp.heat_step(h, 1.0, 0.0) is h


def test_lowest_neumann_mode_decay():
    D = 0.5
    mode = np.cos(np.pi * (G.x + 1) / 2)
    h = G.sample(lambda x: 1 + 0.5 * np.cos(np.pi * (x + 1) / 2))
    out = sharp.heat_evolve(h, D, 1.0, sharp.heat_stable_dt(G, D))
    amp = np.dot(G.weights, (out.values - 1.0) * mode) / np.dot(G.weights, mode * mode)
    expected = 0.5 * math.exp(-D * (math.pi / 2) ** 2)
    assert amp == pytest.approx(expected, rel=0.01)


def test_price_from_mass_flat_profile():
    one = G.constant(1.0)
    assert price_from_mass(one, 1.0) == pytest.approx(0.0, abs=1e-14)
    # m_f - m_g = 0.5 with total mass 2
    assert price_from_mass(one, 1.25) == pytest.approx(0.25, abs=1e-14)


def test_price_from_mass_concentrated_density():
    h = G.sample(lambda x: np.where(x < 0, 2.0, 0.0) + 1e-3)
    m_f = 0.5 * integrate(h)
    p = price_from_mass(h, m_f)
    cum = cumulative_integral(h)
    j = int(np.argmax(cum >= m_f))
    assert G.x[j - 1] <= p <= G.x[j]
    assert -1 < p < 0


def test_price_from_mass_errors():
    one = G.constant(1.0)
    for bad in (0.0, -1.0, 2.5):
        with pytest.raises(ValueError):
            price_from_mass(one, bad)
    with pytest.raises(ValueError):
        price_from_mass(G.constant(-1.0), 0.5)


def bisect_mass(h, m):
    lo, hi = h.grid.x_min, h.grid.x_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sharp.mass_left_of(h, mid) < m:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 21, elements=st.floats(0.01, 5.0)), st.floats(0.01, 0.99))
def test_price_from_mass_agrees_with_bisection(vals, frac):
    h = Field(Grid1D(-1, 1, 20), vals)
    m = frac * integrate(h)
    p = price_from_mass(h, m)
    assert abs(sharp.mass_left_of(h, p) - m) <= 1e-12 * integrate(h)
    assert abs(p - bisect_mass(h, m)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(arrays(float, 21, elements=st.floats(0.0, 5.0)), st.floats(0.01, 0.49), st.floats(0.5, 0.99))
def test_price_from_mass_is_monotone(vals, f1, f2):
    vals = vals + 1e-6
    h = Field(Grid1D(-1, 1, 20), vals)
    total = integrate(h)
    assert price_from_mass(h, f1 * total) <= price_from_mass(h, f2 * total)


def test_price_ode_flat_density_freezes_price():
    s = SharpState(G.constant(1.0), 0.2)
    out = sharp.evolve(s, 1.0, 0.5, sharp.heat_stable_dt(G, 1.0))
    assert out.p == pytest.approx(0.2, abs=1e-14)
    assert out.t == pytest.approx(0.5)


def test_price_ode_moves_against_the_gradient():
    h = G.sample(lambda x: 1 + 0.5 * x)
    assert sharp.price_velocity(h, 0.1, 1.0) < 0
    s = SharpState(h, 0.1)
    out = sharp.price_ode_step(s, 1.0, 1e-4)
    assert out.p < 0.1


def test_price_ode_singular_density():
    h = G.sample(lambda x: np.maximum(x - 0.2, 0.0) ** 2)
    with pytest.raises(NumericalInstabilityError):
        sharp.price_velocity(h, 0.0, 1.0)
    with pytest.raises(NumericalInstabilityError):
        sharp.price_ode_step(SharpState(h, -0.5), 1.0, 1e-5)


def test_price_ode_tracks_mass_split_on_short_run():
    h = G.sample(lambda x: 0.3 + 0.7 * np.exp(-(((x - 0.3) / 0.4) ** 2)))
    s = sharp.initial_state(h, 0.4 * integrate(h))
    m_f = s.buyer_mass
    for _ in range(5):
        s = sharp.evolve(s, 1.0, 0.1, sharp.heat_stable_dt(G, 1.0))
        assert abs(s.p - price_from_mass(s.h, m_f)) < 1e-4


def test_state_validation():
    with pytest.raises(ValueError):
        SharpState(G.constant(1.0), 1.0)


def test_reconstruct_u_flat_profile_at_node():
    s = SharpState(G.constant(1.0), float(G.x[120]))
    u = reconstruct_u(s).values
    assert np.all(u[:120] == 1.0)
    assert np.all(u[121:] == -1.0)
    m_f = s.buyer_mass
    assert integrate(Field(G, u)) == pytest.approx(m_f - (2.0 - m_f), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 41, elements=st.floats(0.05, 3.0)), st.floats(0.02, 0.98))
def test_reconstruct_u_mass_and_bound(vals, frac):
    h = Field(Grid1D(-1, 1, 40), vals)
    s = sharp.initial_state(h, frac * integrate(h))
    u = reconstruct_u(s)
    m_f = s.buyer_mass
    assert abs(integrate(u) - (2 * m_f - integrate(h))) <= 1e-10
    assert np.all(np.abs(u.values) <= h.values * (1 + 1e-12))


def test_equilibrium_price():
    one = G.constant(1.0)
    assert equilibrium_price(one, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert equilibrium_price(one, 1.5) == pytest.approx(0.5)
    h = G.sample(lambda x: 1 + 0.4 * np.cos(np.pi * (x + 1) / 2))
    # heat flow keeps the mass, so the mass split of the mean is the limit
    late = sharp.heat_evolve(h, 1.0, 6.0, sharp.heat_stable_dt(G, 1.0))
    assert price_from_mass(late, 0.7) == pytest.approx(equilibrium_price(h, 0.7), abs=1e-5)
    with pytest.raises(ValueError):
        equilibrium_price(one, 2.5)
    assert sharp.slowest_decay_rate(G, 2.0) == pytest.approx(2.0 * (math.pi / 2) ** 2)
