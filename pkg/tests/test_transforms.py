import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bpfprice import bpf, runner
from bpfprice.bpf import BpfParams, BpfState
from bpfprice.grid import Field, Grid1D, shift, shift_values
from bpfprice.transforms import (
    apply_I_minus_S, apply_I_minus_T, heat_residual, heat_residual_FG, heat_residual_fSg,
    neumann_F, neumann_G, series_length, transform_report,
)

from helpers import bpf_gauss

G9 = Grid1D(0.0, 8.0, 8)


def test_single_term_bands():
    # S samples from the right, so S f vanishes when f lives within a of x_min;
    # symmetrically T g vanishes when g lives within a of x_max.
    v = np.zeros(9)
    v[:2] = [1.0, 2.0]
    assert np.array_equal(neumann_F(Field(G9, v), 2).values, v)
    w = np.zeros(9)
    w[7:] = [3.0, 1.0]
    assert np.array_equal(neumann_G(Field(G9, w), 2).values, w)
    # the mirrored band picks up extra terms
    assert not np.array_equal(neumann_F(Field(G9, w), 2).values, w)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 9, elements=st.floats(-1e3, 1e3)), st.integers(1, 8))
def test_inverse_identities_hold_exactly(v, m):
    f = Field(G9, v)
    scale = 1.0 + np.abs(v).sum()
    assert np.max(np.abs(apply_I_minus_S(neumann_F(f, m), m).values - v)) <= 1e-13 * scale
    assert np.max(np.abs(apply_I_minus_T(neumann_G(f, m), m).values - v)) <= 1e-13 * scale


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
def test_counting_oracle(m):
    F = neumann_F(G9.constant(1.0), m).values
    G = neumann_G(G9.constant(1.0), m).values
    for i in range(9):
        assert F[i] == len([j for j in range(9) if i + j * m <= 8])
        assert G[i] == len([j for j in range(9) if i - j * m >= 0])


def test_series_length():
    g = Grid1D(-1, 1, 400)
    assert series_length(g, 8) == 50
    assert series_length(g, 3) == 134
    with pytest.raises(ValueError):
        series_length(g, 0)
    with pytest.raises(ValueError):
        neumann_F(g.constant(1.0), 0)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 41, elements=st.floats(-10, 10)), arrays(float, 41, elements=st.floats(-10, 10)),
       st.integers(1, 5))
def test_shift_adjointness_away_from_boundary(a, b, m):
    g = Grid1D(-1, 1, 40)
    a, b = a.copy(), b.copy()
    a[:m + 1] = a[-m - 1:] = 0.0
    b[:m + 1] = b[-m - 1:] = 0.0
    lhs = np.dot(g.weights, shift_values(a, m) * b)
    rhs = np.dot(g.weights, a * shift_values(b, -m))
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + np.abs(a).sum() * np.abs(b).sum()))
    back = shift(shift(Field(g, a), m), -m).values
    assert np.array_equal(back, a)


def trajectory(n, dt_out, k, T=0.2):
    cfg = bpf_gauss(n=n, rate=f"k = {k}", a=0.04, T=T, dt_out=dt_out)
    res = runner.simulate(cfg)
    return res.states, cfg.bpf_params()


def test_zero_rate_residual_is_time_differencing_error():
    r = []
    for dt_out in (0.02, 0.01, 0.005):
        states, p = trajectory(200, dt_out, 0.0)
        r.append(heat_residual_FG(states, p))
    assert 3.5 < r[0] / r[1] < 4.5
    assert 3.5 < r[1] / r[2] < 4.5


def test_zero_data_gives_zero_residual():
    g = Grid1D(-1, 1, 50)
    z = g.constant(0.0)
    states = [BpfState(z, z, t) for t in (0.0, 0.1, 0.2, 0.3)]
    p = BpfParams(k=5.0, a=0.04)
    assert heat_residual_FG(states, p) == 0.0
    assert heat_residual_fSg(states, p) == 0.0


def test_no_vendors_reduces_to_heat_residual_of_f():
    g = Grid1D(-1, 1, 100)
    p = BpfParams(k=5.0, a=0.04, sigma=0.3)
    s = BpfState(g.sample(lambda x: np.exp(-((x / 0.2) ** 2))), g.constant(0.0))
    states = [s]
    for _ in range(4):
        states.append(bpf.evolve(states[-1], p, 0.01, bpf.stable_dt(states[-1], p)))
    direct = heat_residual([st_.f.values for st_ in states], g, p.diffusion, 0.01)
    assert heat_residual_fSg(states, p) == pytest.approx(direct, rel=1e-12)


def test_residual_needs_uniform_snapshots():
    states, p = trajectory(100, 0.05, 5.0, T=0.1)
    with pytest.raises(ValueError):
        heat_residual_FG(states[:2], p)
    bad = [states[0], states[1], BpfState(states[2].f, states[2].g, 0.5)]
    with pytest.raises(ValueError):
        heat_residual_fSg(bad, p)


def test_transform_report_fields():
    states, p = trajectory(100, 0.05, 5.0, T=0.2)
    rep = transform_report(states, p, label="x")
    assert rep.series_length == series_length(states[0].grid, 2)
    assert rep.dx == pytest.approx(0.02)
    assert rep.dt_out == pytest.approx(0.05)
    assert rep.metadata == {"label": "x"}
    assert rep.heat_residual_FG > 0 and rep.heat_residual_fSg > 0
