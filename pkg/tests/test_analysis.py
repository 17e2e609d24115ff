import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpfprice import analysis, runner
from bpfprice.analysis import FitResult, PriceSeries, SweepSpec, fit_exponential, fit_loglog
from bpfprice.bpf import BpfState
from bpfprice.errors import ConfigError, FitError
from bpfprice.grid import Grid1D
from bpfprice.hu import HuState

from helpers import bpf_gauss, general_h


def test_fit_exponential_exact():
    t = np.linspace(0, 3, 31)
    fit = fit_exponential(PriceSeries(t, 0.2 + np.exp(-3 * t)), (1, 3), p_inf=0.2)
    assert fit.slope == pytest.approx(-3.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit_exponential(PriceSeries(t, 0.2 - np.exp(-3 * t), 0.2), (0, 1)).slope == pytest.approx(-3.0)


def test_fit_exponential_errors():
    t = np.linspace(0, 3, 31)
    with pytest.raises(FitError, match="underflows"):
        fit_exponential(PriceSeries(t, np.full_like(t, 0.4)), (1, 3), p_inf=0.4)
    with pytest.raises(FitError):
        fit_exponential(PriceSeries(t, t), (1, 3))
    with pytest.raises(FitError):
        fit_exponential(PriceSeries(t, t, 0.0), (5, 6))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_fit_loglog_recovers_power_law(k, c):
    x = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = fit_loglog(x, c * x**k)
    assert fit.slope == pytest.approx(k, abs=1e-9)
    assert 0.0 <= fit.r_squared <= 1.0


def test_fit_loglog_rejects_bad_input():
    with pytest.raises(FitError):
        fit_loglog([1.0], [1.0])
    with pytest.raises(FitError):
        fit_loglog([1.0, 2.0], [0.0, 1.0])


def test_sign_changes_and_segregation():
    assert analysis.sign_changes(np.array([1.0, 0.5, -0.2, -1.0, 0.3])) == 2
    assert analysis.sign_changes(np.array([1.0, 1e-20, -1e-20, 1.0]), tol=1e-12) == 0
    g = Grid1D(-1, 1, 40)
    f = g.sample(lambda x: np.where(x < 0, 1.0, 0.0))
    v = g.sample(lambda x: np.where(x > 0.1, 1.0, 0.0))
    rows = analysis.segregation_metrics([BpfState(f, v, 0.0)])
    assert rows[0]["overlap"] == 0.0
    assert rows[0]["sign_changes"] == 1
    s = HuState(g.constant(1.0), g.sample(lambda x: np.sin(3 * np.pi * x)), 1.0)
    assert analysis.segregation_metrics([s])[0]["sign_changes"] == 5


def test_sweep_spec_validation():
    base = general_h()
    with pytest.raises(ConfigError, match="monotone"):
        SweepSpec("eps_sweep", (0.1, 0.2, 0.15), base)
    with pytest.raises(ConfigError):
        SweepSpec("other", (0.1,), base)
    with pytest.raises(ConfigError):
        SweepSpec("eps_sweep", (0.1,), base, comparison_norm="H1")
    with pytest.raises(ConfigError):
        SweepSpec("eps_sweep", (), base)
    with pytest.raises(ConfigError):
        analysis.run_eps_sweep(SweepSpec("eps_sweep", (0.1,), bpf_gauss()))


def test_single_value_eps_sweep_has_no_fit():
    table = analysis.run_eps_sweep(SweepSpec("eps_sweep", (0.1,), general_h(n=50, T=0.1)))
    assert len(table.rows) == 1 and table.fit is None
    row = table.rows[0]
    assert row["gap_integral"] <= row["bound"]
    for key in ("n_cells", "dx", "dt", "D", "scheme"):
        assert key in row


def test_peclet_resolution():
    cfg = general_h(n=100, physics="epsilon = 0.001\ndiffusion = 1")
    assert analysis.peclet_cells(cfg) == 1000
    assert analysis.peclet_cells(general_h(n=300, physics="epsilon = 0.1\ndiffusion = 1")) == 300


def test_parallel_sweep_matches_serial():
    base = general_h(n=50, T=0.1)
    serial = analysis.run_eps_sweep(SweepSpec("eps_sweep", (0.2, 0.1), base))
    parallel = analysis.run_eps_sweep(SweepSpec("eps_sweep", (0.2, 0.1), base, workers=2))
    assert serial.rows == parallel.rows


def test_ka_sweep_rejects_mismatched_reference():
    base = bpf_gauss(n=200, T=0.1)
    ref = general_h(n=200, physics="epsilon = 0.5\ndiffusion = 0.02", T=0.1)
    with pytest.raises(ConfigError, match="does not match"):
        analysis.run_ka_sweep(SweepSpec("ka_sweep", (0.04, 0.02), base, reference=ref))


def test_ka_sweep_smallest_cost_is_first_order_in_dx():
    # with a = dx the kinetic model is a first-order discretisation of the
    # limit drift, so halving dx (and a with it) halves the distance
    d = []
    for n in (200, 400):
        base = bpf_gauss(n=n, a=2.0 / n, T=0.5)
        table = analysis.run_ka_sweep(SweepSpec("ka_sweep", (2.0 / n,), base))
        d.append(table.rows[0]["distance"])
    assert 1.8 < d[0] / d[1] < 2.2


def test_grid_refinement_sweep():
    base = general_h(n=100, physics="epsilon = 0.1\ndiffusion = 0.1", T=0.5, dt_out=0.5, amp=0.5, steep=8)
    table = analysis.run_grid_refinement(SweepSpec("grid_refinement", (100, 200, 400, 800), base))
    assert len(table.rows) == 3
    assert table.fit.slope >= 1.8
    with pytest.raises(ConfigError):
        analysis.run_grid_refinement(SweepSpec("grid_refinement", (100, 150), base))


def test_price_series_from_run():
    res = runner.simulate(general_h(n=100, T=0.2, dt_out=0.05))
    ps = analysis.price_series(res)
    assert ps.t.size == 5 and np.all(np.isfinite(ps.p))
    assert isinstance(fit_loglog([1, 2], [1, 4]), FitResult)
    assert math.isclose(fit_loglog([1, 2], [1, 4]).slope, 2.0)
