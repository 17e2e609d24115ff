"""Parameter sweeps, fits and segregation metrics built on the solvers."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import hu, sharp
from .config import RunConfig
from .errors import BpfError, ConfigError, FitError
from .grid import norm
from .hu import Scheme
from .runner import fg_hu_arrays, simulate

SWEEP_KINDS = ("eps_sweep", "ka_sweep", "grid_refinement")
NORMS = ("L1", "L2", "Linf")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class PriceSeries:
    t: np.ndarray
    p: np.ndarray
    p_inf: float | None = None


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    values: tuple
    base_config: RunConfig
    comparison_norm: str = "L1"
    resolve_peclet: bool = False
    workers: int = 1
    reference: RunConfig | None = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.kind!r}")
        if self.comparison_norm not in NORMS:
            raise ConfigError(f"unknown norm {self.comparison_norm!r}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        d = np.diff(vals)
        if d.size and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("sweep values must be strictly monotone")
        object.__setattr__(self, "values", vals)


@dataclass
class SweepTable:
    """Rows of scalars (one per sweep value) plus the final states."""

    rows: list
    fit: FitResult | None = None
    columns: tuple = ()
    finals: list = field(default_factory=list)


def fit_loglog(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if xs.size < 2 or np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("log-log fit needs >= 2 strictly positive points")
    return _affine_fit(np.log(xs), np.log(ys))


def _affine_fit(X, Y) -> FitResult:
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return FitResult(float(slope), float(intercept), min(r2, 1.0))


def fit_exponential(series: PriceSeries, window: tuple[float, float], p_inf: float | None = None) -> FitResult:
    """Affine least-squares fit of log|p(t) - p_inf| for t in ``window``.

    The decay rate is minus the slope.
    """
    p_inf = series.p_inf if p_inf is None else p_inf
    if p_inf is None:
        raise FitError("p_inf is required")
    t, p = np.asarray(series.t, float), np.asarray(series.p, float)
    t0, t1 = window
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    if sel.sum() < 2:
        raise FitError(f"fewer than 2 samples in window {window}")
    dev = np.abs(p[sel] - p_inf)
    if np.any(dev < 1e-14):
        bad = t[sel][np.argmax(dev < 1e-14)]
        raise FitError(f"|p - p_inf| underflows 1e-14 at t={bad:.6g}; fit an earlier window")
    return _affine_fit(t[sel], np.log(dev))


def sign_changes(u: np.ndarray, tol: float = 0.0) -> int:
    """Sign changes of u, ignoring entries with |u| <= tol."""
    s = np.sign(u[np.abs(u) > tol])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def segregation_metrics(trajectory, rel_tol: float = 1e-8) -> list[dict]:
    """Per state: t, overlap = trapezoid of f g, sign changes of u.

    Entries with |u| <= rel_tol * max h are treated as zero so that round-off
    around an exactly vanishing u does not count.
    """
    rows = []
    for s in trajectory:
        f, g, h, u = fg_hu_arrays(s)
        w = s.grid.weights
        tol = rel_tol * float(np.max(np.abs(h)))
        rows.append({"t": float(s.t), "overlap": float(np.dot(w, f * g)),
                     "sign_changes": sign_changes(u, tol)})
    return rows


def peclet_cells(cfg: RunConfig) -> int:
    """Smallest n_cells with cell Peclet number <= 1 (at least the configured one)."""
    f, g = cfg.initial_fg()
    hmax = float(np.max(f + g))
    need = math.ceil((cfg.x_max - cfg.x_min) * hmax / (2.0 * cfg.eps * cfg.D) * (1 - 1e-12))
    return max(cfg.n_cells, need)


def _parallel_map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sharp_counterpart(cfg: RunConfig) -> RunConfig:
    """Sharp-interface run with the same grid, data, D and output times."""
    return cfg.replace(model="sharp", epsilon=None, c=None, freeze_h=False,
                       scheme=Scheme.PAPER_CENTRAL, diffusion=cfg.D, sigma=None)


def _run_info(cfg: RunConfig, result) -> dict:
    return {"n_cells": cfg.n_cells, "dx": cfg.grid.dx, "dt": result.dt_max, "D": cfg.D,
            "scheme": cfg.scheme.value, "dt_out": cfg.effective_dt_out}


def _eps_member(args) -> dict:
    cfg, norm_kind = args
    try:
        res = simulate(cfg)
    except BpfError as exc:
        raise type(exc)(f"epsilon={cfg.eps!r}: {exc}") from exc
    ref = simulate(sharp_counterpart(cfg), keep_states=False).final
    final = res.final
    h_max = float(np.max(np.abs(res.states[0].h.values)))
    gap = hu.gap_integral(res.states)
    u_sharp = sharp.reconstruct_u(ref).values
    row = {"epsilon": cfg.eps, "gap_integral": gap,
           "bound": hu.moment_bound(cfg.eps, cfg.T, h_max),
           "distance": norm(final.u.values - u_sharp, cfg.grid, norm_kind),
           "worst_excess": res.worst_excess,
           "max_u2_minus_h2": max(r["max_u2_minus_h2"] for r in res.diagnostics),
           "max_ux": max(r["max_ux"] for r in res.diagnostics),
           "mass_u_drift": abs(res.diagnostics[-1]["mass_u"] - res.diagnostics[0]["mass_u"]),
           "h_max": h_max}
    row.update(_run_info(cfg, res))
    return row, final


def run_eps_sweep(spec: SweepSpec) -> SweepTable:
    """Gap integral and distance to the sharp limit for each epsilon.

    Rows carry the effective grid, step and scheme so each one can be re-run.
    A slope is fitted to log(gap) against log(eps) when there are >= 2 rows.
    """
    if spec.kind != "eps_sweep":
        raise ConfigError("run_eps_sweep needs kind 'eps_sweep'")
    base = spec.base_config
    if base.model not in ("hu", "burgers"):
        raise ConfigError("epsilon sweeps need model hu or burgers")
    cfgs = []
    for eps in spec.values:
        cfg = base.replace(epsilon=eps, c=None)
        if spec.resolve_peclet:
            cfg = cfg.replace(n_cells=peclet_cells(cfg))
        cfgs.append(cfg)
    out = _parallel_map(_eps_member, [(c, spec.comparison_norm) for c in cfgs], spec.workers)
    rows = [r for r, _ in out]
    for r in rows:
        r["within_bound"] = r["gap_integral"] <= r["bound"]
    fit = None
    if len(rows) >= 2:
        fit = fit_loglog([r["epsilon"] for r in rows], [r["gap_integral"] for r in rows])
    return SweepTable(rows, fit, tuple(rows[0]), [f for _, f in out])


def hu_reference(cfg: RunConfig) -> RunConfig:
    """The limit-system run matching a bpf config: eps = 1/c, same D and data."""
    return cfg.replace(model="hu", epsilon=1.0 / cfg.trading_intensity, k=None, a=None, c=None,
                       diffusion=cfg.D, sigma=None)


def _ka_member(args) -> dict:
    cfg, ref_final, norm_kind = args
    try:
        res = simulate(cfg, keep_states=False)
    except BpfError as exc:
        raise type(exc)(f"a={cfg.a!r}: {exc}") from exc
    f, g, _, _ = fg_hu_arrays(res.final)
    fr, gr, _, _ = fg_hu_arrays(ref_final)
    d0, d1 = res.diagnostics[0], res.diagnostics[-1]
    row = {"a": cfg.a, "a_nodes": cfg.grid.nodes_for(cfg.a), "k": cfg.rate,
           "c": cfg.trading_intensity,
           "distance": norm(f - fr, cfg.grid, norm_kind) + norm(g - gr, cfg.grid, norm_kind),
           "mass_f_drift": abs(d1["mass_f"] - d0["mass_f"]) / d0["mass_f"],
           "mass_g_drift": abs(d1["mass_g"] - d0["mass_g"]) / d0["mass_g"],
           "max_u2_minus_h2": max(r["max_u2_minus_h2"] for r in res.diagnostics),
           "h_max": float(np.max(np.add(*cfg.initial_fg())))}
    row.update(_run_info(cfg, res))
    return row, res.final


def run_ka_sweep(spec: SweepSpec) -> SweepTable:
    """BPF runs with k = c / a for each a, against one limit-system reference.

    The distance is the chosen norm of f - f_ref plus that of g - g_ref at T.
    """
    if spec.kind != "ka_sweep":
        raise ConfigError("run_ka_sweep needs kind 'ka_sweep'")
    base = spec.base_config
    if base.model != "bpf":
        raise ConfigError("ka sweeps need a bpf base config")
    c = base.trading_intensity
    ref_cfg = spec.reference if spec.reference is not None else hu_reference(base)
    c_ref = ref_cfg.trading_intensity
    if c_ref is None or not math.isclose(c_ref, c, rel_tol=1e-12):
        raise ConfigError(f"reference trading intensity c={c_ref!r} does not match bpf c={c!r}")
    if ref_cfg.grid != base.grid:
        raise ConfigError("reference and bpf runs must share one grid")
    ref_final = simulate(ref_cfg, keep_states=False).final
    cfgs = [base.replace(a=a, k=None, c=c) for a in spec.values]
    out = _parallel_map(_ka_member, [(cf, ref_final, spec.comparison_norm) for cf in cfgs], spec.workers)
    rows = [r for r, _ in out]
    return SweepTable(rows, None, tuple(rows[0]), [f for _, f in out])


def _final_state(cfg: RunConfig):
    return simulate(cfg, keep_states=False).final


def run_grid_refinement(spec: SweepSpec) -> SweepTable:
    """Self-convergence of u(T) over nested grids.

    ``values`` are n_cells; each row holds the difference between a level and
    the next finer one, restricted to the coarse nodes.  The fitted slope of
    log(difference) against log(dx) is the observed order.
    """
    if spec.kind != "grid_refinement":
        raise ConfigError("run_grid_refinement needs kind 'grid_refinement'")
    ns = [int(v) for v in spec.values]
    if any(b % a for a, b in zip(ns, ns[1:])) or ns != sorted(ns):
        raise ConfigError("grid refinement needs increasing nested n_cells")
    cfgs = [spec.base_config.replace(n_cells=n) for n in ns]
    finals = _parallel_map(_final_state, cfgs, spec.workers)
    us = [fg_hu_arrays(s)[3] for s in finals]
    rows = []
    for cfg, u, n_fine, u_fine in zip(cfgs, us, ns[1:], us[1:]):
        stride = n_fine // cfg.n_cells
        rows.append({"n_cells": cfg.n_cells, "dx": cfg.grid.dx,
                     "difference": norm(u - u_fine[::stride], cfg.grid, spec.comparison_norm)})
    fit = None
    if len(rows) >= 2:
        fit = fit_loglog([r["dx"] for r in rows], [r["difference"] for r in rows])
    return SweepTable(rows, fit, tuple(rows[0]) if rows else (), finals)


def run_sweep(spec: SweepSpec) -> SweepTable:
    return {"eps_sweep": run_eps_sweep, "ka_sweep": run_ka_sweep,
            "grid_refinement": run_grid_refinement}[spec.kind](spec)


def price_series(result) -> PriceSeries:
    """Zero-crossing price against time from a run's diagnostics."""
    t = result.column("t")
    p = result.column("price_zero_crossing")
    ok = np.isfinite(p)
    return PriceSeries(t[ok], p[ok])


__all__ = [
    "FitResult", "PriceSeries", "SweepSpec", "SweepTable", "fit_loglog", "fit_exponential",
    "segregation_metrics", "sign_changes", "run_eps_sweep", "run_ka_sweep",
    "run_grid_refinement", "run_sweep", "peclet_cells", "sharp_counterpart", "hu_reference",
    "price_series",
]
