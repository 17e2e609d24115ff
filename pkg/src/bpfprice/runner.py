"""Run orchestration, diagnostics and deterministic CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bpf, hu, sharp
from .config import RunConfig
from .errors import BpfError, ConfigError, NoInterfaceError, NoTradesError
from .grid import Field, Grid1D, central_diff_values, integrate, norm

DIAGNOSTIC_COLUMNS = (
    "t", "mass_f", "mass_g", "mass_h", "mass_u", "price_zero_crossing", "price_mass",
    "price_argmax_mu", "price_mean_mu", "price_median_mu", "gap_h2_u2", "max_u2_minus_h2",
    "overlap_fg", "max_ux", "dt_used",
)
SNAPSHOT_COLUMNS = ("x", "f", "g", "h", "u", "mu")


@dataclass
class RunResult:
    config: RunConfig
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    dt_max: float = 0.0
    worst_excess: float = -math.inf
    derived: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.diagnostics])


def output_times(T: float, dt_out: float) -> list[float]:
    """Diagnostics times i * dt_out up to T, with T itself always included."""
    if T <= 0:
        return [0.0]
    count = int(math.floor(T / dt_out + 1e-9))
    times = [i * dt_out for i in range(count + 1)]
    if T - times[-1] > 1e-12 * T:
        times.append(float(T))
    else:
        times[-1] = float(T)
    return times


def _merge_times(diag, snaps, T):
    tol = 1e-12 * max(T, 1.0)
    events = sorted(set(diag) | set(snaps))
    merged = []
    for t in events:
        if merged and t - merged[-1] <= tol:
            continue
        merged.append(t)
    return merged


def _matches(t, times, T):
    tol = 1e-12 * max(T, 1.0)
    return any(abs(t - s) <= tol for s in times)


def fg_hu_arrays(state):
    """(f, g, h, u) node arrays for any model state."""
    if isinstance(state, bpf.BpfState):
        f, g = state.f.values, state.g.values
        return f, g, f + g, f - g
    if isinstance(state, hu.HuState):
        h, u = state.h.values, state.u.values
    else:
        h, u = state.h.values, sharp.reconstruct_u(state).values
    return 0.5 * (h + u), 0.5 * (h - u), h, u


def diagnostics_row(state, grid: Grid1D, mu: np.ndarray | None, dt_used: float,
                    previous_price: float | None, m_f: float | None = None) -> dict:
    f, g, h, u = fg_hu_arrays(state)
    w = grid.weights
    mass_f = float(np.dot(w, f))
    row = {
        "t": float(state.t),
        "mass_f": mass_f,
        "mass_g": float(np.dot(w, g)),
        "mass_h": float(np.dot(w, h)),
        "mass_u": float(np.dot(w, u)),
        "gap_h2_u2": float(np.dot(w, h * h - u * u)),
        "max_u2_minus_h2": float(np.max(u * u - h * h)),
        "overlap_fg": float(np.dot(w, f * g)),
        "max_ux": float(np.max(central_diff_values(u, grid.dx))),
        "dt_used": float(dt_used),
        "price_zero_crossing": None,
        "price_mass": None,
        "price_argmax_mu": None,
        "price_mean_mu": None,
        "price_median_mu": None,
    }
    if isinstance(state, sharp.SharpState):
        row["price_zero_crossing"] = float(state.p)
    else:
        try:
            row["price_zero_crossing"] = hu.price_from_u(
                hu.HuState(Field(grid, h), Field(grid, u), state.t), previous_price
            )
        except NoInterfaceError:
            pass
    target = mass_f if m_f is None else m_f
    if np.all(h >= 0):
        try:
            row["price_mass"] = sharp.price_from_mass(Field(grid, h), target)
        except ValueError:
            pass
    if mu is not None:
        try:
            est = bpf.price_estimates(Field(grid, mu))
            row["price_argmax_mu"], row["price_mean_mu"], row["price_median_mu"] = est
        except NoTradesError:
            pass
    return row


def _snapshot(state, grid, mu):
    f, g, h, u = fg_hu_arrays(state)
    return {"x": np.asarray(grid.x), "f": f, "g": g, "h": h, "u": u, "mu": mu}


def initial_state(config: RunConfig):
    grid = config.grid
    f, g = config.initial_fg()
    fF, gF = Field(grid, f), Field(grid, g)
    if config.model == "bpf":
        return bpf.BpfState.initial(fF, gF)
    if config.model == "sharp":
        return sharp.initial_state(fF.with_values(f + g), integrate(fF))
    state = hu.from_fg(fF, gF)
    if config.model == "burgers":
        state = hu.HuState(grid.constant(1.0), state.u, 0.0)
    return state


def max_step(config: RunConfig, state) -> float:
    if config.dt_override is not None:
        return float(config.dt_override)
    grid = config.grid
    if config.model == "bpf":
        return bpf.stable_dt(state, config.bpf_params(), config.safety)
    if config.model == "sharp":
        return sharp.heat_stable_dt(grid, config.D, config.safety)
    return hu.stable_dt(grid, config.hu_params(), float(np.max(np.abs(state.h.values))), config.safety)


def derived_quantities(config: RunConfig, state, dt_max: float) -> dict:
    grid = config.grid
    out = {"dx": grid.dx, "n_nodes": grid.n_nodes, "D": config.D, "dt": dt_max,
           "dt_out": config.effective_dt_out}
    c = config.trading_intensity
    if c is not None:
        out["c"] = c
    if config.model == "bpf":
        out["k"] = config.rate
        out["a_nodes"] = grid.nodes_for(config.a)
    elif config.model in ("hu", "burgers"):
        out["epsilon"] = config.eps
        out["cell_peclet"] = hu.cell_peclet(grid, config.hu_params(), float(np.max(np.abs(state.h.values))))
    return out


def simulate(config: RunConfig, keep_states: bool = True) -> RunResult:
    """Run the configured model and collect diagnostics and snapshots.

    States are stored at every diagnostics time (``keep_states``); snapshot
    times are hit exactly by splitting the step sequence there.
    """
    grid = config.grid
    state = initial_state(config)
    dt_max = max_step(config, state)
    result = RunResult(config=config, dt_max=dt_max)
    result.derived = derived_quantities(config, state, dt_max)
    T = float(config.T)
    diag = output_times(T, config.effective_dt_out)
    snaps = config.effective_snapshots
    events = _merge_times(diag, snaps, T)

    h_bound = None
    m_f = None
    if config.model in ("hu", "burgers"):
        params = config.hu_params()
        h_bound = float(np.max(np.abs(state.h.values)))
        m_f = 0.5 * (integrate(state.h) + integrate(state.u))
    elif config.model == "bpf":
        params = config.bpf_params()
    else:
        params = None
        m_f = state.buyer_mass

    def mu_of(s):
        if config.model != "bpf":
            return None
        return params.k * s.f.values * s.g.values

    previous_price = None
    dt_used = 0.0
    t_prev = 0.0
    for t in events:
        if t > t_prev:
            span = t - t_prev
            if config.model in ("hu", "burgers"):
                state, worst = hu.evolve(state, params, span, dt_max, h_bound)
                result.worst_excess = max(result.worst_excess, worst)
                state = hu.HuState(state.h, state.u, t)
            elif config.model == "bpf":
                state = bpf.evolve(state, params, span, dt_max)
                state = bpf.BpfState(state.f, state.g, t)
            else:
                state = sharp.evolve(state, config.D, span, dt_max)
                state = sharp.SharpState(state.h, state.p, t)
            dt_used = hu.steps_for(span, dt_max)[1]
            t_prev = t
        mu = mu_of(state)
        if _matches(t, diag, T):
            row = diagnostics_row(state, grid, mu, dt_used, previous_price, m_f)
            if row["price_zero_crossing"] is not None:
                previous_price = row["price_zero_crossing"]
            result.diagnostics.append(row)
            result.times.append(t)
            if keep_states:
                result.states.append(state)
        if _matches(t, snaps, T):
            result.snapshots[t] = _snapshot(state, grid, mu)
    if not keep_states:
        result.states.append(state)
    return result


# --- files ----------------------------------------------------------------


def format_float(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    return "%.17g" % v


def format_time(t: float) -> str:
    return np.format_float_positional(float(t), trim="-")


def header_lines(config: RunConfig, derived: dict) -> list[str]:
    lines = [f"# {k} = {v}" for k, v in config.as_items()]
    lines += [f"# derived.{k} = {format_float(v) if isinstance(v, float) else v}"
              for k, v in derived.items()]
    return lines


def _write_csv(path: Path, header: list[str], columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_float(v) for v in row])


def write_run(result: RunResult, output_dir: str | Path) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = header_lines(result.config, result.derived)
    paths = []
    diag_path = out / "diagnostics.csv"
    _write_csv(diag_path, header, DIAGNOSTIC_COLUMNS,
               ([r[c] for c in DIAGNOSTIC_COLUMNS] for r in result.diagnostics))
    paths.append(diag_path)
    for t, snap in sorted(result.snapshots.items()):
        p = out / f"snapshot_{format_time(t)}.csv"
        n = snap["x"].size
        cols = [snap[c] if snap[c] is not None else [None] * n for c in SNAPSHOT_COLUMNS]
        _write_csv(p, header, SNAPSHOT_COLUMNS, zip(*cols))
        paths.append(p)
    return paths


def read_csv(path: str | Path) -> tuple[dict, dict]:
    """Return (header key/value dict, columns).

    Numeric columns become float arrays with NaN for empty cells; any other
    column is returned as an object array of strings.
    """
    meta = {}
    body = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            else:
                body.append(line)
    rows = list(csv.reader(body))
    names = rows[0]
    data = {}
    for i, n in enumerate(names):
        cells = [r[i] for r in rows[1:]]
        try:
            data[n] = np.array([float(c) if c != "" else np.nan for c in cells])
        except ValueError:
            data[n] = np.array(cells, dtype=object)
    return meta, data


def _snapshot_files(run_dir: Path) -> dict[float, Path]:
    out = {}
    for p in run_dir.glob("snapshot_*.csv"):
        out[float(p.stem[len("snapshot_"):])] = p
    return out


def compare(run_dir_a, run_dir_b, norm_kind: str = "L1", field_name: str = "u") -> dict[float, float]:
    """Norm of the difference of one snapshot field, per common snapshot time.

    Runs on nested grids are compared on the coarser grid's nodes.
    """
    a, b = _snapshot_files(Path(run_dir_a)), _snapshot_files(Path(run_dir_b))
    if not a or sorted(a) != sorted(b):
        raise ConfigError(f"snapshot times differ: {sorted(a)} vs {sorted(b)}")
    if field_name not in SNAPSHOT_COLUMNS[1:]:
        raise ConfigError(f"unknown field {field_name!r}")
    out = {}
    for t in sorted(a):
        _, da = read_csv(a[t])
        _, db = read_csv(b[t])
        xa, xb = da["x"], db["x"]
        va, vb = da[field_name], db[field_name]
        if xa.size > xb.size:
            xa, xb, va, vb = xb, xa, vb, va
        if (xb.size - 1) % (xa.size - 1):
            raise ConfigError("grids are not nested")
        stride = (xb.size - 1) // (xa.size - 1)
        xb, vb = xb[::stride], vb[::stride]
        if not np.allclose(xa, xb, rtol=0, atol=1e-9 * max(1.0, np.ptp(xa))):
            raise ConfigError("grid nodes do not match")
        grid = Grid1D(float(xa[0]), float(xa[-1]), xa.size - 1)
        out[t] = norm(va - vb, grid, norm_kind)
    return out


def run_config(config: RunConfig, output_dir: str | Path | None = None) -> RunResult:
    """Simulate and, when a directory is known, write the output files."""
    result = simulate(config)
    target = output_dir if output_dir is not None else config.output_dir
    if target is not None:
        write_run(result, target)
    return result


__all__ = [
    "BpfError", "RunResult", "simulate", "run_config", "write_run", "compare", "read_csv",
    "output_times", "DIAGNOSTIC_COLUMNS", "SNAPSHOT_COLUMNS",
]
