"""Run configuration: ``key = value`` text, validation and initial data.

Keys::

    model            bpf | hu | burgers | sharp
    x_min, x_max     domain (default -1, 1)
    n_cells          number of grid cells
    sigma            volatility; sets D = sigma^2 / 2
    diffusion        D directly (must agree with sigma when both are given)
    epsilon          inverse trading intensity (hu, burgers; optional for sharp)
    k, a, c          rate, transaction cost, c = k a (bpf; give two of three)
    T, dt_out        horizon and diagnostics cadence
    dt_override      fixed maximum step instead of the stability policy
    snapshot_times   comma list inside [0, T] (default "0, T")
    scheme           paper_central | flux_conservative
    freeze_h         true | false (forced true for burgers)
    safety           factor on the stability limits (default 0.4)
    output_dir       where ``run`` writes its files
    init.f.kind      gaussian_bump | bump_sum | tanh_profile | file
    init.f.<param>   parameters of that kind; likewise init.g.*
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .bpf import BpfParams
from .errors import ConfigError
from .grid import Grid1D
from .hu import HuParams, Scheme

MODELS = ("bpf", "hu", "burgers", "sharp")

SCALAR_KEYS = {
    "model", "x_min", "x_max", "n_cells", "sigma", "diffusion", "epsilon", "k", "a", "c",
    "T", "dt_out", "dt_override", "snapshot_times", "scheme", "freeze_h", "output_dir", "safety",
}

INIT_PARAMS = {
    "gaussian_bump": {"amplitude", "center", "width", "offset"},
    "bump_sum": {"amplitudes", "centers", "widths", "offset"},
    "tanh_profile": {
        "offset", "amplitude", "center", "steepness",
        "envelope_offset", "envelope_amplitude", "envelope_center", "envelope_width",
    },
    "file": {"path"},
}

_INIT_KEY = re.compile(r"^init\.([fg])\.([a-z_]+)$")


@dataclass(frozen=True)
class InitialDataSpec:
    """Smooth nonnegative initial density, sampled on demand."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in INIT_PARAMS:
            raise ConfigError(f"unknown initial data kind {self.kind!r}")
        unknown = set(self.params) - INIT_PARAMS[self.kind]
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for kind {self.kind!r}")

    def _num(self, name, default=None):
        v = self.params.get(name, default)
        if v is None:
            raise ConfigError(f"initial data kind {self.kind!r} needs {name!r}")
        return float(v)

    def _list(self, name):
        v = self.params.get(name)
        if v is None:
            raise ConfigError(f"initial data kind {self.kind!r} needs {name!r}")
        if isinstance(v, str):
            return [float(s) for s in v.split(",") if s.strip()]
        return [float(s) for s in np.atleast_1d(v)]

    def sample(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian_bump":
            width = self._num("width")
            if width <= 0:
                raise ConfigError("width must be > 0")
            return self._num("offset", 0.0) + self._num("amplitude", 1.0) * np.exp(
                -(((x - self._num("center", 0.0)) / width) ** 2)
            )
        if self.kind == "bump_sum":
            amps, cens, wids = self._list("amplitudes"), self._list("centers"), self._list("widths")
            if not len(amps) == len(cens) == len(wids) or not amps:
                raise ConfigError("amplitudes, centers and widths must have equal nonzero length")
            if min(wids) <= 0:
                raise ConfigError("widths must be > 0")
            out = np.full_like(x, self._num("offset", 0.0))
            for A, c0, w in zip(amps, cens, wids):
                out += A * np.exp(-(((x - c0) / w) ** 2))
            return out
        if self.kind == "tanh_profile":
            base = self._num("offset", 0.0) + self._num("amplitude") * np.tanh(
                self._num("steepness") * (x - self._num("center", 0.0))
            )
            env_amp = self._num("envelope_amplitude", 0.0)
            env = self._num("envelope_offset", 1.0)
            if env_amp != 0.0:
                ew = self._num("envelope_width")
                if ew <= 0:
                    raise ConfigError("envelope_width must be > 0")
                env = env + env_amp * np.exp(-(((x - self._num("envelope_center", 0.0)) / ew) ** 2))
            return base * env
        return _read_profile(self.params.get("path"), x)


def _read_profile(path, x):
    if not path:
        raise ConfigError("initial data kind 'file' needs 'path'")
    rows = []
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(line for line in fh if not line.lstrip().startswith("#")):
                if not row:
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header
    except OSError as exc:
        raise ConfigError(f"cannot read initial data file {path!r}: {exc}") from exc
    if len(rows) < 2:
        raise ConfigError(f"initial data file {path!r} has fewer than 2 data rows")
    xs, vs = np.array(rows).T
    order = np.argsort(xs)
    xs, vs = xs[order], vs[order]
    if xs[0] > x[0] + 1e-12 or xs[-1] < x[-1] - 1e-12:
        raise ConfigError(f"initial data file {path!r} does not cover the grid")
    return np.interp(x, xs, vs)


@dataclass(frozen=True)
class RunConfig:
    model: str
    init_f: InitialDataSpec
    init_g: InitialDataSpec
    T: float
    x_min: float = -1.0
    x_max: float = 1.0
    n_cells: int = 400
    sigma: float | None = None
    diffusion: float | None = None
    epsilon: float | None = None
    k: float | None = None
    a: float | None = None
    c: float | None = None
    dt_out: float | None = None
    dt_override: float | None = None
    snapshot_times: tuple = ()
    scheme: Scheme = Scheme.PAPER_CENTRAL
    freeze_h: bool = False
    safety: float = 0.4
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if self.model == "burgers":
            object.__setattr__(self, "freeze_h", True)
        validate(self)

    # derived quantities -------------------------------------------------

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.x_min, self.x_max, self.n_cells)

    @property
    def D(self) -> float:
        if self.diffusion is not None:
            return float(self.diffusion)
        if self.sigma is not None:
            return 0.5 * self.sigma**2
        return 0.5 if self.model == "bpf" else 1.0

    @property
    def effective_sigma(self) -> float:
        return math.sqrt(2.0 * self.D)

    @property
    def eps(self) -> float | None:
        if self.epsilon is not None:
            return float(self.epsilon)
        if self.model != "bpf" and self.c is not None:
            return 1.0 / self.c
        return None

    @property
    def rate(self) -> float | None:
        """Transaction rate k (bpf)."""
        if self.k is not None:
            return float(self.k)
        if self.c is not None and self.a is not None:
            return self.c / self.a
        return None

    @property
    def trading_intensity(self) -> float | None:
        """c = k a for bpf, 1/eps otherwise."""
        if self.model == "bpf":
            return self.rate * self.a
        e = self.eps
        return None if e is None else 1.0 / e

    @property
    def effective_dt_out(self) -> float:
        if self.dt_out is not None:
            return float(self.dt_out)
        return self.T / 100.0 if self.T > 0 else 1.0

    @property
    def effective_snapshots(self) -> tuple:
        return self.snapshot_times if self.snapshot_times else tuple(sorted({0.0, float(self.T)}))

    def hu_params(self) -> HuParams:
        return HuParams(self.eps, self.D, self.scheme, self.freeze_h)

    def bpf_params(self) -> BpfParams:
        sigma = self.sigma if self.sigma is not None else self.effective_sigma
        return BpfParams(k=self.rate, a=self.a, sigma=sigma)

    def initial_fg(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.grid.x
        return self.init_f.sample(x), self.init_g.sample(x)

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def as_items(self) -> list[tuple[str, str]]:
        """Effective configuration as ordered (key, text) pairs."""
        items = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("init_f", "init_g"):
                who = f.name[-1]
                items.append((f"init.{who}.kind", v.kind))
                for pk in sorted(v.params):
                    items.append((f"init.{who}.{pk}", _fmt(v.params[pk])))
            elif v is not None and v != ():
                items.append((f.name, _fmt(v)))
        return items


def _fmt(v: Any) -> str:
    if isinstance(v, Scheme):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(float(t)) if not isinstance(t, str) else t for t in v)
    return str(v)


def validate(cfg: RunConfig, lines: dict | None = None) -> None:
    """Cross-field checks; ``lines`` maps keys to source line numbers."""
    lines = lines or {}

    def fail(msg, *keys):
        ln = next((lines[k] for k in keys if k in lines), None)
        raise ConfigError(msg, ln)

    if cfg.model not in MODELS:
        fail(f"unknown model {cfg.model!r}; expected one of {', '.join(MODELS)}", "model")
    try:
        grid = Grid1D(cfg.x_min, cfg.x_max, cfg.n_cells)
    except ValueError as exc:
        fail(str(exc), "n_cells", "x_min", "x_max")
    if not (cfg.T >= 0 and math.isfinite(cfg.T)):
        fail("T must be a finite number >= 0", "T")
    if cfg.dt_out is not None and not cfg.dt_out > 0:
        fail("dt_out must be > 0", "dt_out")
    if cfg.dt_override is not None and not cfg.dt_override > 0:
        fail("dt_override must be > 0", "dt_override")
    if not cfg.safety > 0:
        fail("safety must be > 0", "safety")
    for t in cfg.snapshot_times:
        if not 0 <= t <= cfg.T * (1 + 1e-12):
            fail(f"snapshot time {t!r} outside [0, T]", "snapshot_times")
    if cfg.sigma is not None and not cfg.sigma > 0:
        fail("sigma must be > 0", "sigma")
    if cfg.diffusion is not None and not cfg.diffusion > 0:
        fail("diffusion must be > 0", "diffusion")
    if cfg.sigma is not None and cfg.diffusion is not None:
        if not math.isclose(0.5 * cfg.sigma**2, cfg.diffusion, rel_tol=1e-12):
            fail("diffusion must equal sigma^2 / 2 when both are given", "diffusion", "sigma")

    if cfg.model == "bpf":
        if cfg.epsilon is not None:
            fail("epsilon is not a bpf parameter; use k and a", "epsilon")
        if cfg.freeze_h:
            fail("freeze_h applies to the hu/burgers models only", "freeze_h")
        if cfg.a is None:
            fail("bpf model needs a", "model")
        if not cfg.a > 0:
            fail("a must be > 0", "a")
        if cfg.k is None and cfg.c is None:
            fail("bpf model needs k or c", "model")
        if cfg.k is not None and not cfg.k >= 0:
            fail("k must be >= 0", "k")
        if cfg.k is not None and cfg.c is not None and not math.isclose(cfg.k * cfg.a, cfg.c, rel_tol=1e-12):
            fail(f"c={cfg.c!r} does not match k*a={cfg.k * cfg.a!r}", "c", "k")
        try:
            grid.nodes_for(cfg.a)
        except ValueError:
            fail(f"a must be an integer multiple of dx (a={cfg.a!r}, dx={grid.dx!r})", "a")
    else:
        for key in ("k", "a"):
            if getattr(cfg, key) is not None:
                fail(f"{key} is a bpf parameter, not valid for model {cfg.model!r}", key)
        if cfg.model == "sharp" and cfg.freeze_h:
            fail("freeze_h applies to the hu/burgers models only", "freeze_h")
        if cfg.model in ("hu", "burgers"):
            if cfg.epsilon is None and cfg.c is None:
                fail(f"model {cfg.model!r} needs epsilon (or c)", "model")
            if cfg.epsilon is not None and not cfg.epsilon > 0:
                fail("epsilon must be > 0", "epsilon")
            if cfg.c is not None and not cfg.c > 0:
                fail("c must be > 0", "c")
            if cfg.epsilon is not None and cfg.c is not None and not math.isclose(cfg.epsilon * cfg.c, 1.0, rel_tol=1e-12):
                fail("c must equal 1/epsilon", "c", "epsilon")

    try:
        f, g = cfg.initial_fg()
    except ConfigError as exc:
        if exc.lineno is None:
            fail(str(exc), "init.f.kind", "init.g.kind")
        raise
    for name, v in (("f", f), ("g", g)):
        if not np.all(np.isfinite(v)):
            fail(f"initial {name} has non-finite values", f"init.{name}.kind")
        if v.min() < 0:
            fail(f"initial {name} must be >= 0 everywhere (min {v.min():.3g})", f"init.{name}.kind")
    if cfg.model == "burgers" and np.max(np.abs(f + g - 1.0)) > 1e-12:
        fail("burgers model needs f_I + g_I == 1 (h frozen at 1)", "init.f.kind", "init.g.kind")
    if cfg.model == "sharp":
        h = f + g
        if h.min() <= 0:
            fail("sharp model needs f_I + g_I > 0 everywhere", "init.f.kind", "init.g.kind")


_CONVERT = {
    "x_min": float, "x_max": float, "sigma": float, "diffusion": float, "epsilon": float,
    "k": float, "a": float, "c": float, "T": float, "dt_out": float, "dt_override": float,
    "safety": float,
}


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate ``key = value`` config text.

    ``#`` starts a comment.  Every error names the offending line.
    """
    raw: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCALAR_KEYS and not _INIT_KEY.match(key):
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = value
        lines[key] = lineno

    kwargs: dict[str, Any] = {}
    init: dict[str, dict] = {"f": {}, "g": {}}
    for key, value in raw.items():
        ln = lines[key]
        m = _INIT_KEY.match(key)
        try:
            if m:
                init[m.group(1)][m.group(2)] = value
            elif key == "model":
                kwargs["model"] = value
            elif key == "n_cells":
                kwargs["n_cells"] = int(value)
            elif key == "snapshot_times":
                kwargs["snapshot_times"] = tuple(float(s) for s in value.split(",") if s.strip())
            elif key == "scheme":
                kwargs["scheme"] = Scheme(value)
            elif key == "freeze_h":
                kwargs["freeze_h"] = _parse_bool(value)
            elif key == "output_dir":
                kwargs["output_dir"] = value
            else:
                kwargs[key] = _CONVERT[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", ln) from None

    for req in ("model", "T"):
        if req not in kwargs:
            raise ConfigError(f"missing required key {req!r}")
    specs = {}
    for who in ("f", "g"):
        params = dict(init[who])
        kind = params.pop("kind", None)
        if kind is None:
            raise ConfigError(f"missing required key 'init.{who}.kind'")
        if kind in INIT_PARAMS:
            for pk in params:
                if pk not in INIT_PARAMS[kind]:
                    raise ConfigError(f"unknown parameter {pk!r} for kind {kind!r}",
                                      lines[f"init.{who}.{pk}"])
        try:
            specs[who] = InitialDataSpec(kind, params)
        except ConfigError as exc:
            raise ConfigError(str(exc), lines.get(f"init.{who}.kind")) from None
    if kwargs["model"] == "burgers" and kwargs.get("freeze_h") is False:
        raise ConfigError("burgers model implies freeze_h = true", lines.get("freeze_h"))

    # construct without validation first, then validate with line numbers
    cfg = object.__new__(RunConfig)
    defaults = {f.name: f.default for f in fields(RunConfig) if f.default is not MISSING}
    values = {**defaults, **kwargs, "init_f": specs["f"], "init_g": specs["g"]}
    for name, v in values.items():
        object.__setattr__(cfg, name, v)
    object.__setattr__(cfg, "scheme", Scheme(cfg.scheme))
    if cfg.model == "burgers":
        object.__setattr__(cfg, "freeze_h", True)
    validate(cfg, lines)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def apply_overrides(text: str, overrides: list[str]) -> str:
    """Replace or append ``key=value`` entries in config text."""
    out = text.splitlines()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        out = [ln for ln in out if not pat.match(ln)]
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def to_text(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.as_items())
