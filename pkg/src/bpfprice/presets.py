"""Named experiment configurations, as config text."""

from __future__ import annotations

from .config import RunConfig, apply_overrides, parse_config
from .errors import ConfigError

# Two buyer bumps flanking one vendor bump, interleaved and overlapping.
# n_cells = 1000 keeps the cell Peclet number max(h) dx / (2 eps D) just
# above 1 at the initial peak and below it from then on.
FIGURE1 = """\
model = hu
x_min = -1
x_max = 1
n_cells = 1000
epsilon = 0.05
sigma = 0.1
scheme = paper_central
T = 30
dt_out = 0.1
snapshot_times = 0, 0.5, 1, 5, 10, 30
init.f.kind = bump_sum
init.f.amplitudes = 0.17, 0.17
init.f.centers = -0.3, 0.3
init.f.widths = 0.25, 0.25
init.g.kind = gaussian_bump
init.g.amplitude = 0.17
init.g.center = 0
init.g.width = 0.25
"""

# h = 1 and u_I = -0.9 tanh(4x): f = (1 + u)/2, g = (1 - u)/2.
BURGERS_LIMIT = """\
model = burgers
x_min = -1
x_max = 1
n_cells = 200
epsilon = 0.05
diffusion = 1
T = 1
dt_out = 0.01
init.f.kind = tanh_profile
init.f.offset = 0.5
init.f.amplitude = -0.45
init.f.steepness = 4
init.f.center = 0
init.g.kind = tanh_profile
init.g.offset = 0.5
init.g.amplitude = 0.45
init.g.steepness = 4
init.g.center = 0
"""

PRESETS = {"figure1": FIGURE1, "burgers-limit": BURGERS_LIMIT}


def preset_text(name: str, overrides: list[str] | None = None) -> str:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return apply_overrides(text, overrides) if overrides else text


def preset(name: str, overrides: list[str] | None = None) -> RunConfig:
    return parse_config(preset_text(name, overrides))
