"""Kinetic price formation: kinetic model, limit system and sharp-interface limit."""

from .bpf import BpfParams, BpfState, bpf_rhs, bpf_step, price_estimates, transaction_density
from .config import InitialDataSpec, RunConfig, load_config, parse_config
from .errors import (
    BpfError,
    ConfigError,
    FitError,
    InvariantViolationError,
    NoInterfaceError,
    NoTradesError,
    NumericalInstabilityError,
    SupportGuardError,
)
from .grid import Field, Grid1D, central_diff, integrate, second_diff, shift
from .hu import (
    HuParams,
    HuState,
    Scheme,
    from_fg,
    gap_integral,
    hu_rhs_conservative,
    hu_rhs_paper,
    hu_step,
    price_from_u,
    to_fg,
)
from .runner import RunResult, compare, simulate, write_run
from .sharp import (
    SharpState,
    equilibrium_price,
    heat_step,
    price_from_mass,
    price_ode_step,
    reconstruct_u,
)
from .transforms import TransformReport, heat_residual_FG, heat_residual_fSg, neumann_F, neumann_G

__version__ = "0.1.0"
