"""Finite-blocklength rate bounds for block-fading channels with CSIT."""

from .bounds import (
    ModDevBracket,
    RateBoundResult,
    ap_bounds,
    best_pp_bounds,
    c_eps,
    eh_bounds,
    moddev_bracket,
    no_csit_bounds,
    pp_bounds,
    tic_rates,
)
from .dispersion import DispersionSet, dispersion_set, v_bf_alpha
from .distributions import (
    DEFAULT_QUADRATURE,
    EnergyLaw,
    FadingLaw,
    Quadrature,
    expect,
    sample,
    variance,
)
from .waterfilling import ChannelConfig, WaterfillSolution, effective_snr, p_wf, solve_waterfill, tci_rate

__version__ = "0.1.0"
