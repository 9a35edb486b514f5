"""Second-order rate bounds and moderate-deviation brackets.

Every bound here is a second-order approximation: capacity plus the
``1/sqrt(n)`` term, with higher-order remainders dropped.  Because every
retained correction scales as ``1/sqrt(n)``, a lower/upper pair is either
ordered for every ``n`` or for none, which is what ``crossover_n`` records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispersion import DispersionSet, SnrMoments, snr_moments
from .distributions import DEFAULT_QUADRATURE, EnergyLaw, FadingLaw, Quadrature
from .errors import DomainError, EmptyGrid, InvalidAlpha
from .normal import norm_ppf
from .waterfilling import ChannelConfig, WaterfillSolution, tci_points

__all__ = [
    "RateBoundResult",
    "ModDevBracket",
    "c_eps",
    "k_eps_alpha",
    "v_eps_alpha",
    "pp_bounds",
    "best_pp_bounds",
    "ap_bounds",
    "eh_bounds",
    "default_alpha_grid",
    "no_csit_bounds",
    "tic_rates",
    "moddev_bracket",
    "PP_ALPHA_GRID",
]

SECOND_ORDER = "second-order approximation; O(log n / n) and o(1/sqrt n) remainders dropped"

# alpha values tried when a caller wants the best PP lower bound
PP_ALPHA_GRID = np.linspace(0.01, 0.99, 99)


@dataclass(frozen=True)
class RateBoundResult:
    """Lower/upper second-order rate values (bits per channel use)."""

    constraint: str
    lower: float
    upper: float
    capacity: float
    n: int
    constants: dict = field(default_factory=dict)
    crossover_n: Optional[int] = 1
    note: str = SECOND_ORDER


@dataclass(frozen=True)
class ModDevBracket:
    """Endpoints ``(lo, hi)`` as defined for the constraint, never reordered.

    For PP/AP ``lo <= hi`` always holds.  For EH it can fail when
    ``E[L] > E[L^2] + sigma_E^2/lam^2`` dominates; ``ordered`` reports it.
    """

    lo: float
    hi: float
    constraint: str

    @property
    def ordered(self) -> bool:
        return self.lo <= self.hi


def _ordered(lower_coef: float, upper_coef: float) -> Optional[int]:
    return 1 if lower_coef <= upper_coef else None


def c_eps(nc: int, alpha: float, eps: float, form: str = "main") -> float:
    """Power-control penalty ``sqrt(2 (nc+1) ln(1/(alpha eps)))``.

    ``form="appendix"`` evaluates the real-channel expression
    ``sqrt((2 nc + 2) ln(1/(alpha eps)))``; the two agree identically and
    the switch exists so that either reading can be audited.
    """
    if not 0 < alpha < 1:
        raise InvalidAlpha("alpha must lie in (0, 1)")
    log_term = math.log(1.0 / (alpha * eps))
    if form == "main":
        return math.sqrt(2.0 * (nc + 1) * log_term)
    if form == "appendix":
        return math.sqrt((2.0 * nc + 2.0) * log_term)
    raise DomainError(f"unknown c_eps form {form!r}")


def pp_bounds(sol: WaterfillSolution, cfg: ChannelConfig, disp: DispersionSet, alpha: float) -> RateBoundResult:
    """Peak-power lower and upper bounds for a given split ``alpha``."""
    if not 0 < alpha < 1:
        raise InvalidAlpha("alpha must lie in (0, 1)")
    n = cfg.n
    arg = (1.0 - alpha) * cfg.eps / 2.0
    assert 0 < arg < 0.5
    c = c_eps(cfg.nc, alpha, cfg.eps)
    root = math.sqrt(disp.v_bf / n)
    lower_coef = -c + math.sqrt(disp.v_bf) * norm_ppf(arg)
    upper_coef = math.sqrt(disp.v_bf) * norm_ppf(cfg.eps)
    return RateBoundResult(
        constraint="PP",
        lower=sol.capacity - c / math.sqrt(n) + root * norm_ppf(arg),
        upper=sol.capacity + root * norm_ppf(cfg.eps),
        capacity=sol.capacity,
        n=n,
        constants={"c_eps": c, "alpha": alpha, "dispersion": disp.v_bf},
        crossover_n=_ordered(lower_coef, upper_coef),
    )


def _pp_lower_coef(v: float, nc: int, eps: float, alphas: np.ndarray):
    """Best ``-c_eps + sqrt(v) Phi^-1((1-alpha) eps / 2)`` over ``alphas``."""
    c = np.sqrt(2.0 * (nc + 1) * np.log(1.0 / (alphas * eps)))
    coef = -c + math.sqrt(v) * norm_ppf((1.0 - alphas) * eps / 2.0)
    i = int(np.argmax(coef))
    return float(coef[i]), float(alphas[i])


def best_pp_bounds(sol, cfg, disp, grid: Sequence[float] = PP_ALPHA_GRID) -> RateBoundResult:
    """:func:`pp_bounds` with ``alpha`` maximising the lower bound over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("alpha grid is empty")
    if np.any((grid <= 0) | (grid >= 1)):
        raise InvalidAlpha("alpha grid must lie inside (0, 1)")
    _, alpha = _pp_lower_coef(disp.v_bf, cfg.nc, cfg.eps, grid)
    return pp_bounds(sol, cfg, disp, alpha)


def ap_bounds(sol: WaterfillSolution, cfg: ChannelConfig, disp: DispersionSet) -> RateBoundResult:
    """Average-power bounds; both share the same second-order term."""
    rate = sol.capacity + math.sqrt(disp.v_bf / cfg.n) * norm_ppf(cfg.eps)
    return RateBoundResult(
        constraint="AP",
        lower=rate,
        upper=rate,
        capacity=sol.capacity,
        n=cfg.n,
        constants={
            "dispersion": disp.v_bf,
            "lower_remainder": "O(log n / n)",
            "upper_remainder": "o(1/sqrt n), needs E[P^(2+d)] < inf",
        },
    )


def k_eps_alpha(ebar: float, sigma_e2: float, eps: float, alpha):
    """Save-phase constant ``sqrt(4 (2 E^2 + s^2) / ((1-alpha) eps E^2))``."""
    alpha = np.asarray(alpha, dtype=float)
    k = np.sqrt(4.0 * (2.0 * ebar ** 2 + sigma_e2) / ((1.0 - alpha) * eps * ebar ** 2))
    return float(k) if k.ndim == 0 else k


def v_eps_alpha(v_ef_prime: float, capacity: float, ebar: float, sigma_e2: float, eps: float, alpha):
    """Second-order coefficient of the EH lower bound."""
    alpha = np.asarray(alpha, dtype=float)
    val = math.sqrt(v_ef_prime) * norm_ppf(alpha * eps) - k_eps_alpha(ebar, sigma_e2, eps, alpha) * capacity
    return float(val) if np.ndim(val) == 0 else val


def default_alpha_grid(lo: float = 0.1, hi: float = 0.9, points: int = 161) -> np.ndarray:
    return np.linspace(lo, hi, points)


def eh_bounds(
    sol: WaterfillSolution,
    cfg: ChannelConfig,
    disp: DispersionSet,
    energy: EnergyLaw,
    alpha_grid: Optional[Sequence[float]] = None,
    refine: bool = True,
) -> RateBoundResult:
    """Energy-harvesting bounds with ``alpha`` optimised over a grid.

    ``sol`` must be the water-filling solution at average power equal to the
    mean harvested energy.  With the default grid the best cell is refined
    once with the same number of points.
    """
    ebar, s2 = energy.mean, energy.variance
    if not math.isclose(sol.pbar, ebar, rel_tol=1e-9):
        raise DomainError("water-filling solution must be solved at the mean harvested energy")
    if disp.v_ef_dprime is None:
        raise DomainError("dispersion set lacks the energy-harvesting constant; pass the energy law")
    grid = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("alpha grid is empty")
    if np.any((grid <= 0) | (grid >= 1)):
        raise InvalidAlpha("alpha grid must lie inside (0, 1)")

    def score(g):
        return v_eps_alpha(disp.v_ef_prime, sol.capacity, ebar, s2, cfg.eps, g)

    vals = np.atleast_1d(score(grid))
    i = int(np.argmax(vals))
    if refine and grid.size > 2:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        fine = np.linspace(lo, hi, grid.size)
        grid = np.concatenate([grid, fine])
        vals = np.concatenate([vals, np.atleast_1d(score(fine))])
        i = int(np.argmax(vals))
    alpha = float(grid[i])
    v_ea = float(vals[i])
    k = k_eps_alpha(ebar, s2, cfg.eps, alpha)
    n = cfg.n
    upper_coef = math.sqrt(disp.v_ef_dprime) * norm_ppf(cfg.eps)
    return RateBoundResult(
        constraint="EH",
        lower=sol.capacity + v_ea / math.sqrt(n),
        upper=sol.capacity + upper_coef / math.sqrt(n),
        capacity=sol.capacity,
        n=n,
        constants={
            "alpha": alpha,
            "K_eps_alpha": k,
            "V_eps_alpha": v_ea,
            "save_slots": k * math.sqrt(n),
            "V_EF_prime": disp.v_ef_prime,
            "V_EF_dprime": disp.v_ef_dprime,
        },
        crossover_n=_ordered(v_ea, upper_coef),
    )


def _no_csit_moments(law: FadingLaw, cfg: ChannelConfig, pbar: float, q: Quadrature) -> SnrMoments:
    scale = pbar / cfg.sigma_n2
    return snr_moments(law, lambda x: scale * x, q)


def no_csit_bounds(
    law: FadingLaw, cfg: ChannelConfig, pbar: float, q: Quadrature = DEFAULT_QUADRATURE
) -> RateBoundResult:
    """Rate without transmitter CSI: constant power ``pbar`` in every block."""
    if not pbar > 0:
        raise DomainError("average power must be positive")
    m = _no_csit_moments(law, cfg, pbar, q)
    v = m.v_eq5(cfg.nc)
    rate = m.mean_c + math.sqrt(v / cfg.n) * norm_ppf(cfg.eps)
    return RateBoundResult(
        constraint="NoCSIT",
        lower=rate,
        upper=rate,
        capacity=m.mean_c,
        n=cfg.n,
        constants={"dispersion": v, "var_C": m.var_c, "mean_V": m.mean_v, "var_L": m.var_l},
    )


def tic_rates(
    law: FadingLaw,
    cfg: ChannelConfig,
    pbar: float,
    outage_grid=None,
    pp_alphas: Sequence[float] = PP_ALPHA_GRID,
    q: Quadrature = DEFAULT_QUADRATURE,
    points=None,
) -> dict:
    """Second-order rates of truncated channel inversion.

    Each outage level turns the channel into a two-state law for the
    received SNR (0 with the outage probability, ``rho/sigma_n2``
    otherwise).  ``tic_ap`` applies the average-power normal approximation
    to that law.  ``tic_pp`` applies the peak-power lower-bound form (best
    ``alpha`` in ``pp_alphas``), which needs bounded inversion power and so
    skips full inversion of continuous fading.  Both are maximised over the
    outage grid; ``points`` may carry precomputed :func:`tci_points` output.
    """
    if points is None:
        points = tci_points(law, cfg.sigma_n2, pbar, outage_grid, q)
    alphas = np.asarray(pp_alphas, dtype=float)
    n = cfg.n
    best_ap = (-math.inf, None)
    best_pp = (-math.inf, None)
    for p_out, snr in points:
        if snr <= 0:
            continue
        if p_out > 0:
            two = FadingLaw.discrete([0.0, snr], [p_out, 1.0 - p_out])
        else:
            two = FadingLaw.point(snr)
        m = snr_moments(two, lambda x: x, q)
        v = m.v_eq5(cfg.nc)
        ap = m.mean_c + math.sqrt(v / n) * norm_ppf(cfg.eps)
        if ap > best_ap[0]:
            best_ap = (ap, p_out)
        if p_out > 0 or law.is_discrete:
            pp = m.mean_c + _pp_lower_coef(v, cfg.nc, cfg.eps, alphas)[0] / math.sqrt(n)
            if pp > best_pp[0]:
                best_pp = (pp, p_out)
    return {
        "tic_ap": max(best_ap[0], 0.0),
        "tic_ap_outage": best_ap[1],
        "tic_pp": max(best_pp[0], 0.0),
        "tic_pp_outage": best_pp[1],
    }


def moddev_bracket(disp: DispersionSet, constraint: str) -> ModDevBracket:
    """Endpoints bracketing the moderate-deviation constant."""
    key = constraint.upper()
    if key in ("PP", "AP", "PP/AP"):
        return ModDevBracket(disp.v_bf_prime, disp.v_bf, "PP/AP")
    if key == "EH":
        if disp.v_ef_dprime is None:
            raise DomainError("EH bracket needs a dispersion set computed with an energy law")
        return ModDevBracket(disp.v_ef_prime, disp.v_ef_dprime, "EH")
    raise DomainError(f"unknown constraint {constraint!r}")
