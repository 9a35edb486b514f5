"""Water-filling power control over a block-fading channel.

The water level ``lam`` solves ``E[(lam - sigma_n2/|H|^2)^+] = pbar``; the
resulting ergodic capacity is ``E[log2(1 + |H|^2 P_WF(|H|^2)/sigma_n2)]``.
With an energy-harvesting transmitter the mean harvested energy plays the
role of ``pbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DEFAULT_QUADRATURE, FadingLaw, Quadrature, expect
from .errors import DivergentInversion, DomainError, NoMass, NonConvergent

__all__ = [
    "ChannelConfig",
    "WaterfillSolution",
    "solve_waterfill",
    "p_wf",
    "effective_snr",
    "tci_rate",
    "tci_inversion_moment",
    "tci_outage_grid",
    "TCI_GRID_POINTS",
]

TCI_GRID_POINTS = 512
_BISECT_REL = 1e-10
_BISECT_MAXITER = 200


@dataclass(frozen=True)
class ChannelConfig:
    """Noise variance, block structure and target error probability."""

    sigma_n2: float
    nc: int
    blocks: int
    eps: float

    def __post_init__(self):
        if not self.sigma_n2 > 0:
            raise DomainError("sigma_n2 must be positive")
        if int(self.nc) != self.nc or self.nc < 1:
            raise DomainError("nc must be a positive integer")
        if int(self.blocks) != self.blocks or self.blocks < 1:
            raise DomainError("blocks must be a positive integer")
        if not 0 < self.eps < 0.5:
            raise DomainError("eps must lie in (0, 0.5)")

    @property
    def n(self) -> int:
        return int(self.nc) * int(self.blocks)


@dataclass(frozen=True)
class WaterfillSolution:
    lam: float
    pbar: float
    capacity: float
    law: FadingLaw
    sigma_n2: float

    @property
    def threshold(self) -> float:
        """Gain below which no power is allocated."""
        return self.sigma_n2 / self.lam

    def p_wf(self, gain_sq):
        return p_wf(self, gain_sq)

    def effective_snr(self, gain_sq):
        return effective_snr(self, gain_sq)


def _p_wf(lam: float, sigma_n2: float, gain_sq):
    g = np.asarray(gain_sq, dtype=float)
    with np.errstate(divide="ignore"):
        p = np.where(g > 0, lam - sigma_n2 / np.where(g > 0, g, 1.0), 0.0)
    p = np.maximum(p, 0.0)
    return float(p) if p.ndim == 0 else p


def p_wf(sol: WaterfillSolution, gain_sq):
    """Water-filling power ``(lam - sigma_n2/gain_sq)^+``; zero at zero gain."""
    return _p_wf(sol.lam, sol.sigma_n2, gain_sq)


def effective_snr(sol: WaterfillSolution, gain_sq):
    """Received SNR ``gain_sq * P_WF(gain_sq) / sigma_n2``."""
    g = np.asarray(gain_sq, dtype=float)
    out = g * _p_wf(sol.lam, sol.sigma_n2, g) / sol.sigma_n2
    return float(out) if np.ndim(out) == 0 else out


def _mean_power(law: FadingLaw, sigma_n2: float, lam: float, q: Quadrature) -> float:
    t = sigma_n2 / lam
    return expect(law, lambda x: lam - sigma_n2 / x, q, lower=t) if not law.is_discrete else math.fsum(
        p * (lam - sigma_n2 / a) for a, p in zip(law.atoms, law.probs) if a > t
    )


def solve_waterfill(
    law: FadingLaw, sigma_n2: float, pbar: float, q: Quadrature = DEFAULT_QUADRATURE
) -> WaterfillSolution:
    """Solve for the water level by bisection and evaluate the capacity."""
    if not sigma_n2 > 0:
        raise DomainError("sigma_n2 must be positive")
    if not (pbar > 0 and math.isfinite(pbar)):
        raise DomainError("average power must be positive and finite")
    if law.positive_mass() <= 0:
        raise NoMass("fading law has no mass on positive gains")

    def residual(lam):
        return _mean_power(law, sigma_n2, lam, q) - pbar

    g_hi = law.quantile(1 - 1e-9) if not law.is_discrete else law.atoms[-1]
    pos = [a for a in law.atoms if a > 0] if law.is_discrete else None
    g_lo = pos[0] if law.is_discrete else law.quantile(0.5)
    lo = sigma_n2 / g_hi
    hi = pbar + sigma_n2 / g_lo
    while residual(lo) > 0:
        lo *= 0.5
    for _ in range(200):
        if residual(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise NonConvergent("could not bracket the water level")

    tol = max(q.abs_tol, _BISECT_REL * pbar)
    lam = 0.5 * (lo + hi)
    for _ in range(_BISECT_MAXITER):
        lam = 0.5 * (lo + hi)
        r = residual(lam)
        if abs(r) <= tol or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        if r > 0:
            hi = lam
        else:
            lo = lam
    else:
        raise NonConvergent("water-level bisection did not converge")

    # Newton polish: d/dlam E[P_WF] = P[|H|^2 > sigma_n2/lam]; exact for discrete laws
    slope = 1.0 - law.cdf(sigma_n2 / lam)
    if slope > 0:
        cand = lam - residual(lam) / slope
        if lo <= cand <= hi and abs(residual(cand)) <= abs(residual(lam)):
            lam = cand

    t = sigma_n2 / lam
    capacity = expect(law, lambda x: math.log2(x / t) if x > t else 0.0, q, lower=t)
    return WaterfillSolution(lam=lam, pbar=float(pbar), capacity=capacity, law=law, sigma_n2=float(sigma_n2))


def tci_inversion_moment(law: FadingLaw, g0: float, q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """``E[1{|H|^2 >= g0} / |H|^2]``; raises if it diverges."""
    if law.is_discrete:
        terms = [(a, p) for a, p in zip(law.atoms, law.probs) if a >= g0]
        if any(a == 0 for a, _ in terms):
            raise DivergentInversion("inverting a zero-gain state needs infinite power")
        return math.fsum(p / a for a, p in terms)
    if g0 <= 0:
        raise DivergentInversion("E[1/|H|^2] diverges for exponential fading")
    return expect(law, lambda x: 1.0 / x, q, lower=g0)


def _tci_point(law, sigma_n2, pbar, outage, q):
    """(outage probability, received SNR) of truncated inversion, or None."""
    if law.is_discrete:
        # largest atom whose lower mass does not exceed the target
        g0 = law.atoms[0]
        for a in law.atoms:
            if law.prob_below(a) <= outage + 1e-15:
                g0 = a
    else:
        g0 = law.quantile(outage)
    p_out = law.prob_below(g0)
    try:
        inv = tci_inversion_moment(law, g0, q)
    except DivergentInversion:
        return p_out, 0.0
    if inv <= 0:
        return p_out, 0.0
    rho = pbar / inv
    return p_out, rho / sigma_n2


def tci_rate(
    law: FadingLaw,
    sigma_n2: float,
    pbar: float,
    outage_target: float,
    q: Quadrature = DEFAULT_QUADRATURE,
) -> float:
    """Delay-limited rate of truncated channel inversion (bits/channel use).

    Blocks with ``|H|^2 < g0`` are silent; the rest receive power
    ``rho/|H|^2`` with ``rho`` chosen to meet the average power.  Full
    inversion of exponential fading is infeasible and yields rate 0.
    """
    if not 0 <= outage_target < 1:
        raise DomainError("outage target must lie in [0, 1)")
    p_out, snr = _tci_point(law, sigma_n2, pbar, outage_target, q)
    return (1.0 - p_out) * math.log2(1.0 + snr)


def tci_outage_grid(points: int = TCI_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0 - 1e-4, points)


def tci_points(law, sigma_n2, pbar, grid=None, q: Quadrature = DEFAULT_QUADRATURE):
    """``(outage_probability, snr)`` pairs of truncated inversion over a grid."""
    grid = tci_outage_grid() if grid is None else np.asarray(grid, dtype=float)
    return [_tci_point(law, sigma_n2, pbar, float(o), q) for o in grid]


def tci_best_rate(law, sigma_n2, pbar, grid=None, q: Quadrature = DEFAULT_QUADRATURE):
    """Largest asymptotic truncated-inversion rate over an outage grid."""
    pts = tci_points(law, sigma_n2, pbar, grid, q)
    return max((1 - p) * math.log2(1 + s) for p, s in pts)
