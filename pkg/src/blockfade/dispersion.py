"""Dispersion constants of the block-fading channel.

All second-moment identities are carried in nats and converted to bits
once, here, by the factor ``LOG2E_SQ``.  Capacity-like terms (``C``) are in
bits from the start, so ``Var[C]`` needs no conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import DEFAULT_QUADRATURE, EnergyLaw, FadingLaw, Quadrature, expect_many
from .errors import DomainError
from .waterfilling import ChannelConfig, WaterfillSolution

__all__ = [
    "LOG2E_SQ",
    "func_c",
    "func_l",
    "func_v",
    "func_v1",
    "SnrMoments",
    "snr_moments",
    "DispersionSet",
    "dispersion_set",
    "v_bf_alpha",
]

LOG2E_SQ = math.log2(math.e) ** 2


def func_c(x):
    """``log2(1 + x)``."""
    return np.log2(1.0 + np.asarray(x, dtype=float)) if np.ndim(x) else math.log2(1.0 + x)


def func_l(x):
    """``x / (1 + x)``."""
    return x / (1.0 + x)


def func_v(x):
    """``x (2 + x) / (1 + x)^2``, the complex AWGN dispersion in nats^2."""
    return x * (2.0 + x) / (1.0 + x) ** 2


def func_v1(x, sigma_e2, lam):
    return func_l(x) ** 2 + sigma_e2 / lam ** 2


@dataclass(frozen=True)
class SnrMoments:
    """Moments of the functionals C, L, V of a received-SNR law."""

    mean_c: float  # bits
    var_c: float  # bits^2
    mean_l: float
    mean_l2: float
    var_l: float
    mean_v: float

    def v_eq5(self, nc: int) -> float:
        """``E[V] + nc Var[C] + Var[L]`` in bits^2."""
        return LOG2E_SQ * (self.mean_v + self.var_l) + nc * self.var_c

    def v_prime(self, nc: int) -> float:
        """Same as :meth:`v_eq5` with ``E[L]`` in place of ``E[V]``."""
        return LOG2E_SQ * (self.mean_l + self.var_l) + nc * self.var_c


def _functionals(s):
    c = math.log2(1.0 + s)
    l = s / (1.0 + s)
    # V = 1 - (1 - L)^2 = L (2 - L)
    return np.array([c, c * c, l, l * l, l * (2.0 - l)])


def snr_moments(
    law: FadingLaw,
    snr_of_gain: Callable[[float], float],
    q: Quadrature = DEFAULT_QUADRATURE,
    lower: float = 0.0,
    kink: Optional[float] = None,
) -> SnrMoments:
    """Moments of ``C, L, V`` evaluated at ``snr_of_gain(|H|^2)``.

    Gains below ``lower`` are taken to give zero SNR, where every
    functional vanishes.
    """
    if law.is_discrete:
        atoms = np.asarray(law.atoms)
        probs = np.asarray(law.probs)
        snr = np.array([snr_of_gain(a) if a >= lower else 0.0 for a in atoms])
        c = np.log2(1.0 + snr)
        l = snr / (1.0 + snr)
        v = l * (2.0 - l)
        mean_c = math.fsum(probs * c)
        mean_l = math.fsum(probs * l)
        # two-pass variances: exact zeros for point masses
        return SnrMoments(
            mean_c=mean_c,
            var_c=math.fsum(probs * (c - mean_c) ** 2),
            mean_l=mean_l,
            mean_l2=math.fsum(probs * l * l),
            var_l=math.fsum(probs * (l - mean_l) ** 2),
            mean_v=math.fsum(probs * v),
        )
    ec, ec2, el, el2, ev = expect_many(law, lambda x: _functionals(snr_of_gain(x)), q, kink=kink, lower=lower)
    ec, ec2, el, el2, ev = (float(v) for v in (ec, ec2, el, el2, ev))
    return SnrMoments(
        mean_c=ec,
        var_c=max(0.0, ec2 - ec * ec),
        mean_l=el,
        mean_l2=el2,
        var_l=max(0.0, el2 - el * el),
        mean_v=ev,
    )


def _wf_moments(sol: WaterfillSolution, q: Quadrature, alpha: float = 1.0) -> SnrMoments:
    lam, s2 = sol.lam, sol.sigma_n2
    t = sol.threshold
    return snr_moments(sol.law, lambda x: alpha * x * (lam - s2 / x) / s2 if x > t else 0.0, q, lower=t)


@dataclass(frozen=True)
class DispersionSet:
    """Dispersion-like constants for one water-filling solution (bits^2).

    ``v_ef_dprime`` is ``None`` unless an energy law was supplied.
    """

    v_bf: float
    v_bf_prime: float
    v_ef_prime: float
    v_ef_dprime: Optional[float]
    moments: SnrMoments
    nc: int
    lam: float
    sigma_e2: Optional[float] = None

    @property
    def components(self) -> dict:
        m = self.moments
        out = {
            "mean_V": m.mean_v,
            "mean_L": m.mean_l,
            "var_C": m.var_c,
            "var_L": m.var_l,
            "nc": self.nc,
            "bits_factor": LOG2E_SQ,
        }
        if self.sigma_e2 is not None:
            out["mean_V1"] = m.mean_l2 + self.sigma_e2 / self.lam ** 2
        return out


def dispersion_set(
    sol: WaterfillSolution,
    cfg: ChannelConfig,
    energy: Optional[EnergyLaw] = None,
    q: Quadrature = DEFAULT_QUADRATURE,
) -> DispersionSet:
    """Evaluate ``V_BF``, ``V_BF'``, ``V_EF'`` and (with ``energy``) ``V_EF''``."""
    m = _wf_moments(sol, q)
    nc = cfg.nc
    v_bf = m.v_eq5(nc)
    v_prime = m.v_prime(nc)
    v_dprime = None
    sigma_e2 = None
    if energy is not None:
        sigma_e2 = energy.variance
        mean_v1 = m.mean_l2 + sigma_e2 / sol.lam ** 2
        v_dprime = LOG2E_SQ * (mean_v1 + m.var_l) + nc * m.var_c
    return DispersionSet(
        v_bf=v_bf,
        v_bf_prime=v_prime,
        v_ef_prime=v_prime,
        v_ef_dprime=v_dprime,
        moments=m,
        nc=nc,
        lam=sol.lam,
        sigma_e2=sigma_e2,
    )


def v_bf_alpha(sol: WaterfillSolution, cfg: ChannelConfig, alpha: float, q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """``E[V(a G^2)] + nc Var[C(a G^2)] + Var[L(a G^2)]`` for ``a = alpha``."""
    if not 0 <= alpha <= 1:
        raise DomainError("alpha must lie in [0, 1]")
    if alpha == 0:
        return 0.0
    return _wf_moments(sol, q, alpha).v_eq5(cfg.nc)
