"""Seeded Monte Carlo checks of the analytic quantities.

Three simulators share one layout: trials are cut into fixed-size chunks,
chunk ``i`` draws from ``stream(seed, tag, i)`` and results are merged in
chunk order.  Chunk sizes depend only on the configuration, so the output
is the same for any number of worker threads.

Codewords are drawn uniformly on the sphere of radius ``sqrt(n (1 - delta))``
by normalising Gaussian vectors.  Only the per-block squared norms matter
here, and for a complex Gaussian vector those are Gamma(nc) variables, so
the sphere is sampled through ``n (1 - delta) Q_b / sum(Q)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy import stats

from .bounds import c_eps, eh_bounds, k_eps_alpha
from .dispersion import dispersion_set
from .distributions import EnergyLaw, draw, stream
from .errors import ConstraintBreach, DomainError
from .waterfilling import ChannelConfig, WaterfillSolution, p_wf

__all__ = [
    "SimConfig",
    "SimReport",
    "info_density_moments",
    "power_violation_prob",
    "save_and_transmit",
    "backoff_delta",
    "violation_bound",
    "TRACE_COLUMNS",
]

LOG2E = math.log2(math.e)
SYMBOL_ENERGIES = ("gaussian", "unit")
TRACE_COLUMNS = ("slot", "arrival", "buffer", "symbol_energy", "outage")

# stream tags, one per simulator
_TAG_INFO, _TAG_VIOL, _TAG_EH = 1, 2, 3
# draws per chunk for the block-level simulators
_BLOCK_BUDGET = 1 << 20
_EH_CHUNK = 2048


@dataclass(frozen=True)
class SimConfig:
    """Inputs of one simulation run.

    ``delta_n`` is the codebook back-off (zero when absent).  ``save_slots``
    and ``alpha`` only matter for save-and-transmit; if ``save_slots`` is
    missing it defaults to ``ceil(K sqrt(n))`` at ``alpha`` (or at the
    optimised alpha when that is missing too).
    """

    seed: int
    trials: int
    cfg: ChannelConfig
    sol: WaterfillSolution
    energy: Optional[EnergyLaw] = None
    delta_n: Optional[float] = None
    save_slots: Optional[int] = None
    alpha: Optional[float] = None
    symbol_energy: str = "gaussian"
    workers: int = 1

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError("seed must be a nonnegative integer")
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError("trials must be a positive integer")
        if self.delta_n is not None and not 0 < self.delta_n < 1:
            raise DomainError("delta_n must lie in (0, 1)")
        if self.save_slots is not None and (int(self.save_slots) != self.save_slots or self.save_slots < 0):
            raise DomainError("save_slots must be a nonnegative integer")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if self.symbol_energy not in SYMBOL_ENERGIES:
            raise DomainError(f"symbol_energy must be one of {SYMBOL_ENERGIES}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise DomainError("workers must be a positive integer")


@dataclass
class SimReport:
    estimate: float
    std_error: float
    trials: int
    violated_assertions: List[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)


def _run_chunks(sim: SimConfig, chunk: int, job: Callable[[int, int], object]) -> list:
    """Run ``job(i, size)`` over all chunks and return results in order."""
    sizes = [min(chunk, sim.trials - s) for s in range(0, sim.trials, chunk)]
    if sim.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(sim.workers) as pool:
            return list(pool.map(job, range(len(sizes)), sizes))
    return [job(i, m) for i, m in enumerate(sizes)]


def _block_chunk(blocks: int) -> int:
    return max(1, _BLOCK_BUDGET // blocks)


def _sphere_norms(rng, trials: int, cfg: ChannelConfig, delta: float) -> np.ndarray:
    """Per-block squared norms of codewords uniform on the shrunk sphere."""
    q = rng.standard_gamma(cfg.nc, size=(trials, cfg.blocks))
    return cfg.n * (1.0 - delta) * q / q.sum(axis=1, keepdims=True)


def info_density_moments(sim: SimConfig) -> SimReport:
    """Sample mean and variance of the information density in bits.

    Per block, with effective SNR ``s = G^2`` and codeword block ``X_b``,
    the density splits as ``nc ln(1+s)`` plus a zero-mean remainder
    ``(s |X_b|^2 + 2 sqrt(s) |X_b| Re(w) - s |Z_b|^2) / (1+s)`` where ``w``
    is the noise along ``X_b`` and ``|Z_b|^2 = |w|^2 + Gamma(nc - 1)``.

    The estimate is the mean of ``S_B`` (bits per codeword); ``extras``
    holds the sample variance and its ratio to ``n V_BF``.
    """
    if sim.trials < 10_000:
        raise DomainError("info_density_moments needs at least 10^4 trials")
    cfg, sol = sim.cfg, sim.sol
    delta = sim.delta_n or 0.0
    B, nc = cfg.blocks, cfg.nc

    def job(i, m):
        rng = stream(sim.seed, _TAG_INFO, i)
        gain = draw(sol.law, rng, (m, B))
        s = sol.effective_snr(gain)
        x2 = _sphere_norms(rng, m, cfg, delta)
        w_re = rng.normal(0.0, math.sqrt(0.5), size=(m, B))
        w_im = rng.normal(0.0, math.sqrt(0.5), size=(m, B))
        rest = rng.standard_gamma(nc - 1, size=(m, B)) if nc > 1 else 0.0
        z2 = w_re ** 2 + w_im ** 2 + rest
        root = np.sqrt(s)
        dens = nc * np.log1p(s) + (s * x2 + 2.0 * root * np.sqrt(x2) * w_re - s * z2) / (1.0 + s)
        return LOG2E * dens.sum(axis=1)

    total = np.concatenate(_run_chunks(sim, _block_chunk(B), job))
    mean = float(np.mean(total))
    var = float(np.var(total, ddof=1))
    se = math.sqrt(var / sim.trials)
    v_bf = dispersion_set(sol, cfg).v_bf
    expected = cfg.n * sol.capacity
    report = SimReport(
        estimate=mean,
        std_error=se,
        trials=sim.trials,
        extras={
            "expected_mean": expected,
            "z_mean": (mean - expected) / se if se > 0 else 0.0,
            "variance": var,
            "expected_variance": cfg.n * v_bf,
            "variance_ratio": var / (cfg.n * v_bf) if v_bf > 0 else math.nan,
            "per_use_mean": mean / cfg.n,
        },
    )
    if se > 0 and abs(mean - expected) > 4.0 * se:
        report.violated_assertions.append("mean differs from n*C by more than 4 standard errors")
    return report


def backoff_delta(sol: WaterfillSolution, cfg: ChannelConfig, alpha: float) -> float:
    """Codebook back-off ``2 lam c_eps / (pbar sqrt(n))``."""
    d = 2.0 * sol.lam * c_eps(cfg.nc, alpha, cfg.eps) / (sol.pbar * math.sqrt(cfg.n))
    if not 0 < d < 1:
        raise DomainError(f"back-off {d:.4g} falls outside (0, 1); increase n")
    return d


def violation_bound(sol: WaterfillSolution, cfg: ChannelConfig, delta: float) -> float:
    """``exp(-n pbar^2 delta^2 / (8 (nc+1) lam^2)) + 64 (2 nc + 3)^4 / sqrt(n)``."""
    n, nc = cfg.n, cfg.nc
    expo = math.exp(-n * sol.pbar ** 2 * delta ** 2 / (8.0 * (nc + 1) * sol.lam ** 2))
    return expo + 64.0 * (2 * nc + 3) ** 4 / math.sqrt(n)


def power_violation_prob(sim: SimConfig) -> SimReport:
    """Probability that water-filled power exceeds ``n pbar`` in some prefix.

    The prefix sums are nondecreasing, so the event reduces to the total
    exceeding the budget.
    """
    if sim.delta_n is None:
        raise DomainError("power_violation_prob needs delta_n")
    cfg, sol = sim.cfg, sim.sol
    budget = cfg.n * sol.pbar
    limit = budget * (1.0 + 1e-12)

    def job(i, m):
        rng = stream(sim.seed, _TAG_VIOL, i)
        gain = draw(sol.law, rng, (m, cfg.blocks))
        x2 = _sphere_norms(rng, m, cfg, sim.delta_n)
        spent = (x2 * p_wf(sol, gain)).sum(axis=1)
        return int(np.count_nonzero(spent > limit))

    hits = sum(_run_chunks(sim, _block_chunk(cfg.blocks), job))
    p = hits / sim.trials
    bound = violation_bound(sol, cfg, sim.delta_n)
    vacuous = bound >= 1.0
    report = SimReport(
        estimate=p,
        std_error=math.sqrt(p * (1.0 - p) / sim.trials),
        trials=sim.trials,
        extras={"violations": hits, "bound": bound, "bound_vacuous": vacuous, "delta_n": sim.delta_n},
    )
    if vacuous:
        report.extras["note"] = "bound vacuous"
    elif p > bound:
        report.violated_assertions.append("estimate exceeds the analytic bound")
    return report


def _save_slots(sim: SimConfig):
    cfg, energy = sim.cfg, sim.energy
    if sim.save_slots is not None:
        return int(sim.save_slots), sim.alpha
    if sim.alpha is not None:
        alpha = sim.alpha
    else:
        disp = dispersion_set(sim.sol, cfg, energy)
        alpha = eh_bounds(sim.sol, cfg, disp, energy).constants["alpha"]
    k = k_eps_alpha(energy.mean, energy.variance, cfg.eps, alpha)
    return int(math.ceil(k * math.sqrt(cfg.n))), alpha


def save_and_transmit(sim: SimConfig, trace: Optional[list] = None) -> SimReport:
    """Energy-outage probability of the save-and-transmit scheme.

    The buffer starts empty and collects ``save_slots`` arrivals.  Each
    transmit slot then adds its arrival and tries to send a symbol of
    energy ``P_WF(|H_b|^2) |X|^2``; if the buffer cannot cover it the slot
    is silent.  A codeword counts as outage-affected when any of its slots
    is silent.

    Buffer nonnegativity and the cumulative harvested-energy constraint are
    checked at every slot; a failure raises :class:`ConstraintBreach`.  When
    ``trace`` is a list it receives one tuple per slot of the first trial,
    ordered as :data:`TRACE_COLUMNS`.
    """
    if sim.energy is None:
        raise DomainError("save_and_transmit needs an energy law")
    cfg, sol, energy = sim.cfg, sim.sol, sim.energy
    slots, alpha = _save_slots(sim)
    B, nc = cfg.blocks, cfg.nc
    gaussian = sim.symbol_energy == "gaussian"

    def check(buf, cum_tx, cum_in, where):
        if np.any(buf < 0.0):
            raise ConstraintBreach(f"negative buffer at {where}")
        if np.any(cum_tx > cum_in * (1.0 + 1e-12) + 1e-12):
            raise ConstraintBreach(f"harvested-energy constraint violated at {where}")

    def job(i, m):
        rng = stream(sim.seed, _TAG_EH, i)
        want = trace is not None and i == 0
        rows = []
        if slots:
            saved = draw(energy, rng, (m, slots))
            buf = saved.sum(axis=1)
            if want:
                run = np.cumsum(saved[0])
                rows.extend((k, float(saved[0, k]), float(run[k]), 0.0, 0) for k in range(slots))
        else:
            buf = np.zeros(m)
        cum_in = buf.copy()
        cum_tx = np.zeros(m)
        check(buf, cum_tx, cum_in, "end of saving phase")
        hit = np.zeros(m, dtype=bool)
        silent = np.zeros(m, dtype=np.int64)
        slot = slots
        for b in range(B):
            power = p_wf(sol, draw(sol.law, rng, m))
            arrivals = draw(energy, rng, (m, nc))
            sym = rng.standard_exponential((m, nc)) if gaussian else np.ones((m, nc))
            for k in range(nc):
                need = power * sym[:, k]
                avail = buf + arrivals[:, k]
                out = need > avail
                sent = np.where(out, 0.0, need)
                buf = avail - sent
                cum_in += arrivals[:, k]
                cum_tx += sent
                hit |= out
                silent += out
                if want:
                    rows.append((slot, float(arrivals[0, k]), float(buf[0]), float(sent[0]), int(out[0])))
                check(buf, cum_tx, cum_in, f"slot {slot}")
                slot += 1
        return int(np.count_nonzero(hit)), int(silent.sum()), rows

    parts = _run_chunks(sim, _EH_CHUNK, job)
    k = sum(p[0] for p in parts)
    silent_slots = sum(p[1] for p in parts)
    if trace is not None:
        trace.extend(parts[0][2])
    N = sim.trials
    p = k / N
    upper = float(stats.beta.ppf(0.95, k + 1, N - k)) if k < N else 1.0
    extras = {
        "outage_codewords": k,
        "cp_upper_95": upper,
        "save_slots": slots,
        "silent_slot_fraction": silent_slots / (N * cfg.n),
    }
    if alpha is not None:
        extras["alpha"] = alpha
        extras["outage_budget"] = (1.0 - alpha) * cfg.eps
    return SimReport(estimate=p, std_error=math.sqrt(p * (1.0 - p) / N), trials=N, extras=extras)
