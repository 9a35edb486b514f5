"""Sweeps behind the rate-versus-parameter figures.

Each figure is a table: one sweep column followed by one column per curve.
Defaults reproduce the published parameter sets; every key can be
overridden, and a sweep key given a single value yields a single row.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from .bounds import ap_bounds, best_pp_bounds, eh_bounds, no_csit_bounds, tic_rates
from .dispersion import dispersion_set
from .distributions import EnergyLaw, FadingLaw
from .errors import ParseError, UnknownFigure
from .waterfilling import ChannelConfig, solve_waterfill, tci_points

__all__ = ["FIGURES", "figure_defaults", "run_figure"]


def _arange(lo, hi, step):
    return [float(v) for v in np.arange(lo, hi + step / 2, step)]


_PP_BASE = {"sigmaH2": [0.1], "sigmaN2": 4.0, "pbar": [10 ** 0.5], "nc": 10, "eps": 0.05, "B": [1000]}
_EH_BASE = {"sigmaH2": 0.9, "sigmaN2": 0.4, "nc": 20, "eps": 0.1, "sigmaE2": 0.1, "Ebar": [17.0], "B": [400]}

FIGURES: Dict[str, dict] = {
    "fig1": {**_PP_BASE, "B": list(range(900, 1001, 10)), "sweep": "B"},
    "fig2": {**_PP_BASE, "pbar": _arange(1, 15, 1), "sweep": "pbar"},
    "fig3": {**_PP_BASE, "sigmaH2": [0.1, 0.4], "pbar": _arange(1, 15, 1), "sweep": "pbar"},
    "fig4": {**_EH_BASE, "Ebar": _arange(1, 17, 1), "sweep": "Ebar"},
    "fig5": {**_EH_BASE, "B": list(range(450, 551, 10)), "sweep": "B"},
}


def figure_defaults(name: str) -> dict:
    if name not in FIGURES:
        raise UnknownFigure(f"unknown figure {name!r}; choose from {sorted(FIGURES)}")
    out = dict(FIGURES[name])
    out["gain_convention"] = "figure"
    return out


def _tag(sh2: float) -> str:
    return f"sh{sh2:g}"


def _pp_rows(p: dict, with_tic: bool, multi: bool):
    sweep = p["sweep"]
    sweep_vals = p[sweep]
    columns = [sweep]
    for sh2 in p["sigmaH2"]:
        sfx = f"_{_tag(sh2)}" if multi else ""
        names = ["capacity", "ap_ub_pp", "lb_pp", "no_csit"] + (["tic_ap", "tic_pp"] if with_tic else [])
        columns += [c + sfx for c in names]

    cache = {}

    def point(sh2, pbar, blocks):
        law = FadingLaw.from_sigma_h2(sh2, p["gain_convention"])
        key = (sh2, pbar)
        if key not in cache:
            sol = solve_waterfill(law, p["sigmaN2"], pbar)
            pts = tci_points(law, p["sigmaN2"], pbar) if with_tic else None
            cache[key] = (law, sol, pts)
        law, sol, pts = cache[key]
        cfg = ChannelConfig(p["sigmaN2"], p["nc"], blocks, p["eps"])
        disp = dispersion_set(sol, cfg)
        vals = [
            sol.capacity,
            ap_bounds(sol, cfg, disp).upper,
            best_pp_bounds(sol, cfg, disp).lower,
            no_csit_bounds(law, cfg, pbar).lower,
        ]
        if with_tic:
            t = tic_rates(law, cfg, pbar, points=pts)
            vals += [t["tic_ap"], t["tic_pp"]]
        return vals

    rows = []
    for v in sweep_vals:
        row = [v]
        for sh2 in p["sigmaH2"]:
            pbar = v if sweep == "pbar" else p["pbar"][0]
            blocks = int(v) if sweep == "B" else int(p["B"][0])
            row += point(sh2, pbar, blocks)
        rows.append(row)
    return columns, rows


def _eh_rows(p: dict):
    sweep = p["sweep"]
    columns = [sweep, "capacity", "eh_upper", "eh_lower"]
    law = FadingLaw.from_sigma_h2(p["sigmaH2"], p["gain_convention"])
    rows = []
    for v in p[sweep]:
        ebar = v if sweep == "Ebar" else p["Ebar"][0]
        blocks = int(v) if sweep == "B" else int(p["B"][0])
        energy = EnergyLaw.from_moments(ebar, p["sigmaE2"])
        cfg = ChannelConfig(p["sigmaN2"], p["nc"], blocks, p["eps"])
        sol = solve_waterfill(law, p["sigmaN2"], ebar)
        r = eh_bounds(sol, cfg, dispersion_set(sol, cfg, energy), energy)
        rows.append([v, r.capacity, r.upper, r.lower])
    return columns, rows


def run_figure(name: str, overrides: dict = None) -> Tuple[List[str], List[list], dict]:
    """Evaluate figure ``name``; returns ``(columns, rows, parameters)``.

    Sweep-type keys (``B``, ``pbar``, ``Ebar``, ``sigmaH2``) take lists.
    """
    p = figure_defaults(name)
    for k, v in (overrides or {}).items():
        if k not in p:
            raise ParseError(f"{name} has no parameter {k!r}")
        if isinstance(p[k], list) and not isinstance(v, (list, tuple)):
            v = [v]
        p[k] = list(v) if isinstance(v, tuple) else v
    if name in ("fig1", "fig2", "fig3"):
        multi = name == "fig3" or len(p["sigmaH2"]) > 1
        columns, rows = _pp_rows(p, with_tic=name != "fig3", multi=multi)
    else:
        columns, rows = _eh_rows(p)
    return columns, rows, p
