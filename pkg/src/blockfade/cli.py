"""Command-line front end.

Parameters are ``key=value`` pairs, given on the command line or as lines
of a ``--config`` file (command-line pairs win).  Any ``<key>_dB`` is
converted with ``10^(v/10)``.  Results are written as CSV.

    blockfade waterfill sigmaH2=0.1 sigmaN2=4 pbar_dB=5
    blockfade bounds constraint=eh sigmaH2=0.9 sigmaN2=0.4 Ebar=17 sigmaE2=0.1 nc=20 B=400 eps=0.1
    blockfade figure fig1 B=950 --out fig1.csv
    blockfade simulate save-transmit seed=7 trials=1000 --out st.csv

Exit status is 0 on success, 1 for domain or numerical errors and 2 for
usage errors.  Failures print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from typing import Dict, List, Optional

from . import __version__
from .bounds import ap_bounds, best_pp_bounds, eh_bounds, moddev_bracket, no_csit_bounds, pp_bounds
from .dispersion import dispersion_set
from .distributions import EnergyLaw, FadingLaw
from .errors import BlockfadeError, ParseError, UnknownFigure, UsageError
from .figures import FIGURES, run_figure
from .simulate import (
    TRACE_COLUMNS,
    SimConfig,
    backoff_delta,
    info_density_moments,
    power_violation_prob,
    save_and_transmit,
)
from .waterfilling import ChannelConfig, solve_waterfill

OUTPUT_DIR_ENV = "BLOCKFADE_OUTPUT_DIR"
SIM_KINDS = ("info-density", "power-violation", "save-transmit")


def _as_int(s: str) -> int:
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"{s} is not an integer")
    return int(v)


def _as_floats(s: str) -> List[float]:
    """``a,b,c`` or ``start:stop:step`` (inclusive)."""
    if ":" in s:
        parts = [float(x) for x in s.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad range {s!r}; use start:stop:step")
        lo, hi, step = parts
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(count)]
    return [float(x) for x in s.split(",") if x.strip()]


def _as_ints(s: str) -> List[int]:
    return [_as_int(repr(v)) for v in _as_floats(s)]


_SCALARS = {
    "sigmaH2": float,
    "sigmaN2": float,
    "pbar": float,
    "Ebar": float,
    "sigmaE2": float,
    "nc": _as_int,
    "B": _as_int,
    "eps": float,
    "alpha": float,
    "gain_convention": str,
    "atoms": _as_floats,
    "probs": _as_floats,
}
_CHANNEL = ("sigmaH2", "gain_convention", "atoms", "probs", "sigmaN2")
_BLOCKS = ("nc", "B", "eps")

COMMAND_KEYS = {
    "waterfill": _CHANNEL + ("pbar",),
    "bounds": _CHANNEL + _BLOCKS + ("constraint", "pbar", "alpha", "Ebar", "sigmaE2"),
    "moddev": _CHANNEL + _BLOCKS + ("constraint", "pbar", "Ebar", "sigmaE2"),
    "simulate": _CHANNEL
    + _BLOCKS
    + ("pbar", "Ebar", "sigmaE2", "alpha", "seed", "trials", "workers", "delta_n", "save_slots", "symbols"),
}
_EXTRA_TYPES = {
    "constraint": str,
    "seed": _as_int,
    "trials": _as_int,
    "workers": _as_int,
    "save_slots": _as_int,
    "delta_n": float,
    "symbols": str,
}
_FIGURE_TYPES = {"B": _as_ints, "pbar": _as_floats, "Ebar": _as_floats}


def parse_pairs(items: List[str], source: str) -> Dict[str, str]:
    out = {}
    for raw in items:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{source}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def read_config(path: str) -> Dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_pairs(fh.read().splitlines(), path)


def _convert(key: str, raw: str, types: dict):
    try:
        return types[key](raw)
    except ValueError as exc:
        raise ParseError(f"bad value for {key}: {exc}") from None


def typed_params(pairs: Dict[str, str], allowed, types: dict) -> dict:
    """Convert raw strings, resolve ``*_dB`` keys and reject unknown keys."""
    out = {}
    for key, raw in pairs.items():
        if key.endswith("_dB"):
            base = key[:-3]
            if base not in allowed:
                raise ParseError(f"unknown key {key!r}")
            vals = _convert(base, raw, types)
            conv = lambda d: 10.0 ** (d / 10.0)  # noqa: E731
            out[base] = [conv(v) for v in vals] if isinstance(vals, list) else conv(vals)
        elif key in allowed:
            out[key] = _convert(key, raw, types)
        else:
            raise ParseError(f"unknown key {key!r}")
    return out


def require(params: dict, *keys: str) -> None:
    for k in keys:
        if k not in params:
            raise ParseError(f"missing required key {k!r}")


def _law(p: dict) -> FadingLaw:
    if "atoms" in p or "probs" in p:
        require(p, "atoms", "probs")
        return FadingLaw.discrete(p["atoms"], p["probs"])
    require(p, "sigmaH2")
    return FadingLaw.from_sigma_h2(p["sigmaH2"], p.get("gain_convention", "figure"))


def _cfg(p: dict) -> ChannelConfig:
    require(p, "sigmaN2", "nc", "B", "eps")
    return ChannelConfig(p["sigmaN2"], p["nc"], p["B"], p["eps"])


def _energy(p: dict) -> EnergyLaw:
    require(p, "Ebar")
    return EnergyLaw.from_moments(p["Ebar"], p.get("sigmaE2", 0.0))


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.9g}"
    if v is None:
        return ""
    return str(v)


def render_csv(columns, rows, sep: str = ",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=sep, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


# -- commands ---------------------------------------------------------------


def cmd_waterfill(p: dict):
    require(p, "sigmaN2", "pbar")
    sol = solve_waterfill(_law(p), p["sigmaN2"], p["pbar"])
    return ["lambda", "capacity", "threshold"], [[sol.lam, sol.capacity, sol.threshold]]


def cmd_bounds(p: dict):
    cfg = _cfg(p)
    law = _law(p)
    kind = p.get("constraint", "pp").lower()
    cols = ["constraint", "n", "capacity", "lower", "upper", "crossover_n", "alpha", "constant"]
    if kind == "eh":
        energy = _energy(p)
        sol = solve_waterfill(law, cfg.sigma_n2, energy.mean)
        grid = None if "alpha" not in p else [p["alpha"]]
        r = eh_bounds(sol, cfg, dispersion_set(sol, cfg, energy), energy, alpha_grid=grid, refine=grid is None)
        extra = [r.constants["alpha"], r.constants["K_eps_alpha"]]
        cols = cols[:-1] + ["K_eps_alpha", "save_slots"]
        extra.append(r.constants["save_slots"])
    else:
        require(p, "pbar")
        if kind == "nocsit":
            r = no_csit_bounds(law, cfg, p["pbar"])
            extra = ["", r.constants.get("dispersion")]
        else:
            sol = solve_waterfill(law, cfg.sigma_n2, p["pbar"])
            disp = dispersion_set(sol, cfg)
            if kind == "ap":
                r = ap_bounds(sol, cfg, disp)
                extra = ["", disp.v_bf]
            elif kind == "pp":
                r = pp_bounds(sol, cfg, disp, p["alpha"]) if "alpha" in p else best_pp_bounds(sol, cfg, disp)
                extra = [r.constants["alpha"], r.constants["c_eps"]]
            else:
                raise ParseError(f"constraint must be pp, ap, eh or nocsit, got {kind!r}")
    return cols, [[r.constraint, r.n, r.capacity, r.lower, r.upper, r.crossover_n] + extra]


def cmd_moddev(p: dict):
    cfg = _cfg(p)
    law = _law(p)
    kind = p.get("constraint", "pp").lower()
    if kind == "eh":
        energy = _energy(p)
        sol = solve_waterfill(law, cfg.sigma_n2, energy.mean)
        disp = dispersion_set(sol, cfg, energy)
        b = moddev_bracket(disp, "EH")
    elif kind in ("pp", "ap"):
        require(p, "pbar")
        sol = solve_waterfill(law, cfg.sigma_n2, p["pbar"])
        b = moddev_bracket(dispersion_set(sol, cfg), "PP/AP")
    else:
        raise ParseError(f"constraint must be pp, ap or eh, got {kind!r}")
    return ["constraint", "lo", "hi", "ordered"], [[b.constraint, b.lo, b.hi, b.ordered]]


def cmd_simulate(kind: str, p: dict, trace_path: Optional[str], sep: str):
    cfg = _cfg(p)
    law = _law(p)
    energy = _energy(p) if kind == "save-transmit" else None
    if kind == "save-transmit":
        pbar = energy.mean
    else:
        require(p, "pbar")
        pbar = p["pbar"]
    sol = solve_waterfill(law, cfg.sigma_n2, pbar)
    delta = p.get("delta_n")
    if kind == "power-violation" and delta is None:
        delta = backoff_delta(sol, cfg, p.get("alpha", 0.5))
    sim = SimConfig(
        seed=p.get("seed", 0),
        trials=p.get("trials", 100_000),
        cfg=cfg,
        sol=sol,
        energy=energy,
        delta_n=delta,
        save_slots=p.get("save_slots"),
        alpha=p.get("alpha"),
        symbol_energy=p.get("symbols", "gaussian"),
        workers=p.get("workers", 1),
    )
    trace = [] if trace_path else None
    if kind == "info-density":
        rep = info_density_moments(sim)
    elif kind == "power-violation":
        rep = power_violation_prob(sim)
    else:
        rep = save_and_transmit(sim, trace=trace)
    if trace_path:
        write_atomic(trace_path, render_csv(TRACE_COLUMNS, trace, sep))
    keys = sorted(k for k, v in rep.extras.items() if not isinstance(v, (list, dict)))
    cols = ["estimate", "std_error", "trials"] + keys + ["violated_assertions"]
    row = [rep.estimate, rep.std_error, rep.trials] + [rep.extras[k] for k in keys]
    row.append(";".join(rep.violated_assertions))
    return cols, [row]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blockfade",
        description="Finite-blocklength rate bounds for block-fading channels.",
        epilog="Parameters follow the command as key=value pairs.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of key=value lines; command-line pairs take precedence")
    common.add_argument("--out", help="output CSV path (default: $%s/<name>.csv, else stdout)" % OUTPUT_DIR_ENV)
    common.add_argument("--tsv", action="store_true", help="tab-separated output")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("waterfill", parents=[common], help="water level and capacity")
    sub.add_parser("bounds", parents=[common], help="second-order bounds (constraint=pp|ap|eh|nocsit)")
    sub.add_parser("moddev", parents=[common], help="moderate-deviation bracket (constraint=pp|eh)")
    f = sub.add_parser("figure", parents=[common], help="reproduce a figure sweep")
    f.add_argument("name", help=", ".join(sorted(FIGURES)))
    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo checks")
    s.add_argument("kind", choices=SIM_KINDS)
    s.add_argument("--trace", help="CSV dump of the first trial's slots (save-transmit only)")
    return ap


def _output_path(args, default_name: str) -> Optional[str]:
    if args.out:
        return args.out
    d = os.environ.get(OUTPUT_DIR_ENV)
    return os.path.join(d, default_name) if d else None


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    stray = [a for a in rest if "=" not in a or a.startswith("-")]
    if stray:
        parser.error(f"unrecognized arguments: {' '.join(stray)}")
    args.params = rest
    pairs = read_config(args.config) if args.config else {}
    overrides = parse_pairs(args.params, "command line")
    pairs.update(overrides)
    sep = "\t" if args.tsv else ","

    if args.command == "figure":
        if args.name not in FIGURES:
            raise UnknownFigure(f"unknown figure {args.name!r}; choose from {sorted(FIGURES)}")
        types = {k: _FIGURE_TYPES.get(k, _SCALARS.get(k, str)) for k in FIGURES[args.name]}
        types["sigmaH2"] = _as_floats if isinstance(FIGURES[args.name]["sigmaH2"], list) else float
        types["gain_convention"] = str
        allowed = set(types) - {"sweep"}
        params = typed_params(pairs, allowed, types)
        cols, rows, resolved = run_figure(args.name, params)
        name = args.name
    else:
        types = {**_SCALARS, **_EXTRA_TYPES}
        params = typed_params(pairs, COMMAND_KEYS[args.command], types)
        resolved = params
        if args.command == "waterfill":
            cols, rows = cmd_waterfill(params)
        elif args.command == "bounds":
            cols, rows = cmd_bounds(params)
        elif args.command == "moddev":
            cols, rows = cmd_moddev(params)
        else:
            cols, rows = cmd_simulate(args.kind, params, args.trace, sep)
        name = args.command if args.command != "simulate" else f"simulate-{args.kind}"

    text = render_csv(cols, rows, sep)
    path = _output_path(args, f"{name}.csv")
    if path is None:
        sys.stdout.write(text)
        return 0
    write_atomic(path, text)
    meta = {
        "command": args.command,
        "target": getattr(args, "name", None) or getattr(args, "kind", None),
        "overrides": overrides,
        "config_file": args.config,
        "parameters": _jsonable(resolved),
        "columns": cols,
        "version": __version__,
    }
    write_atomic(path + ".json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(path)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        _report(exc)
        return 2
    except (BlockfadeError, OSError) as exc:
        _report(exc)
        return 1


def _report(exc: BaseException) -> None:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
