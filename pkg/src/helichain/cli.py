"""Command-line front end.

Settings resolve as subcommand defaults, then the TOML file given by
``--config``, then explicit flags. The resolved settings are echoed into the
JSON summary and hashed into every file name.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import io as hio
from .chirality import jump_count, order_parameter
from .errors import DomainError, HelichainError, NumericalFailure, PreconditionError
from .lab.continuum import MMConfig, continuum_min, continuum_width, mm_energy, mm_limit_constant, recovery_field
from .lab.homog import fhom_bounds, fhom_estimate
from .lab.identities import identity_suite
from .lab.transition import ScalingSequence, regime_sweep, transition_energy
from .minimize import (
    NO_CLAMP,
    Clamp,
    OptimizerSettings,
    Trace,
    brute_force_min,
    descend,
    random_increments,
)
from .spin import (
    ModelParams,
    SpinChain,
    boundary_ok,
    chain_from_csv,
    chain_to_csv,
    energy_E,
    energy_Ehf,
    energy_H,
    energy_Hhf,
    ground_state,
    increments_to_csv,
    min_energy_analytic,
)

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64
EMIT_CHOICES = ("csv", "json", "plotdata")

DEFAULTS = {
    "energy": {"lambda": 1e-3, "j1": 2.0, "delta": None, "input": None, "chirality": 1},
    "ground-state": {"lambda": 1e-3, "j1": 2.0, "chirality": 1},
    "minimize": {
        "lambda": 5e-3,
        "delta": 0.05,
        "seed": 0,
        "method": "newton",
        "max_iterations": 100_000,
        "clamp": False,
    },
    "transition": {"lambda": 1e-4, "delta": 1e-2, "threshold": 0.5, "allow_wide": False, "clamp_width": 2},
    "sweep": {"lambda": [2.5e-4, 5e-4, 1e-3], "delta": [1e-2], "workers": None},
    "fhom": {"j1": 2.0, "z": [0.5, 0.0], "cell_size": 64, "rho": 0.002, "directions": 0},
    "mm-check": {"lambda": 1e-4, "delta": 1e-2, "well": "quartic", "eps": 0.01, "l": None},
    "oracle": {"sites": 4, "j1": 2.0, "grid": 721},
    "identities": {"seed": 0, "samples": 100},
}
COMMON = {"out": None, "emit": ["csv", "json"]}
# keys that change how a run executes but not what it computes
RUNTIME_KEYS = {"workers", "out"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit_list(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in EMIT_CHOICES]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"emit takes a comma list of {EMIT_CHOICES}, got {text!r}")
    return items


def build_parser() -> Parser:
    parser = Parser(prog="helichain", description="F-AF spin-chain laboratory")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=Parser)
    S = argparse.SUPPRESS

    def command(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=S)
        p.add_argument("--config", help="TOML file with settings; flags override it")
        p.add_argument("--out", help="output directory (default: $HELICHAIN_OUT, else stdout)")
        p.add_argument("--emit", type=_emit_list, help="comma list from csv,json,plotdata")
        return p

    p = command("energy", "evaluate E, H (and the renormalized pair with --delta)")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--j1", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--input", help="chain CSV with columns i,x,y (default: the ground state)")

    p = command("ground-state", "helical or ferromagnetic ground state")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--j1", type=float)
    p.add_argument("--chirality", type=int, choices=(1, -1))

    p = command("minimize", "descend the renormalized energy from a seeded random start")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=("gradient", "newton"))
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--clamp", action="store_true", help="clamp opposite chiralities at the ends")

    p = command("transition", "clamped chirality transition and its scaled energy")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--allow-wide", dest="allow_wide", action="store_true")
    p.add_argument("--clamp-width", dest="clamp_width", type=int)

    p = command("sweep", "transition energies along a scaling sequence")
    p.add_argument("--lambda", dest="lambda", type=float, nargs="+")
    p.add_argument("--delta", type=float, nargs="+")
    p.add_argument("--workers", type=int, help="parallel entries (default: logical cores)")

    p = command("fhom", "cell-problem estimate of the bulk density")
    p.add_argument("--j1", type=float)
    p.add_argument("--z", type=float, nargs=2, metavar=("ZX", "ZY"))
    p.add_argument("--cell-size", dest="cell_size", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--directions", type=int, help="radial check over this many rotations (0: off)")

    p = command("mm-check", "interface constant, recovery energy and continuum oracle")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--well", choices=("quartic", "quartic4"))
    p.add_argument("--eps", type=float)
    p.add_argument("--l", type=float, help="also minimize the continuum functional at this l")

    p = command("oracle", "grid brute force against the closed-form minimum")
    p.add_argument("--sites", type=int)
    p.add_argument("--j1", type=float)
    p.add_argument("--grid", type=int)

    p = command("identities", "exact identity suite on seeded random data")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    return parser


def _load_toml(path: str, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    flat = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    section = raw.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config entry [{command}] must be a table")
    stray = [k for k, v in raw.items() if isinstance(v, dict) and k != command]
    if stray:
        raise UsageError(f"config has tables for other subcommands: {stray}")
    flat.update(section)
    return {k.replace("-", "_"): v for k, v in flat.items()}


def resolve(command: str, ns: argparse.Namespace, env=os.environ) -> dict:
    known = {**DEFAULTS[command], **COMMON}
    config = dict(known)
    if getattr(ns, "config", None):
        loaded = _load_toml(ns.config, command)
        unknown = sorted(set(loaded) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {unknown}")
        config.update(loaded)
    for key in known:
        if hasattr(ns, key):
            config[key] = getattr(ns, key)
    if config["out"] is None and env.get("HELICHAIN_OUT"):
        config["out"] = env["HELICHAIN_OUT"]
    if isinstance(config["emit"], str):
        config["emit"] = _emit_list(config["emit"])
    return config


# --- subcommands -------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([hio.fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def run_energy(cfg):
    lam = cfg["lambda"]
    p = ModelParams(cfg["j1"], lam)
    if cfg["input"]:
        with open(cfg["input"]) as fh:
            chain = chain_from_csv(fh.read(), lam)
    else:
        chain = ground_state(p, cfg["chirality"]).chain
    summary = {
        "energy_E": energy_E(chain, p),
        "energy_H": energy_H(chain, p),
        "boundary_ok": boundary_ok(chain),
        "sites": len(chain),
    }
    if cfg["delta"] is not None:
        summary["energy_Ehf"] = energy_Ehf(chain, cfg["delta"])
        summary["energy_Hhf"] = energy_Hhf(chain, cfg["delta"])
    return summary, chain_to_csv(chain), None


def run_ground_state(cfg):
    p = ModelParams(cfg["j1"], cfg["lambda"])
    gs = ground_state(p, cfg["chirality"])
    e = energy_E(gs.chain, p)
    exact = min_energy_analytic(p)
    summary = {
        "angle": gs.angle,
        "ferromagnetic": gs.ferromagnetic,
        "energy_E": e,
        "min_energy_analytic": exact,
        "abs_error": abs(e - exact),
        "sites": len(gs.chain),
    }
    return summary, chain_to_csv(gs.chain), None


def run_minimize(cfg):
    lam, delta = cfg["lambda"], cfg["delta"]
    settings = OptimizerSettings(max_iterations=cfg["max_iterations"], seed=cfg["seed"], method=cfg["method"])
    trace = Trace()
    clamp = Clamp.chirality(delta) if cfg["clamp"] else NO_CLAMP
    res = descend(random_increments(lam, delta, cfg["seed"]), delta, clamp, settings, trace)
    z = order_parameter(SpinChain.from_increments(res.incr), delta)
    summary = {
        "energy_Hhf": res.energy,
        "iterations": res.iterations,
        "converged": res.converged,
        "status": res.status,
        "grad_norm": res.grad_norm,
        "jumps": jump_count(z),
    }
    return summary, increments_to_csv(res.incr), trace.to_csv()


def run_transition(cfg):
    rep = transition_energy(
        cfg["lambda"], cfg["delta"], allow_wide=cfg["allow_wide"],
        clamp_width=cfg["clamp_width"], threshold=cfg["threshold"],
    )
    z = rep.order_field
    summary = rep.summary()
    if rep.width is not None:
        fit = np.tanh((z.x - rep.center) / rep.width)
    else:
        fit = np.full(z.z.shape, np.nan)
    plot = _csv(["x", "z", "tanh_fit"], zip(z.x, z.z, fit))
    return summary, z.to_csv(), plot


def run_sweep(cfg):
    lams, deltas = list(cfg["lambda"]), list(cfg["delta"])
    if len(lams) == 1:
        lams = lams * len(deltas)
    if len(deltas) == 1:
        deltas = deltas * len(lams)
    if len(lams) != len(deltas):
        raise DomainError(f"lambda and delta lists differ in length ({len(lams)} vs {len(deltas)})")
    seq = ScalingSequence(tuple(zip(lams, deltas)))
    workers = cfg["workers"] or os.cpu_count() or 1
    table = regime_sweep(seq, workers=workers)
    summary = {
        "entries": len(seq),
        "errors": {str(k): v for k, v in table.errors.items()},
        "trend": {r: table.trend(r) for r in ("l_zero", "l_finite", "l_infinite")},
        "scaled_energy": [None if r is None else r.scaled_energy for r in table.reports],
    }
    plot = _csv(["ratio", "scaled_energy"], [(r.ratio, r.scaled_energy) for r in table.reports if r is not None])
    return summary, table.to_csv(), plot


def run_fhom(cfg):
    p = ModelParams(cfg["j1"], 0.5)
    z = np.asarray(cfg["z"], dtype=float)
    r = float(np.hypot(*z))
    lo, hi = fhom_bounds(r, cfg["j1"])
    kw = {"k": cfg["cell_size"], "rho": cfg["rho"]}
    est = fhom_estimate(z, p, **kw)
    summary = {**est.to_dict(), "lower_bound": lo, "upper_bound": hi}
    rows = [(0, z[0], z[1], est.value)]
    m = cfg["directions"]
    if m:
        if m < 3:
            raise DomainError(f"radial check needs at least 3 directions, got {m}")
        angle = math.atan2(z[1], z[0])
        rows = []
        for j in range(m):
            a = angle + 2.0 * math.pi * j / m
            zz = (r * math.cos(a), r * math.sin(a))
            rows.append((j, zz[0], zz[1], fhom_estimate(zz, p, **kw).value))
        vals = [row[3] for row in rows]
        summary["radial_spread"] = max(vals) - min(vals)
    return summary, _csv(["direction", "zx", "zy", "value"], rows), None


def run_mm_check(cfg):
    lam, delta = cfg["lambda"], cfg["delta"]
    cw = mm_limit_constant(cfg["well"])
    field = recovery_field(lam, delta, cfg["eps"])
    l_ratio = lam / math.sqrt(2.0 * delta)
    e = mm_energy(field, MMConfig(l_ratio, l_ratio, cfg["well"]), lam)
    summary = {"c_w": cw, "recovery_energy": e, "recovery_ratio": e / cw, "l": l_ratio}
    plot = None
    if cfg["l"] is not None:
        zc, ec = continuum_min(cfg["l"])
        summary["continuum_energy"] = ec
        summary["continuum_width"] = continuum_width(zc).width
        plot = _csv(["x", "z"], zip(np.linspace(0.0, 1.0, zc.size), zc))
    return summary, field.to_csv(), plot


def run_oracle(cfg):
    n = cfg["sites"]
    if n < 3:
        raise DomainError(f"need at least 3 sites, got {n}")
    p = ModelParams(cfg["j1"], 1.0 / (n - 1))
    best, incr = brute_force_min(n, p, cfg["grid"])
    exact = min_energy_analytic(p)
    summary = {"brute_force": best, "analytic": exact, "gap": best - exact}
    return summary, increments_to_csv(incr), None


def run_identities(cfg):
    checks = identity_suite(cfg["seed"], cfg["samples"])
    summary = {c.name: {"residual": c.residual, "tolerance": c.tolerance, "passed": c.passed} for c in checks}
    failed = [c.name for c in checks if not c.passed]
    if failed:
        summary["failed"] = failed
    return summary, _csv(["name", "residual", "tolerance", "passed"], [
        (c.name, c.residual, c.tolerance, c.passed) for c in checks
    ]), None


RUNNERS = {
    "energy": run_energy,
    "ground-state": run_ground_state,
    "minimize": run_minimize,
    "transition": run_transition,
    "sweep": run_sweep,
    "fhom": run_fhom,
    "mm-check": run_mm_check,
    "oracle": run_oracle,
    "identities": run_identities,
}


def _emit(command: str, cfg: dict, summary: dict, table: str | None, plot: str | None, stdout) -> None:
    hashed = {k: v for k, v in cfg.items() if k not in RUNTIME_KEYS and k != "emit"}
    digest = hio.config_hash({"command": command, **hashed})
    doc = {
        "schema": hio.SCHEMA,
        "command": command,
        "config": hashed,
        "config_hash": digest,
        "result": summary,
    }
    texts = {"json": hio.dumps(doc)}
    if table is not None:
        texts["csv"] = table
    if plot is not None:
        texts["plotdata"] = plot
    suffix = {"json": ".json", "csv": ".csv", "plotdata": ".plot.csv"}
    if cfg["out"]:
        out = Path(cfg["out"])
        written = []
        for kind in cfg["emit"]:
            if kind in texts:
                written.append(hio.write_text(out, hio.output_name(command, digest, suffix[kind]), texts[kind]))
        # wall-clock data lives only here so the outputs stay byte-identical
        with open(out / "run.log", "a") as log:
            stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
            log.write(f"{stamp} {command} {digest[:12]} {' '.join(p.name for p in written)}\n")
        stdout.write(texts["json"])
    else:
        for kind in ("csv", "plotdata"):
            if kind in cfg["emit"] and kind in texts:
                stdout.write(texts[kind])
        stdout.write(texts["json"])


def run(argv=None, stdout=None, stderr=None, env=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    env = os.environ if env is None else env
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if ns.command is None:
        parser.print_usage(stderr)
        return EXIT_USAGE
    try:
        cfg = resolve(ns.command, ns, env)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        stderr.write(f"helichain: error: {exc}\n")
        return EXIT_USAGE
    try:
        summary, table, plot = RUNNERS[ns.command](cfg)
    except (DomainError, PreconditionError) as exc:
        stderr.write(f"helichain: {type(exc).__name__}: {exc}\n")
        return EXIT_DOMAIN
    except NumericalFailure as exc:
        stderr.write(f"helichain: NumericalFailure: {exc}\n")
        return EXIT_NUMERICAL
    except HelichainError as exc:
        stderr.write(f"helichain: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        stderr.write(f"helichain: {exc}\n")
        return EXIT_DOMAIN
    _emit(ns.command, cfg, summary, table, plot, stdout)
    if ns.command == "identities" and "failed" in summary:
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
