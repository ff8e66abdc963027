"""Command-line frontend: ``homog-nd {cell,solve,rates,mesh-study}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure.  The output
directory is ``--out`` if given, else ``$HOMOG_ND_OUT``, else ``./homog_nd_out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__, analytic, cell, epssolve, rates, report
from .errors import CompatibilityError, SolverError
from .fields import CoefficientSpec, GridFunction, TorusField, square_nodes

log = logging.getLogger("homog_nd")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
DEFAULT_OUT = "homog_nd_out"


class ConfigError(ValueError):
    pass


def output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get("HOMOG_ND_OUT") or DEFAULT_OUT)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _provenance(args, started: float) -> dict:
    return {
        "version": __version__,
        "command": args.command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")},
        "wall_time_s": round(time.time() - started, 3),
    }


def load_coefficient(name: str):
    """``(CoefficientSpec, closed-form pack or None)`` from a builtin name or a matrix grid file."""
    if Path(name).is_file():
        return CoefficientSpec.from_torus(TorusField.load(name), Path(name).stem), None
    pack = analytic.get_coefficient(name)
    return pack.spec, pack


# ---------------------------------------------------------------------------
# cell
# ---------------------------------------------------------------------------


def cmd_cell(args) -> int:
    started = time.time()
    spec, _ = load_coefficient(args.coef)
    sol = cell.solve_cell(spec, args.n, with_chi=not args.no_chi)
    out = output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "." + args.format
    sol.r.save(out / f"r{ext}")
    for (k, l), v in sol.V.items():
        v.save(out / f"v{k + 1}{l + 1}{ext}")
    for (j, k, l), chi in sol.chi.items():
        chi.save(out / f"chi{j + 1}{k + 1}{l + 1}{ext}")
    sol.psi.save(out / f"psi{ext}")
    sol.Adiv.save(out / f"adiv{ext}")
    summary = {
        "coefficient": args.coef,
        "N": sol.N,
        "Abar": sol.Abar.tolist(),
        "c_tensor": sol.c_entries(),
        "classification": sol.classification(),
        "residuals": sol.residuals,
        "r_min": float(sol.r.values.min()),
        "provenance": _provenance(args, started),
    }
    _write_json(out / "summary.json", summary)
    print(f"{args.coef}: {summary['classification']}  (N={sol.N})")
    print("Abar = " + np.array2string(sol.Abar, precision=10))
    for name, value in summary["c_tensor"].items():
        print(f"  {name} = {value: .6e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    started = time.time()
    try:
        k = epssolve.as_reciprocal(args.eps)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    eps = 1.0 / k
    M = args.m if args.m is not None else args.mrule * k
    spec, pack = load_coefficient(args.coef)
    rhs = analytic.builtin_rhs(args.rhs)
    if pack is not None:
        A, r, Adiv, Abar = pack.A, pack.r, pack.Adiv, np.asarray(pack.Abar, dtype=float)
    else:
        sol = cell.solve_cell(spec, args.cell_n, with_chi=False)
        A, r, Adiv, Abar = spec, sol.r.interpolate, sol.Adiv.interpolate, sol.Abar
    problem = epssolve.EpsProblem(A, rhs.f, eps, args.backend, r=r, Adiv=Adiv, mrule=args.mrule)
    u_eps = epssolve.solve_eps(problem, M)
    out = output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "." + args.format
    u_eps.save(out / f"u_eps{ext}")
    summary = {"coefficient": args.coef, "rhs": args.rhs, "epsilon": f"1/{k}", "M": M, "backend": args.backend}
    # the homogenized solution is known in closed form only when Abar is the identity
    if rhs.u is not None and np.allclose(Abar, np.eye(2), atol=1e-6):
        diff = u_eps.values - rhs.u(*square_nodes(M))
        GridFunction(diff, dirichlet=False).save(out / f"diff{ext}")
        summary["max_error"] = float(np.abs(diff).max())
        print(f"max |u_eps - u| = {summary['max_error']:.6e}")
    summary["provenance"] = _provenance(args, started)
    _write_json(out / "summary.json", summary)
    print(f"wrote {out / ('u_eps' + ext)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# rates / mesh-study
# ---------------------------------------------------------------------------

_LIST_KEYS = {"epsilons", "ps", "functionals"}
_INT_KEYS = {"mrule", "u_resolution", "cell_resolution", "fit_points", "seed"}
_ALIASES = {"coef": "coefficient", "eps": "epsilons", "m_rule": "mrule", "mRule": "mrule", "cell_n": "cell_resolution"}


def _parse_eps_list(text) -> tuple[int, ...]:
    items = text if isinstance(text, (list, tuple)) else [t for t in str(text).replace(" ", "").split(",") if t]
    try:
        return tuple(epssolve.as_reciprocal(t) for t in items)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad epsilon list {text!r}: {exc}") from None


def _coerce(key: str, value):
    if key == "epsilons":
        return _parse_eps_list(value)
    if key == "ps":
        items = value if isinstance(value, (list, tuple)) else str(value).split(",")
        return tuple(float(p) if float(p) != int(float(p)) else int(float(p)) for p in items if str(p).strip())
    if key == "functionals":
        items = value if isinstance(value, (list, tuple)) else str(value).split(",")
        return tuple(s.strip() for s in items if s.strip())
    if key == "oracles":
        return value
    if key in _INT_KEYS:
        return None if str(value).lower() in ("none", "auto") else int(value)
    return str(value)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, ``oracle.V = numeric`` sets a toggle."""
    values: dict = {}
    oracles: dict = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        k = _ALIASES.get(k, k)
        if k.startswith("oracle.") or k.startswith("oracles."):
            oracles[k.split(".", 1)[1]] = v
        else:
            values[k] = v
    if oracles:
        values["oracles"] = oracles
    return values


def _overrides(args) -> dict:
    over: dict = {}
    for attr, key in (("coef", "coefficient"), ("rhs", "rhs"), ("backend", "backend"), ("eps", "epsilons"),
                      ("ps", "ps"), ("functionals", "functionals"), ("mrule", "mrule"),
                      ("u_resolution", "u_resolution"), ("cell_n", "cell_resolution"),
                      ("fit_points", "fit_points"), ("seed", "seed")):
        value = getattr(args, attr, None)
        if value is not None:
            over[key] = value
    if getattr(args, "oracle", None):
        toggles = {}
        for item in args.oracle:
            if "=" not in item:
                raise ConfigError(f"--oracle expects NAME=closed-form|numeric, got {item!r}")
            name, val = item.split("=", 1)
            toggles[name.strip()] = val.strip()
        over["oracles"] = toggles
    return over


def _apply(cfg: rates.ExperimentConfig, values: dict) -> rates.ExperimentConfig:
    fields_ = set(asdict(cfg))
    kwargs = {}
    for k, v in values.items():
        k = _ALIASES.get(k, k)
        if k not in fields_:
            raise ConfigError(f"unknown config key {k!r}; valid: {', '.join(sorted(fields_))}")
        try:
            kwargs[k] = _coerce(k, v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
    if "oracles" in kwargs:
        kwargs["oracles"] = {**cfg.oracles, **kwargs["oracles"]}
    return replace(cfg, **kwargs)


def build_configs(args) -> list[tuple[str, rates.ExperimentConfig]]:
    """Preset (or a single default config), then config-file values, then flags."""
    if args.preset:
        try:
            base = rates.preset(args.preset)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        stem = args.preset
    else:
        base = [("rates", rates.ExperimentConfig())]
        stem = None
    file_values = read_config_file(args.config) if args.config else {}
    over = _overrides(args)
    out = []
    for label, cfg in base:
        cfg = _apply(_apply(cfg, file_values), over)
        try:
            cfg.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        out.append((f"{stem}-{label}" if stem else label, cfg))
    return out


def _slope_table(name: str, rep: rates.RateReport) -> str:
    lines = [f"{name}:", f"  {'functional':<12} {'p':>4} {'slope':>8} {'R^2':>8}"]
    for f in rep.fits:
        lines.append(f"  {f.functional:<12} {'' if f.p is None else f'{f.p:g}':>4} {f.slope:8.3f} {f.r_squared:8.4f}")
    return "\n".join(lines)


def cmd_rates(args) -> int:
    configs = build_configs(args)
    out = output_dir(args.out)
    reports = []
    timings = []
    for name, cfg in configs:
        t0 = time.time()
        reports.append((name, rates.run_experiment(cfg, jobs=args.jobs)))
        timings.append((name, time.time() - t0))
    # all writes happen after every sweep has finished
    out.mkdir(parents=True, exist_ok=True)
    for name, rep in reports:
        report.write_report(rep, out, name)
        print(_slope_table(name, rep))
    with open(out / "run-log.txt", "w") as fh:
        fh.write(f"homog_nd {__version__}\n")
        for name, seconds in timings:
            fh.write(f"{name}: wall time {seconds:.2f} s\n")
    return EXIT_OK


def cmd_mesh_study(args) -> int:
    configs = build_configs(args)
    try:
        k = epssolve.as_reciprocal(args.at_eps)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    factors = tuple(int(f) for f in args.factors.split(","))
    out = output_dir(args.out)
    results = []
    for name, cfg in configs:
        samples = rates.mesh_study(cfg, k, factors)
        results.append((name, cfg, samples))
    out.mkdir(parents=True, exist_ok=True)
    for name, cfg, samples in results:
        doc = {"config": cfg.to_dict(), "epsilon": f"1/{k}", "version": __version__,
               "samples": [asdict(s) for s in samples]}
        (out / f"{name}-mesh-study.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{name}: eps = 1/{k}")
        keys = list(samples[0].values)
        print("  " + f"{'M':>6} " + " ".join(f"{kk:>12}" for kk in keys))
        for s in samples:
            print("  " + f"{s.M:>6} " + " ".join(f"{s.values[kk]:12.5e}" for kk in keys))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help=f"one of: {', '.join(rates.PRESETS)}")
    p.add_argument("--config", help="key = value config file (flags override it)")
    p.add_argument("--coef", help="coefficient name or matrix grid file")
    p.add_argument("--rhs")
    p.add_argument("--backend", choices=epssolve.BACKENDS)
    p.add_argument("--eps", help="comma-separated list such as 1/5,1/10,1/20")
    p.add_argument("--ps", help="comma-separated exponents, e.g. 2,3,4,5")
    p.add_argument("--functionals", help=f"comma-separated subset of {','.join(rates.FUNCTIONALS)}")
    p.add_argument("--mrule", type=int, help="cells per oscillation period (M = mrule/eps)")
    p.add_argument("--u-resolution", type=int, dest="u_resolution")
    p.add_argument("--cell-n", type=int, dest="cell_n", help="torus resolution for numeric r and V")
    p.add_argument("--fit-points", type=int, dest="fit_points")
    p.add_argument("--oracle", action="append", metavar="NAME=closed-form|numeric",
                   help="per-object toggle for r, V, u, z (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default $HOMOG_ND_OUT or ./homog_nd_out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homog-nd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cell", help="solve the cell problems and classify the coefficient")
    p.add_argument("--coef", default="cbad", help="coefficient name or matrix grid file")
    p.add_argument("--n", type=int, default=128, help="torus resolution N (even, >= 8)")
    p.add_argument("--no-chi", action="store_true", help="skip the six chi problems")
    p.add_argument("--format", choices=("txt", "bin"), default="txt")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cell)

    p = sub.add_parser("solve", help="solve one oscillatory Dirichlet problem")
    p.add_argument("--coef", default="cbad")
    p.add_argument("--rhs", default="sinsin")
    p.add_argument("--eps", required=True, help="epsilon as 1/k")
    p.add_argument("--m", type=int, help="cells per side (default mrule/eps)")
    p.add_argument("--mrule", type=int, default=epssolve.MRULE)
    p.add_argument("--backend", choices=epssolve.BACKENDS, default="fd-nondiv")
    p.add_argument("--cell-n", type=int, default=128, dest="cell_n",
                   help="torus resolution for sampled coefficients")
    p.add_argument("--format", choices=("txt", "bin"), default="txt")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rates", help="run an epsilon sweep and fit convergence rates")
    _add_sweep_flags(p)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="concurrent epsilon jobs")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("mesh-study", help="functionals at one epsilon under grid refinement")
    _add_sweep_flags(p)
    p.add_argument("--at-eps", default="1/10", dest="at_eps", help="epsilon to study")
    p.add_argument("--factors", default="1,2,4", help="multipliers of mrule/eps")
    p.set_defaults(func=cmd_mesh_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SolverError, CompatibilityError) as exc:
        print(f"homog-nd: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"homog-nd: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
