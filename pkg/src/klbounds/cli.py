"""Command-line interface.

Every command reads an optional JSON config (``--config``) and then applies
flag overrides; each config key has exactly one flag. Sweep ranges use
``lo:hi:count``. Exit status is 0 on success, 2 when the problem is
infeasible (an infeasible row in a sweep, or no feasible slack below
``--delta-hi``) and 1 on any other failure, usage errors included.
"""
import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as kio
from .bootstrap import bootstrap_gap, min_slack
from .errors import BisectionError, ConfigError, DomainError, NonContiguousError, ParseError, SolverError
from .inversion import GaussianSmear, Retarded, Window, sweep
from .spectral import synth_correlator

log = logging.getLogger("klbounds")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INFEASIBLE = 2

# flag spellings that differ from the plain ``--key`` form
_FLAG_NAMES = {
    ("input", "correlator"): ["--corr"],
    ("constraints", "N_c"): ["--n-c", "--n"],
    ("grid", "N_v"): ["--n-v"],
    ("output", "directory"): ["--out-dir"],
}

_HELP = {
    "correlator": "correlator CSV (header x,C)",
    "model": "spectral model document (JSON)",
    "slack": "constant slack δC on every correlator point",
    "N_v": "number of grid nodes",
    "N_c": "number of constraint points",
    "spacing": "constraint point spacing: log or linear",
    "sigma2": "squared Gaussian smearing width σ²",
    "mu2": "μ² sweep, lo:hi:count",
    "t": "time sweep, lo:hi:count",
    "s_reg": "zero the density for s <= s_reg (default mass²/10 if --mass is set)",
    "mass": "mass-gap estimate, used by bound-gr and zphi",
    "window_factors": "zphi upper limits, in units of mass², comma separated",
    "threshold_factor": "continuum threshold in units of M²: 4 or 9",
    "split": "with several feasible mass runs: error, or keep the heaviest",
    "workers": "parallel solves (default: available cores)",
    "directory": "directory for default output names",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _flag_type(typ):
    if typ is tuple:
        return lambda s: tuple(float(v) for v in s.split(","))
    return typ


def _config_parent():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON run configuration")
    parent.add_argument("--out", help="output file (default: <out-dir>/<command>.<ext>)")
    parent.add_argument("-v", "--verbose", action="store_true", help="log progress")
    groups = {}
    for sec, key, typ, default in kio.RunConfig.schema():
        if sec not in groups:
            groups[sec] = parent.add_argument_group(f"{sec} settings")
        flags = _FLAG_NAMES.get((sec, key), ["--" + key.lower().replace("_", "-")])
        groups[sec].add_argument(
            *flags, dest=f"{sec}__{key}", type=_flag_type(typ), default=argparse.SUPPRESS,
            help=f"{_HELP.get(key, key)} (default {default!r})",
        )
    return parent


def build_parser():
    parser = _Parser(
        prog="klbounds",
        description="Bounds on spectral quantities from Euclidean two-point data.",
        epilog="Ranges are written lo:hi:count, e.g. --mu2 0:20:200.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parent = _config_parent()
    docs = {
        "gen": "synthesise a correlator CSV from a model document",
        "bound-rho": "bounds on the smeared spectral density over a μ² sweep",
        "bound-gr": "bounds on the retarded propagator over a t sweep",
        "min-slack": "smallest slack compatible with the data",
        "gap": "mass-gap bootstrap",
        "zphi": "bounds on the spectral weight below f·M² for each window factor f",
    }
    for name, doc in docs.items():
        sub.add_parser(name, parents=[parent], help=doc, description=doc)
    p = sub.add_parser("plot", help="render bounds CSVs or gap results to an image",
                       description="Render a bounds CSV, or a series of gap results "
                                   "against a parameter, to a static image.")
    p.add_argument("inputs", nargs="+", help="one bounds CSV, or several gap result documents")
    p.add_argument("--values", help="parameter value for each gap result, comma separated")
    p.add_argument("--xlabel", default=None)
    p.add_argument("--truth", help="CSV with columns parameter,value to overlay")
    p.add_argument("--out", required=True, help="image file (format from the extension)")
    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _resolve_config(args):
    cfg = kio.load_config(args.config) if args.config else kio.RunConfig()
    overrides = {k: v for k, v in vars(args).items() if "__" in k}
    return cfg.replace(**overrides) if overrides else cfg


def _out_path(args, cfg, default_name):
    if args.out:
        return Path(args.out)
    d = Path(cfg.output.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d / default_name


def _load_corr(cfg):
    if cfg.input.correlator is None:
        raise ConfigError(["input.correlator: required (--corr)"])
    corr = kio.read_correlator_csv(cfg.input.correlator)
    return corr.with_slack(cfg.input.slack)


def _solver_kw(cfg):
    return dict(feas_tol=cfg.solver.feas_tol, opt_tol=cfg.solver.opt_tol, workers=cfg.workers)


def _finish_sweep(table, path):
    kio.write_bounds_csv(table, path)
    bad = [r.parameter for r in table.rows if "INFEASIBLE" in (r.lower_status, r.upper_status)]
    print(f"wrote {path} ({len(table)} rows)")
    if bad:
        print(f"infeasible at {len(bad)} parameter values, first {bad[0]:g}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(args, cfg):
    if cfg.input.model is None:
        raise ConfigError(["input.model: required (--model)"])
    model = kio.read_model(cfg.input.model)
    corr = synth_correlator(model, cfg.constraint_points())
    path = _out_path(args, cfg, "correlator.csv")
    kio.write_correlator_csv(corr, path)
    print(f"wrote {path} ({len(corr)} points)")
    return EXIT_OK


def cmd_bound_rho(args, cfg):
    corr = _load_corr(cfg)
    sigma = math.sqrt(cfg.objective.sigma2)
    table = sweep(corr, cfg.spectral_grid(), lambda m: GaussianSmear(m, sigma),
                  kio.parse_range(cfg.objective.mu2), **_solver_kw(cfg))
    return _finish_sweep(table, _out_path(args, cfg, "bound_rho.csv"))


def cmd_bound_gr(args, cfg):
    corr = _load_corr(cfg)
    s_reg = cfg.objective.s_reg
    if s_reg is None:
        if cfg.objective.mass is not None:
            s_reg = cfg.objective.mass ** 2 / 10.0
        else:
            log.warning("no mass estimate given; using s_reg = 0")
            s_reg = 0.0
    table = sweep(corr, cfg.spectral_grid(), lambda t: Retarded(t, s_reg),
                  kio.parse_range(cfg.objective.t), **_solver_kw(cfg))
    table.metadata["s_reg"] = s_reg
    return _finish_sweep(table, _out_path(args, cfg, "bound_gr.csv"))


def cmd_min_slack(args, cfg):
    corr = _load_corr(cfg)
    bcfg = cfg.bisection_config()
    try:
        delta = min_slack(corr, cfg.spectral_grid(), bcfg)
    except BisectionError as exc:
        print(f"min-slack: {exc}; bracket {exc.bracket}", file=sys.stderr)
        return EXIT_INFEASIBLE if math.isinf(exc.bracket[1]) else EXIT_FAIL
    path = _out_path(args, cfg, "min_slack.json")
    kio.write_result_doc({"delta_C_min": delta, "delta_rel_tol": bcfg.delta_rel_tol,
                          "N_c": len(corr), "N_v": cfg.grid.N_v}, path)
    print(f"delta_C_min = {delta:.6g}")
    return EXIT_OK


def cmd_gap(args, cfg):
    corr = _load_corr(cfg)
    try:
        res = bootstrap_gap(corr, cfg.spectral_grid(), cfg.bisection_config(),
                            cfg.bisection.threshold_factor, cfg.workers,
                            split=cfg.bisection.split)
    except BisectionError as exc:
        print(f"gap: {exc}; bracket {exc.bracket}", file=sys.stderr)
        return EXIT_INFEASIBLE if math.isinf(exc.bracket[1]) else EXIT_FAIL
    path = _out_path(args, cfg, "gap.json")
    kio.write_result_doc(res, path)
    print(f"M_opt = {res.m_opt:.6g}  Z_opt = {res.z_opt:.6g}  delta_C_min = {res.delta_c_min:.3g}")
    return EXIT_OK


def cmd_zphi(args, cfg):
    corr = _load_corr(cfg)
    mass = cfg.objective.mass
    if mass is None:
        raise ConfigError(["objective.mass: required for zphi (--mass)"])
    factors = cfg.objective.window_factors
    uppers = [f * mass ** 2 for f in factors]
    table = sweep(corr, cfg.spectral_grid(), lambda b: Window(0.0, b), uppers, **_solver_kw(cfg))
    table.metadata["mass"] = mass
    path = _out_path(args, cfg, "zphi.csv")
    code = _finish_sweep(table, path)
    mids = 0.5 * (table.lower + table.upper)
    if np.all(np.isfinite(mids)):
        spread = (mids.max() - mids.min()) / abs(mids.mean())
        summary = {"Z_phi": float(mids.mean()), "relative_spread": float(spread),
                   "window_factors": list(factors), "midpoints": mids.tolist()}
        kio.write_result_doc(summary, path.with_suffix(".json"))
        print(f"Z_phi = {mids.mean():.6g} (relative spread {spread:.2g})")
    return code


def cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    if len(args.inputs) == 1 and args.inputs[0].endswith(".csv"):
        table = kio.read_bounds_csv(args.inputs[0])
        p = table.parameters
        ax.fill_between(p, table.lower, table.upper, alpha=0.35, label="allowed")
        ax.plot(p, table.lower, lw=0.8)
        ax.plot(p, table.upper, lw=0.8)
        kind = table.metadata.get("objective_kind", "")
        default_label = {"GAUSSIAN_SMEAR": "μ²", "RETARDED": "t", "WINDOW": "upper limit"}
        ax.set_xlabel(args.xlabel or default_label.get(kind, "parameter"))
        ax.set_ylabel(kind.lower().replace("_", " ") or "bound")
        if "delta_C" in table.metadata:
            ax.set_title(f"δC = {table.metadata['delta_C']:g}")
    else:
        if not args.values:
            raise ConfigError(["plot: --values is required with several result documents"])
        xs = [float(v) for v in args.values.split(",")]
        if len(xs) != len(args.inputs):
            raise ConfigError(["plot: need one --values entry per result document"])
        res = [kio.read_result_doc(p) for p in args.inputs]
        ax.plot(xs, [r.m_opt for r in res], "o-", label="M_opt")
        ax.plot(xs, [r.z_opt for r in res], "s--", label="Z_opt")
        ax.set_xlabel(args.xlabel or "parameter")
    if args.truth:
        tr = np.loadtxt(args.truth, delimiter=",", skiprows=1, ndmin=2)
        ax.plot(tr[:, 0], tr[:, 1], "k:", lw=1, label="truth")
    ax.legend()
    fig.tight_layout()
    # no version stamp, so identical inputs give identical PNG bytes
    meta = {"Software": None} if str(args.out).lower().endswith(".png") else None
    fig.savefig(args.out, dpi=120, metadata=meta)
    plt.close(fig)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "bound-rho": cmd_bound_rho,
    "bound-gr": cmd_bound_gr,
    "min-slack": cmd_min_slack,
    "gap": cmd_gap,
    "zphi": cmd_zphi,
}


def run(argv=None):
    """Parse ``argv`` and run one command; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_FAIL
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            return cmd_plot(args)
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except NonContiguousError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        if exc.scan is not None:
            print(json.dumps([[float(m), bool(f)] for m, f in exc.scan]), file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, ParseError, DomainError, SolverError, BisectionError, OSError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - last-resort crash report
        print(f"{args.command}: crashed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
