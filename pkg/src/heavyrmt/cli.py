"""Command line entry point: ``heavyrmt <subcommand> --config FILE --out DIR``.

Subcommands
-----------
sample          raw statistic table (``samples.csv``)
moments-clt     covariance of sqrt(N)-scaled moments vs the graph prediction
stieltjes-clt   covariance of sqrt(N)-scaled resolvent traces vs ``C(z, z')``
solve           fixed-point tables, Stieltjes values and a density curve
verify          run the acceptance checks

Every run writes ``manifest.json`` listing each output with its SHA-256.
Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import plotting
from .combinatorics import MAX_COVARIANCE_ORDER, limiting_moment_covariance
from .config import RunConfig, load_config
from .errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    SolverError,
    UnsupportedFamilyError,
)
from .mcstats import (
    StatisticKind,
    bootstrap_covariance,
    build_report,
    run_replicas,
)

log = logging.getLogger("heavyrmt")

SCHEMA_LINE = "# schema=1\n"
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _fmt(v) -> str:
    return repr(float(v))


class Outputs:
    """Collects written files so the manifest can list their hashes."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: List[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def csv(self, name: str, header: Sequence[str], rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            fh.write(SCHEMA_LINE)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow(r)
        return p

    def json(self, name: str, payload) -> Path:
        p = self.path(name)
        with open(p, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        return p

    def manifest(self, subcommand: str, cfg: RunConfig) -> Path:
        artifacts = []
        for name in self.files:
            digest = hashlib.sha256((self.dir / name).read_bytes()).hexdigest()
            artifacts.append({"path": name, "sha256": digest})
        payload = {
            "subcommand": subcommand,
            "config_path": cfg.path,
            "config": cfg.snapshot(),
            "out_dir": str(self.dir),
            "artifacts": artifacts,
        }
        p = self.dir / "manifest.json"
        with open(p, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return p


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _require(cfg: RunConfig, *sections: str):
    for s in sections:
        if s == "experiment" and cfg.experiment is None:
            raise ConfigurationError("this subcommand needs an [experiment] section")
        if s == "ensemble" and cfg.ensemble is None:
            raise ConfigurationError("this subcommand needs an [ensemble] section")
        if s == "solver" and not cfg.solver:
            raise ConfigurationError("this subcommand needs a [solver] section")


# ---------------------------------------------------------------- subcommands


def cmd_sample(cfg: RunConfig, out: Outputs, args) -> int:
    _require(cfg, "ensemble", "experiment")
    table = run_replicas(cfg.experiment, cfg.threads)
    rows = []
    for N, r, seed, lab, v in table.rows():
        v = complex(v)
        rows.append([N, r, seed, lab, _fmt(v.real), _fmt(v.imag)])
    out.csv("samples.csv", ["N", "replica", "seed", "statistic", "value_re", "value_im"], rows)
    report = build_report(table, gaussianity=False)
    for e in report.entries:
        print(f"N={e.N} {e.label}: mean {_short(e.mean)}, Var/N {_short(e.variance)}")
    return EXIT_OK


def _short(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.6g}{v.imag:+.6g}i"
    return f"{v:.6g}"


def _pairs(n: int):
    return [(a, b) for a in range(n) for b in range(a, n)]


def cmd_moments_clt(cfg: RunConfig, out: Outputs, args) -> int:
    _require(cfg, "ensemble", "experiment")
    exp = cfg.experiment
    if exp.statistic.kind is not StatisticKind.MOMENT:
        raise ConfigurationError("moments-clt needs statistic = moment")
    Ks = exp.statistic.powers
    C = None
    if cfg.ensemble.measure() is not None and max(Ks) <= MAX_COVARIANCE_ORDER:
        C = cfg.ensemble.c_sequence()
    table = run_replicas(exp, cfg.threads)
    predicted = {}
    if C is not None:
        predicted = {lab: limiting_moment_covariance(K, K, C) for K, lab in zip(Ks, table.labels)}
    report = build_report(table, {k: v for k, v in predicted.items() if v > 0})
    rows = []
    for N in exp.N_list:
        x = table.values[N] / math.sqrt(N)
        for a, b in _pairs(len(Ks)):
            cov, se = bootstrap_covariance(x[:, a], x[:, b], seed=exp.base_seed + a * 31 + b)
            pred = limiting_moment_covariance(Ks[a], Ks[b], C) if C is not None else float("nan")
            rows.append([N, Ks[a], Ks[b], _fmt(cov), _fmt(se), _fmt(pred)])
            print(f"N={N} cov(K={Ks[a]}, K={Ks[b]}): empirical {cov:.6g} +- {se:.2g}, "
                  f"predicted {pred:.6g}")
    out.csv("moments_clt.csv", ["N", "K1", "K2", "empirical", "bootstrap_se", "predicted"], rows)
    out.json("report.json", report.to_dict())
    N = exp.N_list[-1]
    for j, K in enumerate(Ks):
        x = table.values[N][:, j] / math.sqrt(N)
        pv = predicted.get(table.labels[j])
        plotting.histogram_with_normal(
            x, out.path(f"hist_N{N}_K{K}.svg"), f"Tr A^{K}, N={N}", pv if pv else None
        )
    return EXIT_OK


def cmd_stieltjes_clt(cfg: RunConfig, out: Outputs, args) -> int:
    from .fixedpoint import covariance_C

    _require(cfg, "ensemble", "experiment")
    exp = cfg.experiment
    if exp.statistic.kind is not StatisticKind.RESOLVENT:
        raise ConfigurationError("stieltjes-clt needs statistic = resolvent")
    zs = exp.statistic.z
    table = run_replicas(exp, cfg.threads)
    with_theory = cfg.ensemble.measure() is not None
    theory: Dict = {}
    if with_theory:
        u_order = int(cfg.solver.get("u_order", 8)) if cfg.solver else 8
        for a, b in _pairs(len(zs)):
            theory[a, b] = covariance_C(zs[a], zs[b], cfg.ensemble, u_order=u_order).value
    report = build_report(table)
    rows = []
    for N in exp.N_list:
        x = table.values[N] / math.sqrt(N)
        for a, b in _pairs(len(zs)):
            cov, se = bootstrap_covariance(x[:, a], x[:, b], seed=exp.base_seed + a * 31 + b)
            pred = theory.get((a, b), complex("nan+nanj"))
            rows.append([N, table.labels[a], table.labels[b], _fmt(cov.real), _fmt(cov.imag),
                         _fmt(se), _fmt(pred.real), _fmt(pred.imag)])
            print(f"N={N} C({zs[a]}, {zs[b]}): empirical {_short(cov)} +- {se:.2g}, "
                  f"predicted {_short(pred)}")
    out.csv(
        "stieltjes_clt.csv",
        ["N", "stat1", "stat2", "empirical_re", "empirical_im", "bootstrap_se",
         "predicted_re", "predicted_im"],
        rows,
    )
    out.json("report.json", report.to_dict())
    N = exp.N_list[-1]
    for j, z in enumerate(zs):
        x = table.values[N][:, j] / math.sqrt(N)
        for part, vals in (("re", x.real), ("im", x.imag)):
            plotting.histogram_with_normal(
                vals, out.path(f"hist_N{N}_z{j}_{part}.svg"),
                f"{part} Tr G({_short(z)}), N={N}",
            )
    return EXIT_OK


def cmd_solve(cfg: RunConfig, out: Outputs, args) -> int:
    from .fixedpoint import L_of_z, solve_rho, stieltjes_limit

    _require(cfg, "ensemble", "solver")
    sv = cfg.solver
    tol, damping = sv["tol"], sv["damping"]
    rows = []
    for j, z in enumerate(sv["z"]):
        if z.imag <= 0:
            raise DomainError("[solver] z values must lie in the upper half-plane")
        rho = solve_rho(z, cfg.ensemble, tol=tol, damping=damping)
        rho.to_csv(out.path(f"rho_z{j}.csv"))
        s = stieltjes_limit(z, rho)
        L = L_of_z(z, rho=rho)
        at_t = rho(np.asarray(sv["t"], dtype=float))
        rows.append([_fmt(z.real), _fmt(z.imag), _fmt(s.real), _fmt(s.imag), _fmt(L.real),
                     _fmt(L.imag), rho.iterations, _fmt(rho.residual)])
        print(f"z={_short(z)}: s = {_short(s)}, L = {_short(L)}, "
              + ", ".join(f"rho({t:g}) = {_short(complex(v))}" for t, v in zip(sv["t"], at_t)))
        mask = rho.grid.nodes <= min(rho.grid.t_max, 10.0)
        plotting.line_plot(
            rho.grid.nodes[mask],
            {"Re rho": rho.values.real[mask], "Im rho": rho.values.imag[mask]},
            out.path(f"rho_z{j}.svg"), f"rho_z(t), z={_short(z)}", "t", "rho",
        )
    out.csv("stieltjes.csv", ["z_re", "z_im", "s_re", "s_im", "L_re", "L_im", "iterations",
                              "residual"], rows)
    lo, hi, n = sv["x"]
    xs = np.linspace(lo, hi, n)
    eta = sv["eta"]
    dens = []
    for x in xs:
        s = stieltjes_limit(complex(x, eta), spec=cfg.ensemble, tol=tol, damping=damping)
        dens.append(-s.imag / math.pi)
    out.csv("density.csv", ["x", "eta", "density"],
            [[_fmt(x), _fmt(eta), _fmt(d)] for x, d in zip(xs, dens)])
    plotting.line_plot(xs, {"-Im s / pi": dens}, out.path("density.svg"),
                       f"smoothed spectral density, eta={eta:g}", "x", "density")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Outputs, args) -> int:
    from .acceptance import CRITERIA, run_acceptance

    ids = args.criteria or cfg.verify.get("criteria")
    include_long = args.long or bool(cfg.verify.get("long", False))
    if ids is not None:
        bad = [c for c in ids if c not in CRITERIA]
        if bad:
            raise ConfigurationError(f"unknown criteria {bad}")
    results = run_acceptance(ids, cfg.threads, include_long)
    for r in results:
        print(r.line())
    out.json("verify.json", {"results": [r.to_dict() for r in results],
                             "all_passed": all(r.passed for r in results)})
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


COMMANDS = {
    "sample": cmd_sample,
    "moments-clt": cmd_moments_clt,
    "stieltjes-clt": cmd_stieltjes_clt,
    "solve": cmd_solve,
    "verify": cmd_verify,
}


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavyrmt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", default="heavyrmt-out", help="output directory")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--threads", type=int, help="worker threads for replica loops")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "verify":
            p.add_argument("--criteria", type=_int_list, help="e.g. 1,2,9 (default: all)")
            p.add_argument("--long", action="store_true", help="include long-running checks")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is None and args.command != "verify":
            raise ConfigurationError(f"{args.command} needs --config")
        if args.seed is not None and args.seed < 0:
            raise ConfigurationError("--seed must be non-negative")
        cfg = load_config(args.config, seed=args.seed)
        if args.threads is not None:
            cfg.threads = max(1, args.threads)
        out = Outputs(Path(args.out))
        code = COMMANDS[args.command](cfg, out, args)
        out.manifest(args.command, cfg)
        return code
    except (ConfigurationError, DomainError, CapacityError, UnsupportedFamilyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc} (residual {exc.residual}, iterations {exc.iterations})",
              file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
