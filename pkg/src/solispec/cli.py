"""Command-line front end: ground | spectrum | jost | invert-check | scan | control.

Every command reads a JSON config (see `solispec --print-defaults`), writes
CSV plot data and/or JSON reports stamped with the tool version and a hash
of the resolved config, and exits 0 on success, 1 when a structural
hypothesis fails (e.g. no decaying even profile), 2 on configuration
errors. Reports are byte-identical across reruns of the same config;
wall-clock timestamps are only embedded with --stamp.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .certificate import (Thresholds, control_scan, negative_control,
                          scan_embedded, sech_well_levels)
from .config import RunConfig, print_defaults
from .errors import ConfigurationError, HypothesisError, SolispecError
from .ground_state import solve_ground_state
from .inversion import fixed_point_residual
from .jost import decaying_solution
from .linearized_operator import discrete_eigenvalues
from .nonlinearity import Nonlinearity


def _json_dump(path: str, obj: dict):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc


def _csv_dump(path: str, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc


def _stamp(cfg: RunConfig) -> dict:
    return {"schema_version": 1, "tool": {"name": "solispec", "version": __version__},
            "config_hash": cfg.config_hash()}


def _load(args) -> tuple[RunConfig, Nonlinearity]:
    cfg = RunConfig.from_file(args.config).validate()
    return cfg, cfg.nonlinearity()


def _solve_ground(cfg: RunConfig, nl: Nonlinearity):
    return solve_ground_state(nl, cfg.mu, R=cfg.R, h=cfg.h, tol=cfg.tol_ode)


def cmd_ground(args) -> int:
    cfg, nl = _load(args)
    gs = _solve_ground(cfg, nl)
    rows = zip(*((repr(float(v)) for v in arr) for arr in (gs.x, gs.Q, gs.Qp)))
    _csv_dump(args.out, ("x", "Q", "Qp"), rows)
    sidecar = _stamp(cfg)
    sidecar.update({
        "mu": gs.mu, "R": gs.R, "h": gs.h, "shoot_value": gs.shoot_value,
        "c0": gs.c0, "rate": gs.rate, "far_field_fit_residual": gs.fit_residual,
        "x_replace": gs.x_replace, "first_integral_max": gs.first_integral_max,
        "ode_residual_fd2": gs.ode_residual,
    })
    _json_dump(_sidecar_path(args.out), sidecar)
    print(f"ground state written: {args.out} (Q(0) = {gs.shoot_value:.12g}, "
          f"rate = {gs.rate:.9g}, c0 = {gs.c0:.9g})")
    return 0


def _sidecar_path(out: str) -> str:
    return (out[:-4] if out.endswith(".csv") else out) + ".json"


def cmd_spectrum(args) -> int:
    cfg, nl = _load(args)
    eig_cfg = cfg.raw.get("eigen", {})
    mu = cfg.mu
    R_eig = eig_cfg.get("R") or min(cfg.R or 30.0 / np.sqrt(mu), 12.0 / np.sqrt(mu))
    n_eig = int(eig_cfg.get("n") or 1201)
    h_eig = R_eig / ((n_eig - 1) // 2 or 1)
    gs = solve_ground_state(nl, mu, R=R_eig, h=h_eig, tol=max(cfg.tol_ode, 1e-9))
    window = eig_cfg.get("window")
    pairs = discrete_eigenvalues(gs, nl, window=tuple(window) if window else None,
                                 k=int(eig_cfg.get("k") or 16))
    report = _stamp(cfg)
    report.update({
        "mu": mu, "grid": {"R": gs.R, "h": gs.h},
        "eigenvalues": [{"lambda": p.lam, "residual": p.residual, "parity": p.parity}
                        for p in pairs],
    })
    _json_dump(args.out, report)
    print(f"{len(pairs)} gap eigenvalue(s) written to {args.out}")
    for p in pairs:
        print(f"  lambda = {p.lam: .6e}  residual = {p.residual:.2e}  parity = {p.parity}")
    return 0


def cmd_jost(args) -> int:
    cfg, nl = _load(args)
    gs = _solve_ground(cfg, nl)
    sol = decaying_solution(args.lam, gs, nl)
    rows = zip(*((repr(float(v)) for v in arr) for arr in (sol.x, sol.f, sol.g, sol.fp, sol.gp)))
    _csv_dump(args.out, ("x", "f", "g", "fp", "gp"), rows)
    sidecar = _stamp(cfg)
    sidecar.update({"lambda": sol.lam, "mu": sol.mu, "x_asym": sol.x_asym,
                    "residual": sol.residual, "asym_deviation": sol.asym_deviation,
                    "normalization": sol.normalization})
    _json_dump(_sidecar_path(args.out), sidecar)
    print(f"decaying solution at lambda = {args.lam} written: {args.out} "
          f"(residual = {sol.residual:.2e})")
    return 0


def cmd_invert_check(args) -> int:
    cfg, nl = _load(args)
    gs = _solve_ground(cfg, nl)
    sol = decaying_solution(args.lam, gs, nl)
    if len(sol.x) != len(gs.x):
        raise ConfigurationError("decaying solution does not span the profile grid")
    u = sol.f + sol.g
    v = sol.f - sol.g
    r_u, r_v = fixed_point_residual(gs, u, v, args.lam, x0=args.x0)
    print(f"lambda = {args.lam}  r_u = {r_u:.6e}  r_v = {r_v:.6e}")
    return 0


def _write_scan(report, cfg: RunConfig, out_json: str, stamp: bool):
    report.config_hash = cfg.config_hash()
    _json_dump_text(out_json, report.to_json(include_timestamp=stamp))
    out_csv = (out_json[:-5] if out_json.endswith(".json") else out_json) + ".csv"
    rows = iter(report.csv_rows())
    header = next(rows)
    _csv_dump(out_csv, header, rows)
    return out_csv


def _json_dump_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc


def cmd_scan(args) -> int:
    cfg, nl = _load(args)
    lmin, lmax, n = cfg.scan_grid()
    if args.lmin is not None:
        lmin = args.lmin
    if args.lmax is not None:
        lmax = args.lmax
    if args.n is not None:
        n = args.n
    if n < 1:
        raise ConfigurationError(f"scan needs n >= 1 points, got {n}")
    mu = cfg.mu
    if not (lmin >= mu or lmax <= -mu):
        raise ConfigurationError(
            f"scan range [{lmin}, {lmax}] must sit inside the essential spectrum")
    lambdas = np.linspace(lmin, lmax, n)
    gs = _solve_ground(cfg, nl)
    th = Thresholds(theta_cert=cfg.theta_cert, theta_mismatch=cfg.theta_mismatch)
    report = scan_embedded(gs, nl, lambdas, thresholds=th, workers=cfg.parallelism)
    out_csv = _write_scan(report, cfg, args.out, args.stamp)
    summ = report.summary()
    print(f"scan written: {args.out} + {out_csv}")
    print(f"  verdicts: {summ['verdict_counts']}")
    print(f"  min normalized |v0|/|v0'|: {summ['min_v0_norm']:.3e}  "
          f"min mismatch: {summ['min_mismatch']:.3e}")
    return 0


def cmd_control(args) -> int:
    if args.config:
        cfg = RunConfig.from_file(args.config).validate()
    else:
        cfg = RunConfig()
    mu = args.mu if args.mu is not None else cfg.mu
    if mu <= 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    depth = args.depth
    levels = sech_well_levels(mu, depth)
    if args.lmin is not None and args.lmax is not None:
        lambdas = np.linspace(args.lmin, args.lmax, args.n or 41)
    elif levels:
        lambdas = np.linspace(max(mu * (1 + 1e-9), levels[0] - 0.5),
                              levels[0] + 0.5, args.n or 41)
    else:
        lambdas = np.linspace(mu, mu + 9.0, args.n or 46)
    report = control_scan(mu, depth, lambdas)
    candidate = None
    try:
        candidate = negative_control(mu, depth)
    except ConfigurationError:
        pass
    report.config_hash = cfg.config_hash()
    payload = report.to_json_dict(include_timestamp=args.stamp)
    payload["well_depth"] = depth
    payload["predicted_embedded_levels"] = levels
    payload["candidate"] = candidate.to_dict() if candidate else None
    _json_dump(args.out, payload)
    if candidate:
        print(f"embedded-candidate located at lambda = {candidate.lam:.6f} "
              f"(mismatch = {candidate.mismatch:.3e}); report: {args.out}")
    else:
        print(f"no embedded candidate for depth = {depth}; report: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solispec",
        description="Spectral certification for 1D NLS solitary waves")
    parser.add_argument("--version", action="version", version=f"solispec {__version__}")
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the default config JSON and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ground", help="solve the ground-state profile")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="ground.csv")

    p = sub.add_parser("spectrum", help="gap eigenvalues of the linearized operator")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="spectrum.json")

    p = sub.add_parser("jost", help="decaying solution at one energy")
    p.add_argument("--config", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--out", default="jost.csv")

    p = sub.add_parser("invert-check", help="fixed-point identity residuals")
    p.add_argument("--config", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--x0", type=float, default=1.0)

    p = sub.add_parser("scan", help="certificate scan over an energy grid")
    p.add_argument("--config", required=True)
    p.add_argument("--lmin", type=float)
    p.add_argument("--lmax", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--out", default="report.json")
    p.add_argument("--stamp", action="store_true",
                   help="embed a wall-clock timestamp (breaks byte-reproducibility)")

    p = sub.add_parser("control", help="negative control: decoupled sech^2 well")
    p.add_argument("--config")
    p.add_argument("--mu", type=float)
    p.add_argument("--depth", type=float, required=True)
    p.add_argument("--lmin", type=float)
    p.add_argument("--lmax", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--out", default="control.json")
    p.add_argument("--stamp", action="store_true")

    return parser


_COMMANDS = {
    "ground": cmd_ground,
    "spectrum": cmd_spectrum,
    "jost": cmd_jost,
    "invert-check": cmd_invert_check,
    "scan": cmd_scan,
    "control": cmd_control,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        print(print_defaults())
        return 0
    if not args.command:
        parser.print_help()
        return 2
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HypothesisError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return 1
    except SolispecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
