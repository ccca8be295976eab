"""Command-line front end.

Subcommands: analyze (identity suite), spectrum, holonomy, convergence,
catalog.  Reports are deterministic JSON/CSV bodies written atomically;
figures are rendered to PNG next to the delimited output.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis, figures
from .errors import MinsurfError
from .immersion import CATALOG_NAMES, builtin_surface
from .report import (
    report_body,
    write_checks_csv,
    write_field_csv,
    write_json_report,
    write_table_csv,
)


def _apply_thread_cap() -> None:
    cap = os.environ.get("MINSURF_LAB_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _parse_params(items):
    params = {}
    for item in items or ():
        if "=" not in item:
            raise SystemExit(f"--param expects K=V, got {item!r}")
        key, val = item.split("=", 1)
        try:
            params[key] = int(val)
        except ValueError:
            try:
                params[key] = float(val)
            except ValueError:
                params[key] = val
    return params


def _parse_res(text):
    res = tuple(int(x) for x in text.split(","))
    if any(b <= a for a, b in zip(res, res[1:])):
        raise SystemExit("--res must be strictly increasing")
    return res


def _parse_jet(text):
    if text == "analytic":
        return "analytic", None
    if text.startswith("fd"):
        _, _, h = text.partition(":")
        return "fd", float(h) if h else None
    raise SystemExit(f"--jet expects 'analytic' or 'fd[:H]', got {text!r}")


def _load_config_file(path):
    """Plain key=value lines; '#' starts a comment."""
    out = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="minsurf-lab",
        description="identity, spectrum, and holonomy checks for immersed "
        "surface patches in even codimension",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--surface", default=None, help="catalog surface name")
        p.add_argument("--param", action="append", metavar="K=V",
                       help="surface parameter, repeatable")
        p.add_argument("--k", type=int, default=None, help="codimension half")
        p.add_argument("--tmax", type=float, default=None,
                       help="profile half-width for the catenoid chart")
        p.add_argument("--res", default="33,65,129",
                       help="comma-separated strictly increasing resolutions")
        p.add_argument("--jet", default="analytic",
                       help="'analytic' or 'fd[:H]' jet evaluation")
        p.add_argument("--config", default=None,
                       help="key=value config file; explicit flags win")
        p.add_argument("--out", default=None, help="report output directory")
        p.add_argument("--format", default="json", choices=["json", "csv", "both"])
        p.add_argument("--seed", type=int, default=0)

    for name in ("analyze", "spectrum", "convergence"):
        common(sub.add_parser(name))
    hp = sub.add_parser("holonomy")
    common(hp)
    hp.add_argument("--synthetic", default=None, choices=["so4"],
                    help="use a synthetic connection instead of a surface")
    sub.add_parser("catalog", help="list catalog surfaces")
    return parser


def _resolve(args):
    """Merge the optional config file under the explicit flags."""
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        defaults = build_parser().parse_args([args.command])
        for key, val in file_cfg.items():
            if not hasattr(args, key):
                raise SystemExit(f"unknown config key {key!r}")
            if getattr(args, key) == getattr(defaults, key, None):
                setattr(args, key, val)
    res = _parse_res(args.res if isinstance(args.res, str) else ",".join(map(str, args.res)))
    jet, fd_h = _parse_jet(args.jet)
    params = _parse_params(args.param)
    return {
        "surface": args.surface,
        "params": params,
        "k": args.k,
        "tmax": args.tmax,
        "resolutions": list(res),
        "jet": jet,
        "fd_step": fd_h,
        "seed": int(args.seed),
        "format": args.format,
    }


def _emit(command, config, checks, tables, out_dir, fmt, domain=None, fields=None):
    body = report_body(command, config, checks, tables)
    for chk in checks:
        status = "pass" if chk.passed else "FAIL"
        print(f"[{status}] {chk.name}: {chk.value}")
    if out_dir:
        if fmt in ("json", "both"):
            write_json_report(os.path.join(out_dir, f"{command}.json"), body)
        if fmt in ("csv", "both"):
            write_checks_csv(os.path.join(out_dir, f"{command}_checks.csv"), checks)
            for name, tbl in (tables or {}).items():
                write_table_csv(os.path.join(out_dir, f"{command}_{name}.csv"), tbl)
            if domain is not None and fields:
                plain = {k: v for k, v in fields.items() if not k.startswith("_")}
                if plain:
                    write_field_csv(
                        os.path.join(out_dir, f"{command}_fields.csv"), domain, plain)
        if tables:
            figures.convergence_plot(
                os.path.join(out_dir, f"{command}_convergence.png"), tables,
                f"{command}: residual vs mesh size")
        if domain is not None and fields:
            plain = {k: v for k, v in fields.items() if not k.startswith("_")}
            if plain:
                figures.field_heatmaps(
                    os.path.join(out_dir, f"{command}_fields.png"), domain, plain,
                    command)
            if "_eigen_section" in fields:
                figures.eigen_section_plot(
                    os.path.join(out_dir, f"{command}_eigen_section.png"),
                    domain, fields["_eigen_section"], fields["_lambda_min"])
    return 0 if body["all_passed"] else 1


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)

    if args.command == "catalog":
        for name in CATALOG_NAMES:
            patch = builtin_surface(name)
            print(f"{name:16s} ambient R^{2 + 2 * patch.k}  family={patch.family}  "
                  f"params={patch.params}")
        return 0

    try:
        cfg = _resolve(args)
        surface = cfg["surface"]
        if args.command == "holonomy" and getattr(args, "synthetic", None):
            cfg["synthetic"] = args.synthetic
            checks, _ = analysis.holonomy_suite(
                synthetic=args.synthetic, seed=cfg["seed"])
            return _emit("holonomy", cfg, checks, {}, args.out, cfg["format"])
        if not surface:
            raise SystemExit("--surface is required (or --synthetic for holonomy)")

        patch = analysis.build_patch(
            surface, cfg["params"], k=cfg["k"], jet=cfg["jet"],
            fd_step=cfg["fd_step"], tmax=cfg["tmax"])
        res = tuple(cfg["resolutions"])

        if args.command == "analyze":
            checks, tables, fields = analysis.identity_suite(
                patch, res, seed=cfg["seed"])
            domain = patch.domain.with_resolution(res[-1])
            return _emit("analyze", cfg, checks, tables, args.out, cfg["format"],
                         domain, fields)
        if args.command == "spectrum":
            checks, tables, fields = analysis.spectrum_suite(
                patch, res, seed=cfg["seed"])
            domain = patch.domain.with_resolution(res[-1])
            return _emit("spectrum", cfg, checks, tables, args.out, cfg["format"],
                         domain, fields)
        if args.command == "convergence":
            checks, tables = analysis.convergence_suite(patch, res, seed=cfg["seed"])
            return _emit("convergence", cfg, checks, tables, args.out, cfg["format"])
        if args.command == "holonomy":
            checks, _ = analysis.holonomy_suite(
                surface, cfg["params"] or None, resolution=min(res),
                seed=cfg["seed"])
            return _emit("holonomy", cfg, checks, {}, args.out, cfg["format"])
    except MinsurfError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    raise SystemExit(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
