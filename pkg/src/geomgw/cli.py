"""Command line front end.

Usage sketches:

    geomgw law --regime kesten --eta 0.5 --q 0.5 --height 1 --degree-cap 6
    geomgw law --regime conditioned --eta 0.5 --q 0.5 --n 3 --a 2 \\
        --height 2 --degree-cap 4 --format json
    geomgw sample --regime poisson --eta 0.5 --q 0.5 --theta 0.7 \\
        --height 2 --samples 10 --seed 7
    geomgw oracle
    geomgw converge --config kesten --out curve.csv --svg curve.svg

Exit status: 0 on success, 1 on a validation or resource problem, 2 when a
numeric certification, truncation, or audit check fails.
"""

from __future__ import annotations

import argparse
import contextlib
import importlib.resources
import json
import os
import sys

from .errors import (
    AuditError,
    CertificationError,
    ResourceError,
    TruncationError,
    ValidationError,
)
from .exactlaw import (
    TruncatedLaw,
    condensation_family,
    conditioned_family,
    conditioned_restricted_family,
    gw_family,
    kesten_family,
    kesten_restricted_family,
    poisson_family,
    poisson_restricted_family,
)
from .lab import (
    ExperimentConfig,
    run_regime,
    run_theta_continuity,
    write_regime_csv,
    write_svg_chart,
    write_theta_csv,
)
from .offspring import OffspringParams
from .oracle import equivalence_suite
from .rng import RandomSource
from .sampler import (
    TypedTree,
    sample_condensation,
    sample_conditioned,
    sample_gw,
    sample_kesten,
    sample_poisson_tree,
)

LAW_REGIMES = ("gw", "conditioned", "kesten", "poisson", "condensation")


def _need(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise ValidationError(f"--{name} is required here")


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _build_law(args: argparse.Namespace) -> TruncatedLaw:
    p = OffspringParams(args.eta, args.q)
    h, cap, k0 = args.height, args.degree_cap, args.k0
    if args.regime == "gw":
        if k0 is not None:
            raise ValidationError("the plain law has no restricted view")
        return gw_family(p, h, cap)
    if args.regime == "conditioned":
        _need(args, "n", "a")
        if k0 is None:
            return conditioned_family(p, args.n, args.a, h, cap)
        return conditioned_restricted_family(p, args.n, args.a, h, k0, cap)
    if args.regime == "kesten":
        if k0 is None:
            return kesten_family(p, h, cap)
        return kesten_restricted_family(p, h, k0, cap)
    if args.regime == "poisson":
        _need(args, "theta")
        if k0 is None:
            return poisson_family(p, h, args.theta, cap)
        return poisson_restricted_family(p, h, k0, args.theta, cap)
    _need(args, "k0")
    return condensation_family(p, h, k0, cap)


def _cmd_law(args: argparse.Namespace) -> int:
    law = _build_law(args)
    with _open_out(args.out) as out:
        if args.format == "json":
            doc = {
                "meta": law.meta,
                "log_residual": law.log_residual,
                "entries": law.entries,
            }
            json.dump(doc, out, indent=2, sort_keys=True)
            out.write("\n")
        else:
            law.write_csv(out)
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    p = OffspringParams(args.eta, args.q)
    root = RandomSource(args.seed)
    typed = args.regime in ("kesten", "poisson") or (
        args.regime == "condensation" and args.variant == "two_type"
    )
    with _open_out(args.out) as out:
        out.write("tree_code,survivor_flags\n" if typed else "tree_code\n")
        for i in range(args.samples):
            rng = root.child(i)
            if args.regime == "gw":
                tree = sample_gw(p, rng, args.height)
            elif args.regime == "conditioned":
                _need(args, "n", "a")
                tree = sample_conditioned(p, args.n, args.a, rng, args.height)
            elif args.regime == "kesten":
                tree = sample_kesten(p, rng, args.height)
            elif args.regime == "poisson":
                _need(args, "theta")
                tree = sample_poisson_tree(p, args.theta, rng, args.height)
            else:
                _need(args, "k0")
                tree = sample_condensation(
                    p, args.k0, rng, args.height, variant=args.variant
                )
            if isinstance(tree, TypedTree):
                out.write(f'"{tree.tree.encode()}","{tree.flag_string()}"\n')
            else:
                out.write(f'"{tree.encode()}"\n')
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    rows = equivalence_suite()
    failed = 0
    for name, passed, detail in rows:
        tag = "PASS" if passed else "FAIL"
        failed += not passed
        print(f"{tag} {name}: {detail}")
    print(f"{len(rows) - failed}/{len(rows)} equivalence checks passed")
    return 2 if failed else 0


def _resolve_config(ref: str) -> ExperimentConfig:
    if os.path.exists(ref):
        return ExperimentConfig.load(ref)
    packaged = importlib.resources.files("geomgw") / "configs" / f"{ref}.json"
    if packaged.is_file():
        return ExperimentConfig.from_json(packaged.read_text())
    raise ValidationError(
        f"no config file or bundled config named {ref!r} "
        "(bundled: kesten, poisson, condensation)"
    )


def _cmd_converge(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args.config)
    if args.mode == "regime":
        rows = run_regime(cfg)
        with _open_out(args.out) as out:
            write_regime_csv(rows, out)
        series = [
            ("tv_exact", [(float(r.n), r.tv_exact) for r in rows]),
            ("residual bound", [(float(r.n), r.tv_residual_bound) for r in rows]),
        ]
        x_label, log_x = "n", False
    else:
        rows = run_theta_continuity(cfg)
        with _open_out(args.out) as out:
            write_theta_csv(rows, out)
        series = [
            ("gap to kesten", [(r.theta, r.gap_kesten) for r in rows]),
            ("tv to kesten", [(r.theta, r.tv_kesten) for r in rows]),
            ("gap to condensation", [(r.theta, r.gap_condensation) for r in rows]),
            ("tv to condensation", [(r.theta, r.tv_condensation) for r in rows]),
        ]
        x_label, log_x = "theta", True
    if args.svg:
        with open(args.svg, "w") as fh:
            write_svg_chart(series, fh, x_label, "distance", log_x=log_x)
    total_ms = sum(r.runtime_ms for r in rows)
    print(
        f"{len(rows)} rows ({cfg.regime}, {args.mode} mode) in {total_ms:.0f} ms",
        file=sys.stderr,
    )
    return 0


def _add_params(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--eta", type=float, required=True, help="mass 1-eta at zero")
    sp.add_argument("--q", type=float, required=True, help="geometric tail parameter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="geomgw",
        description="exact laws, samplers, and convergence experiments for "
        "geometric branching trees",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    law = sub.add_parser("law", help="print an exact truncated ball law")
    _add_params(law)
    law.add_argument("--regime", required=True, choices=LAW_REGIMES)
    law.add_argument("--height", type=int, required=True, help="ball radius h")
    law.add_argument("--degree-cap", type=int, required=True)
    law.add_argument("--n", type=int, help="conditioning generation")
    law.add_argument("--a", type=int, help="conditioning size of generation n")
    law.add_argument("--theta", type=float)
    law.add_argument("--k0", type=int, help="keep only the first k0 root children")
    law.add_argument("--out")
    law.add_argument("--format", choices=("csv", "json"), default="csv")
    law.set_defaults(func=_cmd_law)

    smp = sub.add_parser("sample", help="draw trees and print them line by line")
    _add_params(smp)
    smp.add_argument(
        "--regime",
        required=True,
        choices=("gw", "conditioned", "kesten", "poisson", "condensation"),
    )
    smp.add_argument("--height", type=int, required=True)
    smp.add_argument("--samples", type=int, default=1)
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--n", type=int)
    smp.add_argument("--a", type=int)
    smp.add_argument("--theta", type=float)
    smp.add_argument("--k0", type=int)
    smp.add_argument(
        "--variant", choices=("two_type", "inhomogeneous"), default="two_type"
    )
    smp.add_argument("--out")
    smp.set_defaults(func=_cmd_sample)

    orc = sub.add_parser("oracle", help="run the brute-force equivalence suite")
    orc.set_defaults(func=_cmd_oracle)

    cnv = sub.add_parser("converge", help="run a convergence sweep from a config")
    cnv.add_argument(
        "--config",
        required=True,
        help="path to a config JSON, or a bundled name (kesten, poisson, "
        "condensation)",
    )
    cnv.add_argument("--mode", choices=("regime", "theta"), default="regime")
    cnv.add_argument("--out", help="CSV destination (default stdout)")
    cnv.add_argument("--svg", help="also draw a line chart to this path")
    cnv.set_defaults(func=_cmd_converge)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TruncationError, CertificationError, AuditError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # downstream reader (head, a closed pager) went away mid-write;
        # park stdout on devnull so the interpreter's exit flush is quiet
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    raise SystemExit(main())
