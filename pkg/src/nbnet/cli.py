"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 domain or pole error, 3 tolerance or
convergence failure (including a failed identity check), 4 I/O error.

Option values resolve as command-line flag, then ``--config`` file, then
built-in default.  The seed default additionally honours ``NBNET_SEED``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import certificates as cert_mod
from .errors import ConvergenceError, DomainError, NBNetError, ShapeError, SingularSystemError
from .mellin import identity_rhs, mellin_rho
from .network import example_net, frac, load_net, net_hash, net_to_dict, evaluate
from .optimizer import assemble_gram, beta_schedule, fit_coefficients, fit_result_to_dict
from .zeta import zeta

SEED_ENV = "NBNET_SEED"

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_TOLERANCE, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _num(x: float) -> str:
    return repr(float(x))


def _open_unit(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in the open interval (0, 1)")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return v


def _pos_int(text: str) -> int:
    v = int(float(text)) if "e" in text.lower() else int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return v


def _axis(text: str) -> np.ndarray:
    """``start:stop:count`` or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            n = int(parts[2])
            if n < 1:
                raise ValueError
            return np.linspace(float(parts[0]), float(parts[1]), n)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad axis {text!r}; use start:stop:count")


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def _default_seed() -> str:
    return os.environ.get(SEED_ENV, "0")


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_zeta(args) -> int:
    if args.re is not None:
        z = complex(args.re, args.im)
        v = zeta(z)
        if args.format == "json":
            _write(args.out, _dump_json({"z": [z.real, z.imag], "zeta": [v.real, v.imag]}))
        elif v.imag == 0.0:
            _write(args.out, _num(v.real) + "\n")
        else:
            _write(args.out, f"{_num(v.real)} {_num(v.imag)}\n")
        return EXIT_OK
    if args.grid_re is None or args.grid_im is None:
        raise UsageError("give --re/--im or both --grid-re and --grid-im")
    lines = ["re,im,zeta_re,zeta_im"]
    for a in args.grid_re:
        for b in args.grid_im:
            v = zeta(complex(a, b))
            lines.append(f"{_num(a)},{_num(b)},{_num(v.real)},{_num(v.imag)}")
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify_identity(args) -> int:
    lines = ["re,im,quad_re,quad_im,closed_re,closed_im,residual,err_bound"]
    worst = 0.0
    quad_tol = args.quad_tol if args.quad_tol is not None else 0.1 * args.tol
    for a in args.z_re:
        for b in args.z_im:
            z = complex(a, b)
            if not z.real > 0:
                raise DomainError("the identity needs Re z > 0")
            q = mellin_rho(args.theta, z, tol=quad_tol)
            rhs = identity_rhs(args.theta, z)
            res = abs(q.value - rhs)
            worst = max(worst, res)
            lines.append(
                ",".join(
                    _num(v)
                    for v in (a, b, q.value.real, q.value.imag, rhs.real, rhs.imag, res, q.err_bound)
                )
            )
    _write(args.out, "\n".join(lines) + "\n")
    if not worst < args.tol:
        sys.stderr.write(f"max residual {worst:.3e} exceeds tol {args.tol:g}\n")
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_fit(args) -> int:
    beta = beta_schedule(args.scheme, args.m, args.d, seed=args.seed, path=args.beta_file)
    gram = assemble_gram(
        beta, args.gram_method, args.tol, n_samples=args.n_samples, seed=args.seed, workers=args.workers
    )
    res = fit_coefficients(beta, gram)
    net = res.net(beta)
    record = {
        "net": net_to_dict(net),
        "net_hash": net_hash(net),
        "fit": fit_result_to_dict(res),
        "scheme": args.scheme,
        "gram_method": gram.method,
        "gram_entry_err": gram.est_entry_err,
        "seed": args.seed,
    }
    _write(args.out, _dump_json(record))
    return EXIT_OK


def cmd_certify(args) -> int:
    net = load_net(args.net) if args.net else example_net()
    cert = cert_mod.monte_carlo_certificate(net, args.N, args.alpha, args.seed, args.workers)
    _write(args.out, _dump_json(cert_mod.certificate_to_dict(cert)))
    return EXIT_OK


def _load_certificate(path) -> cert_mod.Certificate:
    return cert_mod.certificate_from_dict(json.loads(Path(path).read_text()))


def cmd_region(args) -> int:
    if args.source == "empirical":
        if args.cert is None:
            raise UsageError("--source empirical needs --cert")
        region = _load_certificate(args.cert).region
    else:
        if args.delta is None:
            raise UsageError(f"--source {args.source} needs --delta")
        d = 1 if args.source == "exact_d1" else args.d
        if args.source == "exact_dd" and d < 2:
            raise UsageError("--source exact_dd needs --d >= 2")
        region = cert_mod.exact_region(args.delta, d)
    rows = cert_mod.boundary_polyline(region, args.a_min, args.a_max, args.n_pts)
    _write(args.out, cert_mod.polyline_to_csv(rows))
    return EXIT_OK


def cmd_plan(args) -> int:
    plan = cert_mod.plan_samples(args.epsilon, args.d, args.alpha, args.c_l1)
    report = {
        "N": plan.n_samples,
        "log10_N": plan.log10_n,
        "feasible": plan.feasible,
        "status": "feasible" if plan.feasible else "infeasible",
        "saturated": plan.saturated,
        "feasible_limit": cert_mod.FEASIBLE_SAMPLES,
        "target_delta_eff": plan.target_delta_eff,
        "d": plan.d,
        "alpha": plan.alpha,
        "c_l1": plan.c_l1,
    }
    _write(args.out, _dump_json(report))
    return EXIT_OK


FIGURE_GRID = 10_000


def cmd_figure(args) -> int:
    x = np.arange(1, FIGURE_GRID) / FIGURE_GRID
    if args.name == "rho-curves":
        r1, r5 = frac(0.1 / x), frac(0.5 / x)
        lines = ["x,rho_0.1,rho_0.5"]
        lines += [f"{_num(a)},{_num(b)},{_num(c)}" for a, b, c in zip(x.tolist(), r1.tolist(), r5.tolist())]
    elif args.name == "net-steps":
        f = evaluate(example_net(), x)
        lines = ["x,f"] + [f"{_num(a)},{_num(b)}" for a, b in zip(x.tolist(), f.tolist())]
    else:
        lines = ["delta_eff,a,b_plus,b_minus"]
        for de in args.deltas:
            region = cert_mod.ZeroFreeRegion(de, "exact_d1")
            rows = cert_mod.boundary_polyline(region, 0.5, 1.0, args.n_pts)
            lines += [f"{_num(de)},{_num(a)},{_num(bp)},{_num(bm)}" for a, bp, bm in rows.tolist()]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nbnet", description="Fractional-part networks, zeta and zero-free regions.")
    p.add_argument("--config", help="flat key = value file supplying option defaults (any position)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_opt(sp):
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("zeta", help="evaluate zeta at a point or on a grid")
    sp.add_argument("--re", type=float)
    sp.add_argument("--im", type=float, default=0.0)
    sp.add_argument("--grid-re", type=_axis, help="start:stop:count")
    sp.add_argument("--grid-im", type=_axis, help="start:stop:count")
    sp.add_argument("--format", choices=["text", "json"], default="text")
    out_opt(sp)
    sp.set_defaults(func=cmd_zeta)

    sp = sub.add_parser("verify-identity", help="compare the Mellin quadrature with its zeta closed form")
    sp.add_argument("--theta", type=_open_unit, required=True)
    sp.add_argument("--z-re", type=_axis, default="0.2:2:5")
    sp.add_argument("--z-im", type=_axis, default="-20:20:10")
    sp.add_argument("--tol", type=_positive, default="1e-6")
    sp.add_argument("--quad-tol", type=_positive, help="quadrature tolerance (default: tol / 10)")
    out_opt(sp)
    sp.set_defaults(func=cmd_verify_identity)

    sp = sub.add_parser("fit", help="fit constrained coefficients for a beta schedule")
    sp.add_argument("--d", type=_pos_int, default="1")
    sp.add_argument("--m", type=_pos_int, default="5")
    sp.add_argument("--scheme", choices=["harmonic", "random", "file"], default="harmonic")
    sp.add_argument("--beta-file")
    sp.add_argument("--gram-method", choices=["quadrature", "monte_carlo"], default="quadrature")
    sp.add_argument("--tol", type=_positive, default="1e-9")
    sp.add_argument("--n-samples", type=_pos_int, default="1000000")
    sp.add_argument("--seed", type=_nonneg_int, default=_default_seed())
    sp.add_argument("--workers", type=_pos_int, default="1")
    out_opt(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("certify", help="Monte-Carlo zero-free region certificate")
    sp.add_argument("--net", help="network JSON (default: the three-neuron example network)")
    sp.add_argument("--N", type=_pos_int, default="10000")
    sp.add_argument("--alpha", type=_open_unit, default="0.1")
    sp.add_argument("--seed", type=_nonneg_int, default=_default_seed())
    sp.add_argument("--workers", type=_pos_int, default="1")
    out_opt(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("region", help="boundary polyline of a zero-free region")
    sp.add_argument("--source", choices=["exact_d1", "exact_dd", "empirical"], default="exact_d1")
    sp.add_argument("--delta", type=_positive, help="known ||1 - f||_2 for exact sources")
    sp.add_argument("--d", type=_pos_int, default="1")
    sp.add_argument("--cert", help="certificate JSON for --source empirical")
    sp.add_argument("--a-min", type=float, default="0.5")
    sp.add_argument("--a-max", type=float, default="1.0")
    sp.add_argument("--n-pts", type=_pos_int, default="1001")
    out_opt(sp)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("plan", help="minimum Monte-Carlo sample size for a target region")
    sp.add_argument("--epsilon", type=_open_unit, required=True, help="target delta_eff")
    sp.add_argument("--d", type=_pos_int, default="1")
    sp.add_argument("--alpha", type=_open_unit, default="0.1")
    sp.add_argument("--c-l1", type=float, default="0")
    out_opt(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("figure", help="CSV data behind the figures")
    sp.add_argument("name", choices=["rho-curves", "net-steps", "regions"])
    sp.add_argument("--deltas", type=_float_list, default="0.25,0.1,0.01")
    sp.add_argument("--n-pts", type=_pos_int, default="10001")
    out_opt(sp)
    sp.set_defaults(func=cmd_figure)
    return p


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    cfg = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = val
    return cfg


def _apply_config(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    known = set()
    for sp in subs.choices.values():
        for action in sp._actions:
            if action.dest in cfg:
                action.default = cfg[action.dest]
                action.required = False
            known.add(action.dest)
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg_path, argv = _split_config(argv)
        if cfg_path is not None:
            _apply_config(parser, read_config(cfg_path))
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        sys.stderr.write(f"nbnet: error: {exc}\n")
        return EXIT_USAGE
    except (DomainError, ShapeError) as exc:
        sys.stderr.write(f"nbnet: domain error: {exc}\n")
        return EXIT_DOMAIN
    except (ConvergenceError, SingularSystemError) as exc:
        sys.stderr.write(f"nbnet: tolerance error: {exc}\n")
        return EXIT_TOLERANCE
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"nbnet: I/O error: {exc}\n")
        return EXIT_IO
    except NBNetError as exc:
        sys.stderr.write(f"nbnet: error: {exc}\n")
        return EXIT_DOMAIN


def _split_config(argv: list[str]) -> tuple[str | None, list[str]]:
    # --config may appear anywhere, so it is removed before argparse sees argv
    path, rest, i = None, [], 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            path = argv[i + 1]
            i += 2
            continue
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            rest.append(tok)
        i += 1
    return path, rest


if __name__ == "__main__":
    raise SystemExit(main())
