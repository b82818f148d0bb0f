"""Command-line surface: configuration, data ingestion, experiment
orchestration, deterministic reporting.

Five subcommands: ``validate`` (peacock / quote-curve admissibility),
``price`` (model-free interval with dual certificates), ``lattice`` (lift
diagnostics for paths), ``stability`` (perturbation sweep), ``dn``
(drift-penalty ladder on a lattice tree).  Every run that names an output
directory drops its exact configuration and input hashes next to the CSV
and JSON artifacts; reruns are byte-identical on those files.  Figures go
alongside the delimited output unless ``--no-figures``.

Exit codes: 0 success, 1 validation failure, 2 I/O or configuration
error, 3 solver numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import jsonio
from .lattice import (LatticeError, LatticeParams, check_membership,
                      enumerate_tree, interpret_step_path, lift)
from .lp import LpError, LpNumericalError
from .measures import (MeasureError, Peacock, check_convex_order, dirac,
                       marginals_from_calls, measure)
from .pathspace import (PathError, StepPath, example_fixture, normalize_payoff,
                        payoff_bounds, random_step_path, rho_T, vec_norm)
from .penalized import dn_convergence_experiment
from .transport import (DualCertificate, TransportError, price_interval,
                        stability_sweep)

__version__ = "0.1.0"

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class CliError(Exception):
    """Raised for user-facing failures with a chosen exit code."""

    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


# ---------- small plumbing ----------


def _read_json(path: str) -> Any:
    try:
        return jsonio.read_json(path)
    except FileNotFoundError:
        raise CliError(EXIT_CONFIG, f"input file not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"cannot read {path}: {exc}") from None


def _threads() -> int:
    raw = os.environ.get("MOTLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(EXIT_CONFIG,
                       f"MOTLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise CliError(EXIT_CONFIG, "MOTLAB_THREADS must be >= 1")
    return n


def _parse_mode(mode: str) -> tuple[str, Fraction | None]:
    if mode == "exact":
        return "exact", None
    if mode.startswith("penalized:"):
        try:
            return "penalized", Fraction(mode.split(":", 1)[1])
        except (ValueError, ZeroDivisionError):
            raise CliError(EXIT_CONFIG,
                           f"bad penalty coefficient in {mode!r}") from None
    raise CliError(EXIT_CONFIG,
                   f"--mode must be exact or penalized:<c>, got {mode!r}")


def _parse_numbers(raw: str, conv=Fraction) -> list:
    try:
        return [conv(tok) for tok in raw.split(",") if tok != ""]
    except (ValueError, ZeroDivisionError):
        raise CliError(EXIT_CONFIG, f"cannot parse number list {raw!r}") from None


def _parse_levels(raw: str) -> list[int]:
    """Accept "4", "3,4,5", or "3..8"."""
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise CliError(EXIT_CONFIG, f"bad level range {raw!r}") from None
        if hi_i < lo_i:
            raise CliError(EXIT_CONFIG, f"empty level range {raw!r}")
        return list(range(lo_i, hi_i + 1))
    return [int(x) for x in _parse_numbers(raw, int)]


def _float_repr(x: Any) -> str:
    if isinstance(x, bool) or isinstance(x, str):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _write_csv(path: Path, fieldnames: Sequence[str],
               rows: Sequence[dict[str, Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_float_repr(row[k]) for k in fieldnames])


def _out_dir(args: argparse.Namespace) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"cannot create {out}: {exc}") from None
    return out


def _emit_json(out: Path | None, name: str, obj: Any) -> None:
    if out is not None:
        jsonio.write_json(out / name, obj)


def _run_config(command: str, args: argparse.Namespace,
                hashes: dict[str, str],
                extra: dict[str, Any] | None = None) -> dict[str, Any]:
    cfg: dict[str, Any] = {
        "command": command,
        "package_version": __version__,
        "arith": getattr(args, "arith", None),
        "mode": getattr(args, "mode", None),
        "threads": _threads(),
        "inputs": {name: {"path": path, "sha256": digest}
                   for name, (path, digest) in sorted(hashes.items())},
    }
    if extra:
        cfg.update(extra)
    return cfg


def _maybe_figures(args: argparse.Namespace) -> bool:
    return not getattr(args, "no_figures", False)


def _load_peacock(path: str) -> tuple[Peacock, dict[str, Any], str]:
    """Load a peacock from a peacock JSON or a quote-curve JSON."""
    obj = _read_json(path)
    if isinstance(obj, dict) and "marginals" in obj:
        return jsonio.peacock_from_obj(obj), obj, "peacock"
    if isinstance(obj, dict) and "curves" in obj:
        curves = [jsonio.quotes_from_obj(c) for c in obj["curves"]]
        if not curves:
            raise CliError(EXIT_CONFIG, f"{path}: empty curve list")
        spot = curves[0].spot
        laws = [dirac((spot,))]
        times = [Fraction(0)]
        for c in curves:
            laws.append(marginals_from_calls(c))
            times.append(Fraction(c.maturity))
        return Peacock(tuple(times), tuple(laws)), obj, "quotes"
    raise CliError(EXIT_CONFIG,
                   f"{path}: expected a peacock or quote-curve document")


def _load_payoff(path: str, times: Sequence[Any]) -> tuple[Any, dict[str, Any]]:
    obj = _read_json(path)
    payoff = jsonio.payoff_from_obj(obj)
    want = tuple(float(t) for t in times)
    if tuple(payoff.times) != want:
        raise CliError(EXIT_INVALID,
                       f"payoff grid {payoff.times} does not match the "
                       f"instance grid {want}")
    return payoff, obj


def _rescale_certificate(cert: DualCertificate, lo: float,
                         scale: float) -> DualCertificate:
    """Certificate for the un-normalized payoff lo + scale * payoff_hat."""
    return DualCertificate(
        cert.side, cert.times, cert.dim,
        scale * cert.constant + lo,
        tuple({a: scale * v for a, v in lam.items()} for lam in cert.lambdas),
        {k: tuple(scale * h for h in hold)
         for k, hold in cert.prefix_strategy.items()})


# ---------- validate ----------


def cmd_validate(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    obj = _read_json(args.input)
    report: dict[str, Any] = {"command": "validate", "input": args.input}
    cfg = _run_config("validate", args,
                      {"input": (args.input, jsonio.instance_hash(obj))})
    _emit_json(out, "run_config.json", cfg)

    def invalid(msg: str) -> int:
        report.update({"status": "invalid", "witness": msg})
        _emit_json(out, "report.json", report)
        print(f"INVALID: {msg}")
        return EXIT_INVALID

    # parse times and laws without the constructor's own validation so the
    # diagnosis below names the first violated check
    try:
        if isinstance(obj, dict) and "marginals" in obj:
            kind = "peacock"
            dim = int(obj["dim"])
            times = [jsonio.dec_num(t) for t in obj["times"]]
            laws = [jsonio.measure_from_obj(m, dim) for m in obj["marginals"]]
        elif isinstance(obj, dict) and "curves" in obj:
            kind = "quotes"
            curves = [jsonio.quotes_from_obj(c) for c in obj["curves"]]
            if not curves:
                raise CliError(EXIT_CONFIG, f"{args.input}: empty curve list")
            times = [Fraction(0)] + [Fraction(c.maturity) for c in curves]
            laws = [dirac((curves[0].spot,))]
            for c in curves:
                laws.append(marginals_from_calls(c))
        else:
            raise CliError(EXIT_CONFIG,
                           f"{args.input}: expected a peacock or quote-curve "
                           "document")
    except MeasureError as exc:
        return invalid(str(exc))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG,
                       f"{args.input}: malformed document ({exc})") from None
    report["source_kind"] = kind
    report["times"] = [jsonio.enc_num(t) for t in times]
    report["atoms"] = [len(law.points) for law in laws]

    if len(times) != len(laws) or len(times) < 2:
        return invalid(f"{len(times)} times against {len(laws)} marginals")
    if any(float(b) <= float(a) for a, b in zip(times, times[1:])):
        return invalid("marginal times are not strictly increasing")
    means = [law.mean() for law in laws]
    for i, m in enumerate(means[1:], start=1):
        gap = max(abs(float(a) - float(b)) for a, b in zip(means[0], m))
        if gap > 1e-10:
            return invalid(f"marginal {i} barycenter {m} drifts from "
                           f"{means[0]} by {gap}")
    pairs = []
    for i in range(len(laws) - 1):
        res = check_convex_order(laws[i], laws[i + 1])
        pairs.append({"pair": [i, i + 1], "holds": bool(res),
                      "method": res.method,
                      "witness": None if res.witness is None
                      else [str(x) for x in res.witness]})
        report["pairs"] = pairs
        if not res:
            return invalid(f"convex order fails between marginals {i} and "
                           f"{i + 1}: witness {res.witness}")
    report["pairs"] = pairs

    peacock = Peacock(tuple(times), tuple(laws))
    report["status"] = "valid"
    _emit_json(out, "report.json", report)
    print(f"VALID: {len(peacock.times)} marginal times, "
          f"{sum(report['atoms'])} atoms, source {kind}")
    return EXIT_OK


# ---------- price ----------


def cmd_price(args: argparse.Namespace) -> int:
    mode, coeff = _parse_mode(args.mode)
    if mode != "exact":
        raise CliError(EXIT_CONFIG,
                       "price solves the exact marginal problem; "
                       "penalized:<c> applies to lattice-tree solves (dn)")
    out = _out_dir(args)
    peacock, praw, _ = _load_peacock(args.input)
    payoff, xraw = _load_payoff(args.payoff, peacock.times)

    cap = max(float(vec_norm(pt)) for law in peacock.laws for pt in law.points)
    lo, hi = payoff_bounds(payoff, cap)
    if hi - lo > 1e-15:
        normalized, record = normalize_payoff(payoff, lo, hi)
        scale = hi - lo
    else:
        normalized, record, scale = payoff, None, 1.0
        lo = 0.0

    interval = price_interval(peacock, normalized, arithmetic=args.arith)
    lower = lo + scale * float(interval.lower)
    upper = lo + scale * float(interval.upper)

    certs = {}
    identity = scale == 1.0 and lo == 0.0
    for side, res in (("upper", interval.upper_result),
                      ("lower", interval.lower_result)):
        if res.certificate is not None:
            cert = res.certificate if identity else \
                _rescale_certificate(res.certificate, lo, scale)
            certs[side] = jsonio.certificate_obj(cert)

    hashes = {"input": (args.input, jsonio.instance_hash(praw)),
              "payoff": (args.payoff, jsonio.instance_hash(xraw))}
    norm_obj = (None if record is None else
                {"lo": jsonio.enc_num(record.lo),
                 "hi": jsonio.enc_num(record.hi)})
    cfg = _run_config("price", args, hashes, {"normalization": norm_obj})
    _emit_json(out, "run_config.json", cfg)
    result = {
        "command": "price",
        "status": "optimal",
        "interval": {"lower": _num_out(lower, interval.lower, lo, scale),
                     "upper": _num_out(upper, interval.upper, lo, scale)},
        "normalized_interval": {"lower": jsonio.enc_num(interval.lower),
                                "upper": jsonio.enc_num(interval.upper)},
        "normalization": norm_obj,
        "certificates": certs,
    }
    _emit_json(out, "result.json", result)

    print("price interval")
    print(f"  lower  {lower!r}")
    print(f"  upper  {upper!r}")
    print(f"  width  {upper - lower!r}")
    if out is not None and _maybe_figures(args):
        from .figures import plan_figure
        if interval.upper_result.plan is not None:
            plan_figure(interval.upper_result.plan, out / "plan_upper.png")
    return EXIT_OK


def _num_out(f: float, exact: Any, lo: float, scale: float) -> Any:
    """Keep exact rationals exact in output when no normalization ran."""
    if isinstance(exact, Fraction) and scale == 1.0 and lo == 0.0:
        return jsonio.enc_num(exact)
    return f


# ---------- lattice ----------


def _lattice_inputs(spec: str) -> list[tuple[str, StepPath]]:
    if spec.startswith("fixture:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise CliError(EXIT_CONFIG,
                           f"fixture spec must be fixture:<name>:<n>, got {spec!r}")
        try:
            fam = example_fixture(parts[1], int(parts[2]))
        except (PathError, ValueError) as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from None
        return [(f"{parts[1]}[{k}]", w) for k, (w, _wgt) in enumerate(fam)]
    if spec.startswith("random:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise CliError(EXIT_CONFIG,
                           f"random spec must be random:<count>:<seed>, got {spec!r}")
        count, seed = int(parts[1]), int(parts[2])
        return [(f"random[{seed + k}]",
                 random_step_path(seed + k, rational=True))
                for k in range(count)]
    obj = _read_json(spec)
    return [(spec, jsonio.path_from_obj(obj))]


def cmd_lattice(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    grid = _parse_numbers(args.times)
    levels = _parse_levels(args.n)
    paths = _lattice_inputs(args.input)

    rows = []
    for n in levels:
        for label, w in paths:
            cand_ok, cand_reason = False, "horizon not 1"
            if float(w.horizon) == 1.0:
                cand_ok, cand_reason = check_membership(
                    interpret_step_path(w, n, grid))
            lifted = lift(w, n, grid)
            ok, reason = check_membership(lifted)
            lifted_sp = lifted.as_step_path()
            rows.append({
                "source": label, "n": n,
                "rho": rho_T(w, lifted_sp, grid) if float(w.horizon) == 1.0
                else float("nan"),
                "norm_ok": float(lifted_sp.sup_norm()) <= float(w.sup_norm()) + 1e-12,
                "member": ok, "reason": reason,
                "input_member": cand_ok, "input_reason": cand_reason,
            })

    medians = {}
    for n in levels:
        vals = sorted(r["rho"] for r in rows if r["n"] == n)
        medians[n] = vals[len(vals) // 2]
    if args.input.startswith(("fixture:", "random:")):
        hash_src: Any = args.input
    else:
        hash_src = _read_json(args.input)
    hashes = {"input": (args.input, jsonio.instance_hash(hash_src))}
    cfg = _run_config("lattice", args, hashes,
                      {"n": levels, "times": [jsonio.enc_num(t) for t in grid]})
    _emit_json(out, "run_config.json", cfg)
    summary = {"command": "lattice",
               "median_rho": {str(n): medians[n] for n in levels},
               "paths": len(paths)}
    _emit_json(out, "summary.json", summary)
    if out is not None:
        _write_csv(out / "lattice.csv",
                   ["source", "n", "rho", "norm_ok", "member", "reason",
                    "input_member", "input_reason"], rows)
        if _maybe_figures(args) and len(levels) > 1:
            from .figures import decay_figure
            decay_figure([{"n": n, "gap": medians[n]} for n in levels],
                         out / "lattice_decay.png")

    for n in levels:
        print(f"n={n}  median rho {medians[n]!r}")
    bad = [r for r in rows if not r["member"]]
    if bad:
        print(f"{len(bad)} lifted paths failed membership "
              f"(first: {bad[0]['reason']})")
    return EXIT_OK


# ---------- stability ----------


def cmd_stability(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    peacock, praw, _ = _load_peacock(args.input)
    payoff, xraw = _load_payoff(args.payoff, peacock.times)
    radii = [float(r) for r in _parse_numbers(args.radii, Fraction)]
    seeds = _parse_numbers(args.seeds, int)
    res = stability_sweep(peacock, payoff, radii, seeds,
                          arithmetic=args.arith, threads=_threads())

    hashes = {"input": (args.input, jsonio.instance_hash(praw)),
              "payoff": (args.payoff, jsonio.instance_hash(xraw))}
    cfg = _run_config("stability", args, hashes,
                      {"radii": radii, "seeds": seeds})
    _emit_json(out, "run_config.json", cfg)
    summary = {"command": "stability",
               "base_lower": res["base_lower"], "base_upper": res["base_upper"],
               "median_eps": {repr(r): v for r, v in res["median_eps"].items()},
               "monotone": res["monotone"]}
    _emit_json(out, "summary.json", summary)
    if out is not None:
        _write_csv(out / "stability.csv",
                   ["radius", "seed", "lower", "upper", "eps", "w1_shift",
                    "status"], res["rows"])
        if _maybe_figures(args):
            from .figures import stability_figure
            stability_figure(res["rows"], out / "stability.png")

    print(f"base interval [{res['base_lower']!r}, {res['base_upper']!r}]")
    for r in sorted(res["median_eps"], reverse=True):
        print(f"radius {r!r}  median eps {res['median_eps'][r]!r}")
    print(f"monotone trend: {res['monotone']}")
    return EXIT_OK


# ---------- dn ----------


def _tree_from_input(args: argparse.Namespace):
    obj = _read_json(args.input)
    if not (isinstance(obj, dict) and "level" in obj):
        raise CliError(EXIT_CONFIG,
                       f"{args.input}: dn needs a tree-parameter document "
                       "with keys level, dim, times, cap, j_max")
    try:
        params = LatticeParams(
            n=int(obj["level"]), dim=int(obj["dim"]),
            times=tuple(Fraction(jsonio.dec_num(t)) for t in obj["times"]),
            cap=Fraction(jsonio.dec_num(obj["cap"])),
            j_max=int(obj["j_max"]),
            node_budget=int(args.budget))
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_CONFIG, f"bad tree parameters: {exc}") from None
    return enumerate_tree(params), obj


def cmd_dn(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    tree, traw = _tree_from_input(args)
    payoff, xraw = _load_payoff(args.payoff, tree.params.times)
    ladder = _parse_numbers(args.n, Fraction)
    if not ladder:
        raise CliError(EXIT_CONFIG, "empty penalty ladder")

    leaf_vals = [payoff(tree.leaf_step_path(leaf)) for leaf in tree.leaves]
    lo = min(float(v) for v in leaf_vals)
    hi = max(float(v) for v in leaf_vals)
    if hi - lo > 1e-15:
        zeta = [(float(v) - lo) / (hi - lo) for v in leaf_vals]
        norm_obj: dict[str, Any] | None = {"lo": lo, "hi": hi}
    else:
        zeta = [float(v) for v in leaf_vals]
        norm_obj = None
    table = dn_convergence_experiment(tree, zeta, ladder,
                                      arithmetic=args.arith)

    hashes = {"input": (args.input, jsonio.instance_hash(traw)),
              "payoff": (args.payoff, jsonio.instance_hash(xraw))}
    cfg = _run_config("dn", args, hashes,
                      {"n": [jsonio.enc_num(x) for x in ladder],
                       "normalization": norm_obj})
    _emit_json(out, "run_config.json", cfg)
    summary = {"command": "dn", "v0": float(table["v0"]),
               "n_star": table["n_star"],
               "nodes": tree.n_nodes, "leaves": len(tree.leaves),
               "normalization": norm_obj}
    _emit_json(out, "summary.json", summary)
    if out is not None:
        _write_csv(out / "dn.csv",
                   ["n", "value", "expected_drift", "gap_to_V0"],
                   table["rows"])
        if _maybe_figures(args):
            from .figures import penalty_figure
            penalty_figure(table["rows"], out / "dn.png")

    print(f"tree: {tree.n_nodes} nodes, {len(tree.leaves)} leaves, "
          f"V0 {float(table['v0'])!r}")
    for row in table["rows"]:
        print(f"n {row['n']!r}  value {row['value']!r}  "
              f"drift {row['expected_drift']!r}  gap {row['gap_to_V0']!r}")
    return EXIT_OK


# ---------- parser / dispatch ----------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motlab",
        description="Model-free price bounds for martingale transport on "
                    "step paths")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, payoff: bool = True) -> None:
        p.add_argument("--input", required=True,
                       help="instance JSON (peacock, quotes, path, or tree "
                            "parameters depending on the command)")
        if payoff:
            p.add_argument("--payoff", required=True, help="payoff JSON")
        p.add_argument("--arith", choices=("float", "rational"),
                       default="float")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory for CSV/JSON/figures")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p = sub.add_parser("validate", help="check a peacock or quote file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None, metavar="DIR")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("price", help="model-free price interval")
    common(p)
    p.add_argument("--mode", default="exact",
                   help="exact | penalized:<c> (price supports exact)")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("lattice", help="lift diagnostics for step paths")
    p.add_argument("--input", required=True,
                   help="path JSON, fixture:<name>:<k>, or random:<count>:<seed>")
    p.add_argument("--n", required=True,
                   help="lattice level(s): 4, 3,4,5, or 3..8")
    p.add_argument("--times", default="0,1/2,1",
                   help="marginal grid (comma-separated fractions)")
    p.add_argument("--out", default=None, metavar="DIR")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("stability", help="perturbation sweep of the interval")
    common(p)
    p.add_argument("--radii", default="0.2,0.1,0.05,0.025,0",
                   help="perturbation radii, comma-separated")
    p.add_argument("--seeds", default="0,1,2", help="seeds, comma-separated")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("dn", help="drift-penalty ladder on a lattice tree")
    common(p)
    p.add_argument("--n", default="1,2,4,8,16",
                   help="penalty levels, comma-separated")
    p.add_argument("--budget", default="200000", metavar="NODES",
                   help="tree node budget")
    p.add_argument("--mode", default="exact", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_dn)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (MeasureError, PathError, LatticeError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LpNumericalError as exc:
        print(f"solver numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (LpError, TransportError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
