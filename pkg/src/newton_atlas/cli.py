"""Command-line front end: grid, solve, verify, experiment.

Every file this tool writes starts with a provenance header carrying
the package version, the subcommand, and the fully resolved parameter
set, so a rerun of the same command line reproduces the file byte for
byte.  JSON outputs carry it as a leading "provenance" key, CSV as a
leading "# provenance:" comment line, SVG as a comment right after
the XML declaration.

Exit codes: 0 success, 1 bad usage or bad input, 2 solve finished but
left roots unresolved, 3 internal error (traceback on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback

from . import __version__, _kernels
from .ensemble import verify_trial
from .errors import NewtonAtlasError
from .experiment import run_full_experiment
from .grid import build_grid
from .orbit import write_trace_jsonl
from .pipeline import solve
from .poly import Polynomial
from .seeding import derive_seed

DEFAULT_SEED = 1729
SEED_ENV_VAR = "NEWTON_ATLAS_SEED"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for
    # unresolved roots, so usage problems are remapped to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def resolve_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(
                f"{SEED_ENV_VAR} must be an integer, got {env!r}"
            ) from None
    return DEFAULT_SEED


def make_provenance(subcommand: str, params: dict) -> dict:
    return {
        "tool": "newton-atlas",
        "version": __version__,
        "backend": _kernels.BACKEND,
        "subcommand": subcommand,
        "parameters": params,
    }


def provenance_line(prov: dict) -> str:
    return "provenance: " + json.dumps(prov, sort_keys=True, separators=(",", ":"))


def _dump_json(payload: dict, out_path) -> None:
    if out_path is None:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _inject_svg_provenance(path, prov: dict) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    # "--" may not appear inside an XML comment
    comment = provenance_line(prov).replace("--", "- -")
    cut = text.index("\n") + 1 if "\n" in text else len(text)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text[:cut] + f"<!-- {comment} -->\n" + text[cut:])


# -- grid -------------------------------------------------------------


def cmd_grid(args) -> int:
    grid = build_grid(args.degree, phase_seed=args.phase_seed, log_base=args.log_base)
    params = {
        "degree": args.degree,
        "phase_seed": args.phase_seed,
        "log_base": args.log_base,
    }
    prov = make_provenance("grid", params)
    if args.out is not None and str(args.out).endswith(".csv"):
        grid.save_csv(args.out, header_lines=[provenance_line(prov)])
    else:
        payload = {"provenance": prov}
        payload.update(grid.to_json_dict())
        _dump_json(payload, args.out)
    n = len(grid.points)
    print(
        f"grid: degree {args.degree}, {grid.num_circles} circles x "
        f"{grid.points_per_circle} points = {n} starts",
        file=sys.stderr,
    )
    return 0


# -- solve ------------------------------------------------------------


def cmd_solve(args) -> int:
    seed = resolve_seed(args.seed)
    p = Polynomial.load(args.poly)
    grid = build_grid(p.degree, phase_seed=args.phase_seed, log_base=args.log_base)
    report = solve(
        p,
        grid,
        args.epsilon,
        eta=args.eta,
        seed=seed,
        workers=args.workers,
        collect_traces=args.trace is not None,
    )
    params = {
        "poly": os.path.basename(str(args.poly)),
        "polynomial_id": report.polynomial_id,
        "degree": p.degree,
        "epsilon": args.epsilon,
        "eta": args.eta,
        "seed": seed,
        "workers": args.workers,
        "phase_seed": args.phase_seed,
        "log_base": args.log_base,
    }
    prov = make_provenance("solve", params)
    payload = {"provenance": prov}
    payload.update(report.to_json_dict())
    _dump_json(payload, args.out)

    if args.trace is not None:
        os.makedirs(args.trace, exist_ok=True)
        for gi in sorted(report.traces):
            tr = report.traces[gi]
            path = os.path.join(args.trace, f"orbit_{gi:06d}.jsonl")
            with open(path, "w", encoding="utf-8") as fh:
                head = dict(prov)
                head["grid_index"] = gi
                fh.write(json.dumps({"provenance": head}, sort_keys=True) + "\n")
                write_trace_jsonl(tr, fh)

    n_found = len(report.found_roots)
    print(
        f"solve: {n_found} clusters, {report.unresolved_count} unresolved, "
        f"{report.total_iterations_chosen} chosen iterations "
        f"({report.backend} backend)",
        file=sys.stderr,
    )
    return 2 if report.unresolved_count > 0 else 0


# -- verify -----------------------------------------------------------


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    rows = []
    for t in range(args.trials):
        trial_seed = derive_seed(seed, args.degree, t)
        rows.append(verify_trial(args.degree, trial_seed, args.eta, c_d=args.cd))
    params = {
        "degree": args.degree,
        "trials": args.trials,
        "seed": seed,
        "eta": args.eta,
        "cd": args.cd,
    }
    prov = make_provenance("verify", params)
    lines = [f"# {provenance_line(prov)}"]
    lines.append("seed,dc_holds,dc_min,ac_fitted_Cd,digit_max_mult")
    for r in rows:
        lines.append(
            f"{r.seed},{int(r.dc_holds)},{r.dc_min_pairwise!r},"
            f"{r.ac_constant!r},{r.digit_max_mult}"
        )
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    dc_fails = sum(1 for r in rows if not r.dc_holds)
    ac_fails = sum(1 for r in rows if not r.ac_holds)
    print(
        f"verify: degree {args.degree}, {args.trials} trials, "
        f"{dc_fails} DC failures, {ac_fails} AC budget overruns",
        file=sys.stderr,
    )
    return 0


# -- experiment -------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}"
        ) from None


def cmd_experiment(args) -> int:
    seed = resolve_seed(args.seed)
    params = {
        "degrees": args.degrees,
        "trials": args.trials,
        "epsilon": args.epsilon,
        "seed": seed,
        "eta": args.eta,
        "workers": args.workers,
        "sweep_eps": args.sweep_eps,
        "sweep_trials": args.sweep_trials,
        "sweep_degree": args.sweep_degree,
    }
    prov = make_provenance("experiment", params)
    summary = run_full_experiment(
        args.out,
        args.degrees,
        args.trials,
        args.epsilon,
        seed,
        eta=args.eta,
        workers=args.workers,
        sweep_eps=args.sweep_eps or (),
        sweep_trials=args.sweep_trials,
        sweep_degree=args.sweep_degree,
        header_lines=[provenance_line(prov)],
    )
    payload = {"provenance": prov}
    payload.update(summary)
    _dump_json(payload, os.path.join(args.out, "summary.json"))
    for name in ("scaling.svg", "regimes.svg", "displacements.svg"):
        _inject_svg_provenance(os.path.join(args.out, name), prov)
    beta = summary.get("beta")
    beta_txt = f"{beta:.4f}" if beta is not None else "n/a"
    print(
        f"experiment: {len(args.degrees)} degrees x {args.trials} trials, "
        f"fitted beta = {beta_txt}, outputs in {args.out}",
        file=sys.stderr,
    )
    return 0


# -- parser -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="newton-atlas",
        description="Universal starting grid for Newton's method on "
        "polynomials with all roots in the unit disk.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_seed(sp):
        sp.add_argument(
            "--seed",
            type=int,
            default=None,
            help=f"master seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})",
        )

    g = sub.add_parser("grid", help="build and export a starting grid")
    g.add_argument("--degree", type=int, required=True)
    g.add_argument("--phase-seed", type=int, default=1)
    g.add_argument(
        "--log-base",
        type=float,
        default=math.e,
        help="base of the logarithms sizing the grid (sensitivity knob)",
    )
    g.add_argument("--out", default=None, help=".json or .csv (default: stdout JSON)")
    g.set_defaults(func=cmd_grid)

    s = sub.add_parser("solve", help="find all roots of a polynomial")
    s.add_argument("--poly", required=True, help="polynomial JSON file")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--eta", type=float, default=0.25)
    common_seed(s)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--phase-seed", type=int, default=1)
    s.add_argument("--log-base", type=float, default=math.e)
    s.add_argument("--out", default=None, help="report JSON (default: stdout)")
    s.add_argument(
        "--trace", default=None, metavar="DIR", help="write chosen-orbit JSONL traces"
    )
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check AC/DC/digit conditions on random roots")
    v.add_argument("--degree", type=int, required=True)
    v.add_argument("--trials", type=int, default=100)
    common_seed(v)
    v.add_argument("--eta", type=float, default=0.25)
    v.add_argument("--cd", type=float, default=None, help="AC budget override")
    v.add_argument("--out", default=None, help="CSV path (default: stdout)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="scaling ladder, sweeps, and figures")
    e.add_argument("--degrees", type=_int_list, required=True)
    e.add_argument("--trials", type=int, required=True)
    e.add_argument("--epsilon", type=float, required=True)
    common_seed(e)
    e.add_argument("--eta", type=float, default=0.25)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--sweep-eps", type=_float_list, default=None)
    e.add_argument("--sweep-trials", type=int, default=0)
    e.add_argument("--sweep-degree", type=int, default=20)
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NewtonAtlasError, ValueError, OSError) as exc:
        print(f"newton-atlas: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
