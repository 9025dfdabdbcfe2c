"""
Command-line front end.

    khl moment --a "[0.70710678, 0.70710678]" --p 4
    khl psi --op second --s 0.3 --t 0.5 --p 3.5
    khl schur --majorizes x.json y.json
    khl constants --p 4
    khl constants --table --p-min 3 --p-max 8 --step 0.5
    khl verify --claim gauss --sweep 1000 --seed 7 --p 3
    khl search --conjecture gauss --p 3 --n-max 8 --samples 10000

Single results are printed as JSON with a ``manifest`` block; sweeps print CSV.
Exit status: 0 when every check passed, 1 when a verification failed (or a
search found a stable violation), 2 on usage or domain errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from dotenv import load_dotenv

from khl import __version__
from khl.constants import constant_bundle, constant_table
from khl.dist_core import (
    CoefficientVector,
    MomentQuery,
    absolute_moment,
    build_distribution,
    diagonal_moment,
    distribution_to_json,
    mixed_abs_moment,
    mixed_interval_probability,
)
from khl.errors import InvalidCoefficients, KhlError
from khl.explorer.sampling import STRATEGIES, SearchConfig
from khl.explorer.search import CONJECTURES, build_search
from khl.psi_kernel import PsiRegime, psi, psi_pair, psi_second, psi_second_integral, psi_second_lower_bound
from khl.reporting import atomic_open, csv_row_writer, to_csv, to_json, write_atomic
from khl.schur_order import SquaresVector, cap_largest, diagonalize, final_vector, majorizes
from khl.settings import DEFAULT_TOL, default_jobs, default_seed
from khl.verifiers.asymptotics import (
    optimality_table,
    verify_binomial_moment,
    verify_doubling,
)
from khl.verifiers.concentration import verify_concentration
from khl.verifiers.lemmas import (
    ExchangeSplit,
    verify_exchange_step,
    verify_gauss_chain,
    verify_n2_closed_form,
    verify_procedure_composition,
    verify_t_step,
)
from khl.verifiers.report import CSV_COLUMNS
from khl.verifiers.sweep import CLAIMS, run_instances, run_sweep, schur_grid_instances, sweep_summary
from khl.verifiers.theorems import (
    verify_crit_stability,
    verify_diag_stability,
    verify_gauss_stability,
    verify_schur_monotonicity,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

PSI_OPS = ("psi", "second", "integral", "lower", "pair")
SEARCH_COLUMNS = ("index", "n", "margin", "ratio")
CONSTANT_COLUMNS = ("p", "branch", "gauss_C", "diag_C", "crit_C", "doubling_C")


class UsageError(KhlError):
    pass


def _json_arg(text: str):
    """Inline JSON, or the path of a JSON file."""
    try:
        path = Path(text)
        if path.is_file():
            text = path.read_text()
    except OSError:
        pass
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"could not parse {text!r} as JSON: {exc}") from exc


def _number_list(text: str, flag: str) -> tuple[float, ...]:
    """A non-empty JSON list of finite numbers, inline or from a file."""
    data = _json_arg(text)
    if not isinstance(data, list) or not data:
        raise InvalidCoefficients(f"{flag} must be a non-empty JSON list of numbers, got {data!r}")
    numbers = []
    for value in data:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidCoefficients(f"{flag} entries must be numbers, got {value!r}")
        try:
            number = float(value)
        except OverflowError:
            number = math.inf
        if not math.isfinite(number):
            raise InvalidCoefficients(f"{flag} entries must be finite, got {value!r}")
        numbers.append(number)
    return tuple(numbers)


def _vector(args) -> CoefficientVector:
    if args.a is not None:
        return CoefficientVector(_number_list(args.a, "--a"))
    if args.a2 is not None:
        return CoefficientVector.from_squares(_number_list(args.a2, "--a2"))
    raise UsageError("pass the coefficients with --a (raw) or --a2 (squares)")


def _require(args, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name) is None]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")


def _manifest(args) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("handler", "command")}
    return {
        "subcommand": args.command,
        "flags": flags,
        "seed": args.seed,
        "tol": args.tol,
        "jobs": args.jobs,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _emit(args, payload: dict) -> None:
    text = to_json({"manifest": _manifest(args), **payload}) + "\n"
    if getattr(args, "out", None):
        write_atomic(args.out, text)
        logger.info("Wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _cmd_moment(args) -> int:
    _require(args, "p")
    mode = "log-space" if args.log_space else "standard"
    payload: dict = {"p": args.p, "mode": mode}
    if args.diagonal is not None and args.b is None and args.interval is None and not args.dump_dist:
        payload.update(n=args.diagonal, value=diagonal_moment(args.diagonal, args.p))
        _emit(args, payload)
        return EXIT_OK

    a = CoefficientVector.diagonal(args.diagonal) if args.diagonal is not None else _vector(args)
    d = build_distribution(a)
    payload.update(n=a.n, coefficients=list(a.coeffs), atoms=len(d))
    if args.interval is not None:
        b = args.b or 0.0
        payload.update(kind="interval", b=b, level=args.interval)
        payload["value"] = mixed_interval_probability(d, b, args.interval)
    elif args.b is not None:
        payload.update(kind="mixed", b=args.b, value=mixed_abs_moment(d, args.b, args.p))
    else:
        payload.update(kind="moment", value=absolute_moment(d, MomentQuery(args.p, mode)))
    if args.dump_dist:
        payload["distribution"] = distribution_to_json(d)
    _emit(args, payload)
    return EXIT_OK


def _cmd_psi(args) -> int:
    _require(args, "p", "s", "t")
    ops = {
        "psi": lambda: psi(args.s, args.t, args.p),
        "second": lambda: psi_second(args.s, args.t, args.p),
        "integral": lambda: psi_second_integral(args.s, args.t, args.p),
        "lower": lambda: psi_second_lower_bound(args.s, args.t, args.p),
        "pair": lambda: psi_pair(args.s, args.x if args.x is not None else 1.0, args.t, args.p),
    }
    value = ops[args.op]()
    inputs = {"op": args.op, "s": args.s, "t": args.t, "p": args.p}
    if args.op == "pair":
        inputs["x"] = args.x if args.x is not None else 1.0
    _emit(args, {"input": inputs, "value": value, "regime": PsiRegime.from_p(args.p)})
    return EXIT_OK


def _squares(text: str, flag: str) -> SquaresVector:
    return SquaresVector.normalized(_number_list(text, flag))


def _cmd_schur(args) -> int:
    if args.majorizes is not None:
        x = _squares(args.majorizes[0], "--majorizes")
        y = _squares(args.majorizes[1], "--majorizes")
        _emit(args, {"x": list(x.squares), "y": list(y.squares), "x_below_y": majorizes(x, y), "y_below_x": majorizes(y, x)})
        return EXIT_OK
    if args.diagonalize is not None:
        x = _squares(args.diagonalize, "--diagonalize")
        steps = diagonalize(x)
    else:
        _require(args, "cap_value")
        x = _squares(args.cap, "--cap")
        steps = cap_largest(x, args.cap_value)
    _emit(args, {"x": list(x.squares), "steps": steps, "final": list(final_vector(x, steps).squares)})
    return EXIT_OK


def _write_csv(args, header, rows) -> None:
    if args.out:
        with atomic_open(args.out) as handle:
            write = csv_row_writer(handle, header)
            for row in rows:
                write(row)
        logger.info("Wrote %s", args.out)
    else:
        sys.stdout.write(to_csv(header, rows))


def _cmd_constants(args) -> int:
    if not args.table:
        _require(args, "p")
        _emit(args, {"constants": constant_bundle(args.p, args.moment_floor)})
        return EXIT_OK
    _require(args, "p_min", "p_max", "step")
    rows = [
        (b.p, b.branch, b.gauss_C, b.diag_C, b.crit_C, b.doubling_C)
        for b in constant_table(args.p_min, args.p_max, args.step, args.moment_floor)
    ]
    _write_csv(args, CONSTANT_COLUMNS, rows)
    return EXIT_OK


def _single_report(args):
    claim, tol = args.claim, args.tol
    if claim in ("doubling", "binom"):
        _require(args, "n", "p")
        return (verify_doubling if claim == "doubling" else verify_binomial_moment)(args.n, args.p, tol)
    if claim == "optimality":
        _require(args, "p")
        return optimality_table(args.p, args.n_max or args.n or 1, tol)
    if claim == "n2":
        _require(args, "x", "p")
        return verify_n2_closed_form(args.x, args.p, tol)
    if claim == "crit":
        return verify_crit_stability(_vector(args), tol)
    if claim == "schur":
        _require(args, "a2", "y2", "p")
        x = _squares(args.a2, "--a2")
        y = _squares(args.y2, "--y2")
        return verify_schur_monotonicity(x, y, args.p, tol)
    if claim == "conc":
        return verify_concentration(_vector(args), args.b or 0.0, args.level, tol)
    _require(args, "p")
    a = _vector(args)
    if claim == "exchange":
        _require(args, "index")
        return verify_exchange_step(ExchangeSplit(a, args.index, args.b), args.p, tol)
    runners = {
        "gauss": verify_gauss_stability,
        "diag": verify_diag_stability,
        "tstep": verify_t_step,
        "compose": verify_procedure_composition,
        "chain": verify_gauss_chain,
    }
    return runners[claim](a, args.p, tol)


def _cmd_verify(args) -> int:
    progress = not args.quiet
    if args.grid_step is not None:
        if args.claim != "schur":
            raise UsageError("--grid-step only applies to --claim schur")
        _require(args, "p")
        instances = schur_grid_instances(args.n or 3, args.grid_step, args.p)
        reports = run_instances(instances, args.tol, args.jobs, progress)
    elif args.sweep is not None:
        _require(args, "p")
        reports = run_sweep(
            args.claim,
            args.p,
            args.sweep,
            args.seed,
            n_min=args.n_min,
            n_max=args.n_max or 12,
            tol=args.tol,
            jobs=args.jobs,
            progress=progress,
        )
    else:
        result = _single_report(args)
        reports = result if isinstance(result, list) else [result]
        payload = {"reports": reports} if isinstance(result, list) else {"report": result}
        _emit(args, payload)
        return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED

    _write_csv(args, CSV_COLUMNS, [r.csv_row() for r in reports])
    summary = sweep_summary(reports)
    logger.info("Summary: %s", summary)
    return EXIT_OK if summary["failed"] == 0 else EXIT_FAILED


def _cmd_search(args) -> int:
    cfg = SearchConfig(
        p=args.p,
        n_min=args.n_min,
        n_max=args.n_max,
        samples=args.samples,
        seed=args.seed,
        strategy=args.strategy,
        grid_step=args.grid_step,
        perturbation=args.perturbation,
    )
    search = build_search(args.conjecture)
    progress = not args.quiet
    if args.csv:
        with atomic_open(args.csv) as handle:
            write = csv_row_writer(handle, SEARCH_COLUMNS)
            outcome = search(
                cfg,
                jobs=args.jobs,
                tol=args.tol,
                progress=progress,
                on_sample=lambda s: write((s.index, s.n, s.margin, s.ratio)),
            )
    else:
        outcome = search(cfg, jobs=args.jobs, tol=args.tol, progress=progress)
    _emit(args, {"outcome": outcome})
    return EXIT_FAILED if outcome.stable_violations else EXIT_OK


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Pass/fail tolerance (relative slack).")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes (default: KHL_JOBS or all cores).")
    common.add_argument("--seed", type=int, default=None, help="Sampling seed (default: KHL_SEED or 0).")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--verbose", action="store_true", help="Log debug messages.")
    noise.add_argument("--quiet", action="store_true", help="Only log warnings; hide progress bars.")
    return common


def _add_vector_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--a", default=None, help="Raw coefficients, as inline JSON or a JSON file.")
    parser.add_argument("--a2", default=None, help="Squared coefficients, as inline JSON or a JSON file.")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="khl", description="Stability certificates for Khintchine inequalities.")
    parser.add_argument("--version", action="version", version=f"khl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    moment = sub.add_parser("moment", parents=[common], help="E|S|^p, E|S + bG|^p or P(|S| <= x).")
    _add_vector_args(moment)
    moment.add_argument("--diagonal", type=int, default=None, help="Use the diagonal vector of this length.")
    moment.add_argument("--p", type=float, default=None)
    moment.add_argument("--b", type=float, default=None, help="Gaussian mass of the mixed sum.")
    moment.add_argument("--interval", type=float, default=None, help="Report P(|S + bG| <= INTERVAL) instead.")
    moment.add_argument("--log-space", action="store_true")
    moment.add_argument("--dump-dist", action="store_true", help="Include the atoms of the law.")
    moment.add_argument("--out", default=None)
    moment.set_defaults(handler=_cmd_moment)

    psi_cmd = sub.add_parser("psi", parents=[common], help="Evaluate psi_s(t) and psi_s''(t).")
    psi_cmd.add_argument("--op", choices=PSI_OPS, default="second")
    psi_cmd.add_argument("--s", type=float, default=None)
    psi_cmd.add_argument("--t", type=float, default=None)
    psi_cmd.add_argument("--p", type=float, default=None)
    psi_cmd.add_argument("--x", type=float, default=None, help="Scale of psi_pair.")
    psi_cmd.add_argument("--out", default=None)
    psi_cmd.set_defaults(handler=_cmd_psi)

    schur = sub.add_parser("schur", parents=[common], help="Majorization and T-transformation procedures.")
    procedure = schur.add_mutually_exclusive_group(required=True)
    procedure.add_argument("--majorizes", nargs=2, metavar=("X", "Y"), help="Compare two squares vectors (JSON files or inline JSON).")
    procedure.add_argument("--diagonalize", metavar="X", help="T-transformations from X down to the diagonal.")
    procedure.add_argument("--cap", metavar="X", help="T-transformations lowering the largest entry of X to --cap-value.")
    schur.add_argument("--cap-value", type=float, default=None)
    schur.add_argument("--out", default=None)
    schur.set_defaults(handler=_cmd_schur)

    constants = sub.add_parser("constants", parents=[common], help="Explicit stability constants.")
    which = constants.add_mutually_exclusive_group()
    which.add_argument("--p", type=float, default=None, help="One bundle, printed as JSON.")
    which.add_argument("--table", action="store_true", help="A CSV table over --p-min .. --p-max.")
    constants.add_argument("--p-min", type=float, default=None)
    constants.add_argument("--p-max", type=float, default=None)
    constants.add_argument("--step", type=float, default=None)
    constants.add_argument("--moment-floor", type=float, default=1.0)
    constants.add_argument("--out", default=None)
    constants.set_defaults(handler=_cmd_constants)

    verify = sub.add_parser("verify", parents=[common], help="Check one claim, or sweep it over samples.")
    verify.add_argument("--claim", choices=CLAIMS, required=True)
    _add_vector_args(verify)
    verify.add_argument("--p", type=float, default=None)
    verify.add_argument("--sweep", type=int, default=None, help="Number of seeded instances.")
    verify.add_argument("--n", type=int, default=None)
    verify.add_argument("--n-min", type=int, default=1)
    verify.add_argument("--n-max", type=int, default=None)
    verify.add_argument("--x", type=float, default=None, help="Offset of the two-coordinate check.")
    verify.add_argument("--index", type=int, default=None, help="Exchanged coordinate (zero-based).")
    verify.add_argument("--b", type=float, default=None, help="Gaussian mass.")
    verify.add_argument("--level", type=float, default=None, help="Small-ball radius.")
    verify.add_argument("--y2", default=None, help="Second squares vector for --claim schur.")
    verify.add_argument("--grid-step", type=float, default=None, help="Check all comparable grid pairs.")
    verify.add_argument("--out", default=None)
    verify.set_defaults(handler=_cmd_verify)

    search = sub.add_parser("search", parents=[common], help="Look for counterexamples to a conjectured constant.")
    search.add_argument("--conjecture", choices=CONJECTURES, required=True)
    search.add_argument("--p", type=float, default=3.0)
    search.add_argument("--n-min", type=int, default=1)
    search.add_argument("--n-max", type=int, default=8)
    search.add_argument("--samples", type=int, default=1000)
    search.add_argument("--strategy", choices=STRATEGIES, default="simplex")
    search.add_argument("--grid-step", type=float, default=0.05)
    search.add_argument("--perturbation", type=float, default=0.1)
    search.add_argument("--csv", default=None, help="Stream per-sample rows to this file.")
    search.add_argument("--out", default=None)
    search.set_defaults(handler=_cmd_search)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.getLogger().setLevel(level)
    try:
        if args.seed is None:
            args.seed = default_seed()
        if args.jobs is None:
            args.jobs = default_jobs()
        return args.handler(args)
    except KhlError as exc:
        print(f"khl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    load_dotenv()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    sys.exit(run())
