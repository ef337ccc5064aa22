"""Command-line front end.

Every subcommand writes one JSON document (or a CSV table) to stdout or
``--output``.  Failures print a JSON error object on stderr and exit with
1 (solver failure) or 2 (bad input).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .errors import (
    ExprSyntaxError,
    GameValidationError,
    InfeasibleError,
    KantoptError,
    SolverError,
    SpecError,
    UndefinedRoleError,
)
from .game import (
    DEFAULT_CONFIG,
    Game,
    SolverConfig,
    builtin_game,
    cached_landmarks,
    game_from_spec,
    require_valid,
    solve_nash,
    validate_assumptions,
)
from .interaction import (
    KnEquilibrium,
    best_response_curves,
    build_type_matrix,
    kantian_nasher_outcome,
    select_focal,
    solve_kantian_nasher,
)
from .kantian import MkeResult, ZProfile, kantian_best_response, kantian_foc, solve_symmetric_mke, verify_mke
from .population import check_spne, ess_check, replicator_simulate, stage_payoffs, stage_plan
from .rescale import KINDS, Rescaling, efficient_rescaling, rescaling_from_spec

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2

COMMANDS = ("validate", "landmarks", "kbr", "mke", "kn", "matrix", "dynamic", "ess", "evolve", "verify", "curves")
CSV_COMMANDS = ("evolve", "curves")
NO_RESCALING = ("validate", "landmarks")


class UsageError(SpecError):
    pass


# -- number formatting -----------------------------------------------------


def num(x) -> float | None:
    """Round to 12 significant digits; non-finite values become ``null``."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def residual(x) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return float(f"{float(x):.2e}")


def csv_num(x) -> str:
    v = num(x)
    return "" if v is None else f"{v:.12g}"


# -- loading ---------------------------------------------------------------


def _read_json(path: Path, what: str):
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {what} file {str(path)!r}: {exc.strerror}") from None
    return _parse_json(text, f"{what} file {str(path)!r}")


def _parse_json(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        err = SpecError(f"{where}: {exc.msg} at line {exc.lineno}, column {exc.colno}")
        err.line, err.column = exc.lineno, exc.colno
        raise err from None


def load_game_spec(path_or_name: str, cfg: SolverConfig = DEFAULT_CONFIG, validate: bool = True) -> Game:
    """Resolve ``builtin:<name>`` or a JSON game file; validate unless told not to."""
    if path_or_name.startswith("builtin:"):
        game = builtin_game(path_or_name)
    else:
        game = game_from_spec(_read_json(Path(path_or_name), "game"))
    if validate:
        require_valid(game, cfg)
    return game


def load_rescaling(text: str, game: Game, cfg: SolverConfig = DEFAULT_CONFIG) -> Rescaling:
    """``efficient``, a bare kind name, inline JSON, or a path to a JSON file."""
    text = text.strip()
    if text == "efficient":
        return efficient_rescaling(cached_landmarks(game, cfg))
    if text in ("identity", "log", "sqrt"):
        return rescaling_from_spec({"kind": text})
    if text.startswith("{"):
        return rescaling_from_spec(_parse_json(text, "inline rescaling"))
    path = Path(text)
    if path.exists():
        return rescaling_from_spec(_read_json(path, "rescaling"))
    raise SpecError(f"rescaling {text!r} is not a keyword, inline JSON or an existing file (kinds: {', '.join(KINDS)})")


# -- serialisation ---------------------------------------------------------


def _mke_json(m: MkeResult) -> dict:
    return {
        "z1": num(m.profile.z1),
        "z2": num(m.profile.z2),
        "x1": num(m.x_profile.x1),
        "x2": num(m.x_profile.x2),
        "payoffs": [num(m.payoffs[0]), num(m.payoffs[1])],
        "branch": m.branch,
        "foc_residual": residual(m.foc_residual),
        "verified": m.verified,
        "efficient": m.efficient,
    }


def _kn_json(e: KnEquilibrium) -> dict:
    return {
        "z1": num(e.z1),
        "x1": num(e.x1),
        "z2": num(e.z2),
        "x2": num(e.x2),
        "payoffs": {"kantian": num(e.u_kantian), "nasher": num(e.u_nasher)},
        "symmetric": e.symmetric,
        "branch": e.branch,
        "foc_residual": residual(e.foc_residual),
        "nash_residual": residual(e.nash_residual),
        "sufficient": e.sufficient,
        "verified": e.verified,
    }


def _matrix_json(m) -> dict:
    return {k: num(v) for k, v in asdict(m).items()}


# -- subcommands -----------------------------------------------------------


def cmd_validate(args, game, r, cfg):
    report = validate_assumptions(game, cfg)
    checks = [
        {
            "name": c.name,
            "passed": c.passed,
            "detail": c.detail,
            "location": None if c.location is None else [num(v) for v in c.location],
        }
        for c in report.checks
    ]
    return {"passed": report.passed, "checks": checks}


def cmd_landmarks(args, game, r, cfg):
    marks = cached_landmarks(game, cfg)
    return {
        "x_nash": num(marks.x_nash),
        "u_nash": num(marks.u_nash),
        "x_pareto": num(marks.x_pareto),
        "u_pareto": num(marks.u_pareto),
        "nash_residual": residual(solve_nash(game, cfg).residual),
    }


def cmd_kbr(args, game, r, cfg):
    z2 = _required(args, "z2")
    roots = kantian_best_response(game, r, z2, cfg)
    out = []
    for k in roots:
        verdict = verify_mke(game, r, ZProfile(k.z1, z2), cfg, players=(1,))
        out.append(
            {
                "z1": num(k.z1),
                "x1": num(k.x1),
                "branch": k.branch,
                "foc_residual": residual(k.foc_residual),
                "sufficient": k.sufficient,
                "verified": verdict.verified,
            }
        )
    return {"z2": num(z2), "x2": num(r.apply(z2)), "roots": out}


def cmd_mke(args, game, r, cfg):
    return {"results": [_mke_json(m) for m in solve_symmetric_mke(game, r, cfg)]}


def cmd_kn(args, game, r, cfg):
    eqs = solve_kantian_nasher(game, r, cfg)
    focal, note = None, None
    try:
        focal = _kn_json(select_focal(eqs))
    except SolverError as exc:
        note = str(exc)
    outcome = None
    try:
        outcome = _kn_json(kantian_nasher_outcome(eqs))
    except SolverError:
        pass
    return {"equilibria": [_kn_json(e) for e in eqs], "focal": focal, "focal_note": note, "outcome": outcome}


def cmd_matrix(args, game, r, cfg):
    return {"matrix": _matrix_json(build_type_matrix(game, r, cfg))}


def cmd_dynamic(args, game, r, cfg):
    n = int(_required(args, "n"))
    m = build_type_matrix(game, r, cfg)
    rows = []
    for n_k in range(n + 1):
        pi_k, pi_n = stage_payoffs(n, n_k, m)
        rows.append({"n_kantian": n_k, "pi_kantian": num(pi_k), "pi_nasher": num(pi_n)})
    plan = stage_plan(game, r, cfg)
    return {
        "n": n,
        "matrix": _matrix_json(m),
        "plan": {k: num(v) for k, v in asdict(plan).items()},
        "stage_payoffs": rows,
        "spne": asdict(check_spne(n, m)),
    }


def cmd_ess(args, game, r, cfg):
    m = build_type_matrix(game, r, cfg)
    rep = ess_check(m, args.epsilon)
    return {
        "epsilon": num(args.epsilon),
        "matrix": _matrix_json(m),
        "kantian_ess": rep.kantian_ess,
        "nasher_ess": rep.nasher_ess,
        "payoff_gap_at_k_high": num(rep.payoff_gap_at_k_high),
        "payoff_gap_at_k_low": num(rep.payoff_gap_at_k_low),
    }


def cmd_evolve(args, game, r, cfg):
    m = build_type_matrix(game, r, cfg)
    traj = replicator_simulate(m, args.k0, args.dt, args.steps, stop_on_fixation=args.stop_on_fixation)
    if args.format == "csv":
        return _csv(["t", "k"], ([csv_num(t), csv_num(k)] for t, k in traj.rows()))
    return {
        "matrix": _matrix_json(m),
        "k0": num(args.k0),
        "dt": num(args.dt),
        "steps": int(traj.k.size - 1),
        "terminal": traj.terminal,
        "final_k": num(traj.k[-1]),
        "samples": [{"t": num(t), "k": num(k)} for t, k in traj.rows()],
    }


def cmd_verify(args, game, r, cfg):
    p = ZProfile(_required(args, "z1"), _required(args, "z2"))
    verdict = verify_mke(game, r, p, cfg)
    return {
        "z1": num(p.z1),
        "z2": num(p.z2),
        "x1": num(r.apply(p.z1)),
        "x2": num(r.apply(p.z2)),
        "branch": verdict.branch,
        "players": list(verdict.players),
        "verified": verdict.verified,
        "worst_violation": residual(verdict.worst_violation),
        "worst_a": num(verdict.worst_a),
        "foc_residual": residual(abs(kantian_foc(game, r, p))),
    }


CURVE_COLUMNS = ["z", "x", "brk_z", "brk_x", "brk_branch", "brn_x", "brn_z"]


def cmd_curves(args, game, r, cfg):
    rows = best_response_curves(game, r, cfg, points=args.n or 101)
    if args.format == "csv":
        return _csv(
            CURVE_COLUMNS,
            (
                [csv_num(row["z"]), csv_num(row["x"]), csv_num(row["brk_z"]), csv_num(row["brk_x"]),
                 row["branch"] or "", csv_num(row["brn_x"]), csv_num(row["brn_z"])]
                for row in rows
            ),
        )
    return {
        "rows": [
            {
                "z": num(row["z"]),
                "x": num(row["x"]),
                "brk_z": num(row["brk_z"]),
                "brk_x": num(row["brk_x"]),
                "brk_branch": row["branch"],
                "brn_x": num(row["brn_x"]),
                "brn_z": num(row["brn_z"]),
            }
            for row in rows
        ]
    }


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _required(args, name: str) -> float:
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"{args.command} needs --{name}")
    return value


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--game", default="builtin:linear-quadratic", help="builtin:<name> or a game JSON file")
    common.add_argument(
        "--rescaling",
        default="efficient",
        help="'efficient', identity|log|sqrt, inline JSON, or a rescaling JSON file",
    )
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="csv is available for evolve and curves")
    solver = common.add_argument_group("solver overrides")
    solver.add_argument("--tol-root", type=float)
    solver.add_argument("--tol-opt", type=float)
    solver.add_argument("--grid-points", type=int)
    solver.add_argument("--domain-cap", type=float)
    solver.add_argument("--max-iter", type=int)
    solver.add_argument("--a-grid-max", type=float)

    parser = _Parser(prog="kantopt", description="Kantian and Nash equilibrium solvers for symmetric two-player games")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "validate": "check the regularity assumptions",
        "landmarks": "Nash and Pareto symmetric points",
        "kbr": "Kantian best-response roots against --z2",
        "mke": "symmetric multiplicative Kantian equilibria",
        "kn": "Kantian-Nasher equilibria and the focal one",
        "matrix": "type-versus-type payoff matrix",
        "dynamic": "stage payoffs and type-choice checks for a group of --n",
        "ess": "evolutionary stability at share --epsilon",
        "evolve": "replicator trajectory of the Kantian share",
        "verify": "brute-force MKE check of the profile (--z1, --z2)",
        "curves": "best-response curves for plotting",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name in ("kbr", "verify"):
            p.add_argument("--z2", type=float)
        if name == "verify":
            p.add_argument("--z1", type=float)
        if name in ("dynamic", "curves"):
            p.add_argument("--n", type=int, help="group size (dynamic) or grid points (curves)")
        if name == "ess":
            p.add_argument("--epsilon", type=float, default=0.01)
        if name == "evolve":
            p.add_argument("--k0", type=float, default=0.5)
            p.add_argument("--dt", type=float, default=0.01)
            p.add_argument("--steps", type=int, default=20000)
            p.add_argument("--stop-on-fixation", action="store_true")
    return parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _config(args) -> SolverConfig:
    overrides = {
        key: getattr(args, key)
        for key in ("tol_root", "tol_opt", "grid_points", "domain_cap", "max_iter", "a_grid_max")
        if getattr(args, key) is not None
    }
    return SolverConfig(**overrides) if overrides else DEFAULT_CONFIG


def _error_json(exc: BaseException, code: int) -> str:
    err: dict = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ExprSyntaxError):
        err["position"] = exc.position
    for attr in ("line", "column"):
        if hasattr(exc, attr):
            err[attr] = getattr(exc, attr)
    if isinstance(exc, GameValidationError) and exc.report is not None:
        err["failed_checks"] = [{"name": c.name, "detail": c.detail} for c in exc.report.failures()]
    return json.dumps({"error": err}, sort_keys=True)


def _execute(argv) -> tuple[str, str]:
    args = build_parser().parse_args(argv)
    if args.format == "csv" and args.command not in CSV_COMMANDS:
        raise UsageError(f"--format csv is only available for {', '.join(CSV_COMMANDS)}")
    if args.format is None:
        args.format = "csv" if args.command in CSV_COMMANDS else "json"
    cfg = _config(args)
    game = load_game_spec(args.game, cfg, validate=args.command != "validate")
    r = None if args.command in NO_RESCALING else load_rescaling(args.rescaling, game, cfg)
    result = HANDLERS[args.command](args, game, r, cfg)
    if isinstance(result, str):
        return result, args.output
    doc = {"schema": f"kantopt/{args.command}/v{SCHEMA_VERSION}", "game": game.to_spec()}
    if r is not None:
        doc["rescaling"] = _rescaling_json(r)
    doc.update(result)
    return json.dumps(doc, indent=2, allow_nan=False) + "\n", args.output


def _rescaling_json(r: Rescaling) -> dict:
    spec = r.to_spec()
    for key in ("shift", "exponent"):
        if key in spec:
            spec[key] = num(spec[key])
    if "z_domain" in spec:
        spec["z_domain"] = {k: num(v) for k, v in spec["z_domain"].items()}
    return spec


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run one command and return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text, output = _execute(list(sys.argv[1:] if argv is None else argv))
        if output:
            Path(output).write_text(text)
        else:
            stdout.write(text)
        return EXIT_OK
    except SolverError as exc:
        stderr.write(_error_json(exc, EXIT_SOLVER) + "\n")
        return EXIT_SOLVER
    except (SpecError, InfeasibleError, UndefinedRoleError, KantoptError, ValueError, OSError) as exc:
        stderr.write(_error_json(exc, EXIT_USAGE) + "\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
