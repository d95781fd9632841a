"""Command-line front end: eval, solve, simulate, sweep, presets.

Model parameters are given as ``--name value``, ``--name=value`` or
``name=value``. ``lambda`` may also be written ``lam``; ``N_A`` as ``NA`` and
``N_a`` as ``Na``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__, models, montecarlo, solvers, sweep
from .errors import DomainError, NoBracketError
from .models import BlockadeParams, CombinedParams, DelayParams

ALIASES = {"NA": "N_A", "Na": "N_a", "lam": "lambda"}

SIM_PARAMS = {
    "blockade": ("p", "n", "N"),
    "delay_single": ("lambda", "tau", "n"),
    "delay_horizon": ("lambda", "tau", "n", "N_a", "T", "s"),
    "combined": ("p", "d", "n", "N_A"),
}
SIM_COUNTS = {"n", "N", "N_a", "N_A"}

Row = List[Tuple[str, object]]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parsing helpers


def parse_assignments(tokens: Sequence[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    tokens = list(tokens)
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.startswith("--"):
            body = tok[2:]
            if "=" in body:
                name, value = body.split("=", 1)
            else:
                if i + 1 >= len(tokens):
                    raise UsageError(f"--{body} needs a value")
                name, value = body, tokens[i + 1]
                i += 1
        elif "=" in tok:
            name, value = tok.split("=", 1)
        else:
            raise UsageError(f"unexpected argument {tok!r}")
        name = ALIASES.get(name, name)
        if name in out:
            raise UsageError(f"parameter {name} assigned more than once")
        out[name] = value
        i += 1
    return out


def to_number(name: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{name}: {text!r} is not a number") from None


def to_count(name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{name}: simulation needs a plain integer, got {text!r}") from None


def numbers(raw: Dict[str, str]) -> Dict[str, float]:
    return {k: to_number(k, v) for k, v in raw.items()}


def check_names(what: str, given, required) -> None:
    missing = sorted(set(required) - set(given))
    unknown = sorted(set(given) - set(required))
    parts = []
    if missing:
        parts.append("missing " + ", ".join(missing))
    if unknown:
        parts.append("unknown " + ", ".join(unknown))
    if parts:
        raise UsageError(f"{what}: " + "; ".join(parts) + f" (expects {', '.join(required)})")


# ---------------------------------------------------------------------------
# Output


def fmt_value(value, machine: bool) -> str:
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return "" if value is None else str(value)
    return format(value, ".17g") if machine else format(value, ".6g")


def render(rows: Row, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({k: v for k, v in rows}) + "\n"
    if fmt == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf)
        writer.writerow([k for k, _ in rows])
        writer.writerow([fmt_value(v, True) for _, v in rows])
        return buf.getvalue()
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k:<{width}}  {fmt_value(v, False)}\n" for k, v in rows)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_eval(args, raw: Dict[str, str]) -> Row:
    values = numbers(raw)
    target = args.target
    if target == "blockade":
        check_names("blockade", values, ("p", "n", "N"))
        params = BlockadeParams(values["p"], values["n"], values["N"])
        return [("L", models.blockade_likelihood(params)),
                ("per_attack", models.blockade_likelihood(BlockadeParams(params.p, params.n, 1)))]
    if target == "delay":
        try:
            names = solvers.required_params("delay", values)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rows: Row = [("L_I", models.delay_single_success(values["lambda"], values["tau"], values["n"]))]
        if "N" in names:
            N = values["N"]
        else:
            N = models.delay_attack_count(values["N_a"], values["T"], values["s"], values["lambda"], values["tau"])
            rows.append(("N", N))
        rows.append(("L", models.delay_likelihood(values["lambda"], values["tau"], values["n"], N)))
        return rows
    if target == "combined":
        check_names("combined", values, ("p", "d", "n", "N_A"))
        params = CombinedParams(values["p"], values["d"], values["n"], values["N_A"])
        approx = models.undetected_success_approx(params)
        exact = models.undetected_success_exact(params)
        return [
            ("expected_attempts", models.expected_attempts(params.n, params.p)),
            ("P_N_approx", approx),
            ("P_N_exact", exact),
            ("L_N_approx", models.combined_likelihood(params, approx)),
            ("L_N_exact", models.combined_likelihood(params, exact)),
            ("viability_margin", models.viability_margin(params.n, params.d, params.p, params.N_A))
            if params.p > 0 and params.N_A > 0 else ("viability_margin", None),
        ]
    if target in sweep.OPERATIONS:
        op = sweep.OPERATIONS[target]
        check_names(target, values, op.params)
        return [(target, op(values))]
    raise UsageError(
        f"unknown eval target {target!r}; expected blockade, delay, combined or one of "
        + ", ".join(sweep.OPERATIONS)
    )


def cmd_solve(args, raw: Dict[str, str]) -> Row:
    values = numbers(raw)
    if "L" not in values:
        raise UsageError("solve: missing target L")
    target = values.pop("L")
    try:
        request = solvers.SolveRequest(
            args.model, args.unknown, target, values,
            integer_constraint=args.integer, variant=args.variant,
        )
    except DomainError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x = solvers.solve(request)
    L = request.likelihood_at(float(x))
    return [
        (args.unknown, x),
        ("L_at_solution", L),
        ("target_L", target),
        ("relative_error", abs(L - target) / target),
    ]


def _sim_config_from_json(path: str) -> Tuple[str, Dict[str, float], int, int, str]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scenario {path}: {exc}") from None
    try:
        return (data["model"], data["params"], data.get("trials", 100000),
                data.get("seed", 0), data.get("detection_scope", "failed_attempts_only"))
    except KeyError as exc:
        raise UsageError(f"scenario {path} lacks {exc}") from None


def build_sim_config(model: str, values: Dict[str, float], trials: int, seed: int, scope: str) -> montecarlo.SimConfig:
    if model not in SIM_PARAMS:
        raise UsageError(f"unknown simulation model {model!r}; expected one of {', '.join(SIM_PARAMS)}")
    check_names(model, values, SIM_PARAMS[model])
    v = values
    if model == "blockade":
        params = BlockadeParams(v["p"], v["n"], v["N"])
    elif model == "delay_single":
        params = DelayParams(v["lambda"], v["tau"], v["n"])
    elif model == "delay_horizon":
        params = DelayParams(v["lambda"], v["tau"], v["n"], N_a=v["N_a"], T=v["T"], s=v["s"])
    else:
        params = CombinedParams(v["p"], v["d"], v["n"], v["N_A"])
    try:
        return montecarlo.SimConfig(model, params, trials, seed, scope)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise UsageError(str(exc)) from None


def cmd_simulate(args, raw: Dict[str, str]) -> Row:
    if args.spec:
        if args.model or raw:
            raise UsageError("simulate: give either --spec or a model with parameters, not both")
        model, params, trials, seed, scope = _sim_config_from_json(args.spec)
        values = {ALIASES.get(k, k): float(v) for k, v in params.items()}
        trials = args.trials if args.trials is not None else trials
        seed = args.seed if args.seed is not None else seed
        scope = args.scope or scope
    else:
        if not args.model:
            raise UsageError("simulate: a model or --spec is required")
        model = args.model
        values = {k: float(to_count(k, v)) if k in SIM_COUNTS else to_number(k, v) for k, v in raw.items()}
        trials = args.trials if args.trials is not None else 100000
        seed = args.seed if args.seed is not None else 0
        scope = args.scope or "failed_attempts_only"
    config = build_sim_config(model, values, trials, seed, scope)
    result = montecarlo.simulate(config, workers=args.threads)
    reference = montecarlo.analytic_reference(config)

    extra: Row = []
    if isinstance(result, montecarlo.HorizonResult):
        est = result.estimate
        extra = [("measured_time_per_attack", result.measured_time_per_attack), ("attacks_timed", result.attacks)]
    else:
        est = result
    main_key = "L_I" if model == "delay_single" else "L"
    rows: Row = [
        ("model", model),
        ("trials", est.trials),
        ("seed", config.seed),
    ]
    if model == "combined":
        rows.append(("detection_scope", config.detection_scope))
    rows += [
        ("successes", est.successes),
        ("mean", est.mean),
        ("std_error", est.std_error),
        ("ci95_low", est.ci95_low),
        ("ci95_high", est.ci95_high),
    ]
    rows += [(f"analytic_{k}", v) for k, v in reference.items()]
    rows.append(("z_score", est.z_score(reference[main_key])))
    if est.per_unit is not None:
        rows += [("per_unit_mean", est.per_unit.mean), ("per_unit_std_error", est.per_unit.std_error)]
    rows += extra
    rows.append(("under_resolved", est.under_resolved))
    return rows


def cmd_sweep(args, raw: Dict[str, str]) -> bytes:
    if raw:
        raise UsageError("sweep takes no parameter assignments; use --spec or --preset")
    if bool(args.spec) == bool(args.preset):
        raise UsageError("sweep: give exactly one of --spec or --preset")
    if args.preset:
        try:
            spec = sweep.get_preset(args.preset, args.steps or 200)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        try:
            spec = sweep.SweepSpec.from_dict(json.loads(Path(args.spec).read_text()))
            if args.steps:
                spec.axis.steps = args.steps
            spec.resolve()
        except (OSError, json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise UsageError(f"bad sweep spec {args.spec}: {exc}") from None
    fmt = "json-lines" if args.format == "json" else "csv"
    return sweep.emit(sweep.run_sweep(spec), fmt)


def cmd_presets(args, raw) -> Row:
    return [(spec.name, spec.operation) for spec in sweep.figure_presets(1)]


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--format", choices=("human", "csv", "json"), default="human")
    common.add_argument("--out", help="write output here instead of standard output")

    parser = argparse.ArgumentParser(prog="defense-depth", allow_abbrev=False, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], allow_abbrev=False, help="evaluate a model or operation")
    p.add_argument("target", help="blockade, delay, combined, or an operation name")

    p = sub.add_parser("solve", parents=[common], allow_abbrev=False, help="invert a model for one parameter")
    p.add_argument("model", choices=sorted(solvers.MODEL_PARAMS))
    p.add_argument("--unknown", required=True)
    p.add_argument("--integer", action="store_true", help="round a count to the defender-safe integer")
    p.add_argument("--variant", choices=solvers.VARIANTS, default="approx",
                   help="combined model: per-campaign success from the mean attempt count or exact")

    p = sub.add_parser("simulate", parents=[common], allow_abbrev=False, help="Monte Carlo estimate with the analytic value")
    p.add_argument("model", nargs="?", choices=montecarlo.MODELS)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scope", choices=montecarlo.SCOPES)
    p.add_argument("--threads", type=int, help=f"worker threads (default ${montecarlo.THREADS_ENV} or CPU count)")
    p.add_argument("--spec", help="JSON scenario with model, params, trials, seed, detection_scope")

    p = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="tabulate an operation over a grid")
    p.add_argument("--preset")
    p.add_argument("--spec", help="JSON sweep spec")
    p.add_argument("--steps", type=int, help="override axis resolution")

    sub.add_parser("presets", parents=[common], allow_abbrev=False, help="list figure presets")
    return parser


COMMANDS = {
    "eval": cmd_eval,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "presets": cmd_presets,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        raw = parse_assignments(rest)
        result = COMMANDS[args.command](args, raw)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NoBracketError) as exc:
        print(f"{parser.prog} {args.command}: {exc}", file=sys.stderr)
        return 1

    if isinstance(result, bytes):
        data = result
    else:
        data = render(result, args.format).encode("utf-8")
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    if args.command == "simulate" and dict(result).get("under_resolved"):
        print("note: fewer than 50 successes; the interval is unreliable, rerun with more --trials",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
