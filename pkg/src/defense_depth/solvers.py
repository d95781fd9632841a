"""Invert the breach models for a single unknown and compare approximations.

Every model likelihood is monotone in each of its parameters, so a bracketing
bisection is enough: it never diverges and is cheap at these sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

from . import models
from .errors import DomainError, NoBracketError
from .models import BlockadeParams, CombinedParams, DelayParams

SEARCH_MIN = 1e-12
SEARCH_MAX = 1e12

PROBABILITY_PARAMS = frozenset({"p", "d"})
DEFENSE_COUNTS = frozenset({"n"})
ATTACK_COUNTS = frozenset({"N", "N_a", "N_A"})

MODEL_PARAMS: Dict[str, Tuple[Tuple[str, ...], ...]] = {
    "blockade": (("p", "n", "N"),),
    "delay": (("lambda", "tau", "n", "N"), ("lambda", "tau", "n", "N_a", "T", "s")),
    "combined": (("p", "d", "n", "N_A"),),
}

VARIANTS = ("approx", "exact")


def model_likelihood(model: str, values: Mapping[str, float], variant: str = "approx") -> float:
    """Evaluate a model's breach likelihood from a flat name -> value mapping."""
    if model == "blockade":
        return models.blockade_likelihood(BlockadeParams(values["p"], values["n"], values["N"]))
    if model == "delay":
        if "N" in values:
            return models.delay_likelihood(values["lambda"], values["tau"], values["n"], values["N"])
        params = DelayParams(values["lambda"], values["tau"], values["n"],
                             N_a=values["N_a"], T=values["T"], s=values["s"])
        return models.delay_likelihood_over_time(params)
    if model == "combined":
        params = CombinedParams(values["p"], values["d"], values["n"], values["N_A"])
        if variant == "exact":
            return models.combined_likelihood_exact(params)
        return models.combined_likelihood_approx(params)
    raise ValueError(f"unknown model {model!r}; expected one of {sorted(MODEL_PARAMS)}")


def required_params(model: str, names) -> Tuple[str, ...]:
    """Pick the parameter set of ``model`` that ``names`` is meant to fill.

    Raises ValueError listing missing or unknown names when nothing matches.
    """
    if model not in MODEL_PARAMS:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(MODEL_PARAMS)}")
    names = set(names)
    candidates = MODEL_PARAMS[model]
    for option in candidates:
        if names == set(option):
            return option
    # report against the closest option
    best = min(candidates, key=lambda opt: len(set(opt) ^ names))
    missing = sorted(set(best) - names)
    unknown = sorted(names - set().union(*candidates))
    parts = []
    if missing:
        parts.append("missing " + ", ".join(missing))
    if unknown:
        parts.append("unknown " + ", ".join(unknown))
    if not parts:
        parts.append("expected exactly one of " + " | ".join(",".join(o) for o in candidates))
    raise ValueError(f"{model}: " + "; ".join(parts))


@dataclass
class SolveRequest:
    model: str
    unknown: str
    target_L: float
    fixed: Dict[str, float] = field(default_factory=dict)
    integer_constraint: bool = False
    variant: str = "approx"  # combined model: per-campaign value from the mean-attempt form or the exact one

    def __post_init__(self):
        if self.unknown in self.fixed:
            raise ValueError(f"{self.unknown} is both the unknown and a fixed parameter")
        required_params(self.model, set(self.fixed) | {self.unknown})
        models.check_probability("target_L", self.target_L, allow_zero=False, allow_one=False)
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.integer_constraint and self.unknown not in DEFENSE_COUNTS | ATTACK_COUNTS:
            raise ValueError(f"integer_constraint applies to counts only, not {self.unknown}")

    def likelihood_at(self, x: float) -> float:
        values = dict(self.fixed)
        values[self.unknown] = x
        return model_likelihood(self.model, values, self.variant)


def _bisect(h: Callable[[float], float], lo: float, hi: float) -> float:
    h_lo = h(lo)
    if h_lo == 0.0:
        return lo
    if h(hi) == 0.0:
        return hi
    for _ in range(2000):
        if lo > 0.0 and hi / lo > 4.0:
            mid = math.sqrt(lo) * math.sqrt(hi)
        else:
            mid = lo + (hi - lo) / 2.0
        if not lo < mid < hi:
            break
        h_mid = h(mid)
        if h_mid == 0.0:
            return mid
        if (h_mid < 0.0) == (h_lo < 0.0):
            lo, h_lo = mid, h_mid
        else:
            hi = mid
    return lo + (hi - lo) / 2.0


def _safe_eval(f: Callable[[float], float], x: float) -> float:
    try:
        return f(x)
    except DomainError:
        return math.nan


def _bracket(f: Callable[[float], float], unknown: str, target: float) -> Tuple[float, float]:
    """Find [lo, hi] with f(lo) - target and f(hi) - target of opposite sign."""

    def straddles(a: float, b: float) -> bool:
        fa, fb = _safe_eval(f, a), _safe_eval(f, b)
        if math.isnan(fa) or math.isnan(fb):
            return False
        return (fa - target) * (fb - target) <= 0.0

    if unknown in PROBABILITY_PARAMS:
        lo = 0.0 if not math.isnan(_safe_eval(f, 0.0)) else SEARCH_MIN
        if straddles(lo, 1.0):
            return lo, 1.0
        raise NoBracketError(unknown, target, _safe_eval(f, lo), _safe_eval(f, 1.0))

    up = [1.0]
    while up[-1] < SEARCH_MAX:
        up.append(min(up[-1] * 2.0, SEARCH_MAX))
    for a, b in zip(up, up[1:]):
        if straddles(a, b):
            return a, b
    down = [1.0]
    while down[-1] > SEARCH_MIN:
        down.append(max(down[-1] / 2.0, SEARCH_MIN))
    for b, a in zip(down, down[1:]):
        if straddles(a, b):
            return a, b
    raise NoBracketError(unknown, target, _safe_eval(f, SEARCH_MIN), _safe_eval(f, SEARCH_MAX))


def _round_safe(f: Callable[[float], float], x: float, target: float, increasing: bool) -> int:
    # largest attack count / smallest defense count whose likelihood stays <= target
    ok = lambda k: f(float(k)) <= target * (1.0 + 1e-12)
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        k = int(nearest)
    else:
        k = math.floor(x) if increasing else math.ceil(x)
    step = -1 if increasing else 1
    for _ in range(64):
        if ok(k):
            break
        k += step
    for _ in range(64):
        if k - step < 0 or not ok(k - step):
            break
        k -= step
    return k


def solve(request: SolveRequest) -> float:
    """Value of ``request.unknown`` at which the model likelihood equals ``target_L``.

    With ``integer_constraint`` the result is rounded toward the defender: the
    smallest layer count, or the largest attack count, whose likelihood does
    not exceed the target.
    """
    f = request.likelihood_at
    target = request.target_L
    lo, hi = _bracket(f, request.unknown, target)
    x = _bisect(lambda v: f(v) - target, lo, hi)
    if not request.integer_constraint:
        return x
    increasing = f(hi) > f(lo)
    return _round_safe(f, x, target, increasing)


def minimal_defenses_curve(
    model: str,
    rate: float,
    attack_counts: Sequence[float],
    L: float = 0.001,
) -> List[Tuple[float, float]]:
    """Smallest real layer count holding the breach likelihood at ``L`` for each ``N``.

    ``rate`` is the per-layer failure probability ``p`` for the blockade model
    and the defensive speed advantage ``lambda * tau`` for the delay model.
    """
    if model == "blockade":
        fixed = {"p": rate}
    elif model == "delay":
        fixed = {"lambda": rate, "tau": 1.0}
    else:
        raise ValueError(f"minimal_defenses_curve supports blockade and delay, not {model!r}")
    prev = 0.0
    out = []
    for N in attack_counts:
        if N <= 0 or N < prev:
            raise ValueError("attack counts must be positive and ascending")
        prev = N
        n = solve(SolveRequest(model, "n", L, dict(fixed, N=N)))
        out.append((N, n))
    return out


def decade_spacing(curve: Sequence[Tuple[float, float]]) -> List[float]:
    """Change in layer count per tenfold increase in attacks, between adjacent points."""
    return [
        (n1 - n0) / math.log10(N1 / N0)
        for (N0, n0), (N1, n1) in zip(curve, curve[1:])
    ]


# ---------------------------------------------------------------------------
# Approximation diagnostics


@dataclass(frozen=True)
class RegimeFlag:
    name: str
    value: float


@dataclass
class ApproxReport:
    kind: str
    exact: float
    approximate: float
    relative_error: float
    regime_flags: List[RegimeFlag]
    extras: Dict[str, float] = field(default_factory=dict)

    def flag(self, name: str) -> float:
        for f in self.regime_flags:
            if f.name == name:
                return f.value
        raise KeyError(name)


def _relative_error(approximate: float, exact: float) -> float:
    if exact == 0.0:
        return 0.0 if approximate == 0.0 else math.inf
    return abs(approximate - exact) / abs(exact)


def _report_eq3(L: float, p: float, n: float) -> ApproxReport:
    exact = models.blockade_attacks_exact(L, p, n)
    approx = models.blockade_attacks_approx(L, p, n)
    return ApproxReport(
        "eq3_vs_eq2", exact, approx, _relative_error(approx, exact),
        [RegimeFlag("L small", L), RegimeFlag("p^n small", p ** n)],
    )


def _report_eq7(L: float, tau: float, N_a: float, T: float, lam: float, n: float) -> ApproxReport:
    # exact speedup: solve the horizon likelihood for s without the log expansions
    per_attack = models.delay_single_success(lam, tau, n)
    attacks_needed = math.log1p(-L) / math.log1p(-per_attack)
    exact = attacks_needed / models.delay_attack_count(N_a, T, 1.0, lam, tau)
    approx = models.compensating_speedup(L, tau, N_a, T, lam, n)
    return ApproxReport(
        "eq7_vs_exact", exact, approx, _relative_error(approx, exact),
        [RegimeFlag("L small", L), RegimeFlag("e^(-lambda tau n) small", per_attack)],
    )


def _report_relation11(n: float, d: float, p: float, N_A: float) -> ApproxReport:
    params = CombinedParams(p, d, n, N_A)
    b = models.undetected_success_approx(params)
    margin = models.viability_margin(n, d, p, N_A)
    # the margin approximates -ln(b) - ln(N_A)
    exact = (-math.log(b) if b > 0.0 else math.inf) - math.log(N_A)
    L_approx = models.combined_likelihood(params, b)
    L_exact = models.combined_likelihood_exact(params)
    return ApproxReport(
        "relation11_vs_eq10", exact, margin, _relative_error(margin, exact),
        [
            RegimeFlag("L small", L_approx),
            RegimeFlag("b small", b),
            RegimeFlag("p small", p),
            RegimeFlag("d small", d),
        ],
        extras={
            "margin": margin,
            "L_N": L_approx,
            "L_N_exact": L_exact,
            "b": b,
            "b_exact": models.undetected_success_exact(params),
        },
    )


_REPORTS = {
    "eq3_vs_eq2": _report_eq3,
    "eq7_vs_exact": _report_eq7,
    "relation11_vs_eq10": _report_relation11,
}

REPORT_KINDS = tuple(_REPORTS)


def approximation_report(kind: str, **params: float) -> ApproxReport:
    """Evaluate an approximation alongside the exact expression it replaces.

    Kinds and their parameters:

    * ``eq3_vs_eq2``: ``L, p, n`` -- attack count ``L/p**n`` vs the log form.
    * ``eq7_vs_exact``: ``L, tau, N_a, T, lam, n`` -- compensating speedup.
    * ``relation11_vs_eq10``: ``n, d, p, N_A`` -- viability margin vs
      ``-ln(b) - ln(N_A)``; ``extras`` carries both breach likelihoods.

    Flags record the observed size of each quantity the approximation assumes
    small; no pass/fail judgment is made.
    """
    try:
        fn = _REPORTS[kind]
    except KeyError:
        raise ValueError(f"unknown report kind {kind!r}; expected one of {REPORT_KINDS}") from None
    return fn(**params)
