"""Closed-form breach likelihoods for layered defenses.

Three attacker models are covered:

* blockade: every attack must slip past ``n`` layers, each of which fails
  independently with probability ``p``;
* delay: each layer takes time ``tau`` to overcome while a detector with rate
  ``lambda`` races it;
* combined: a learning attacker needs a geometric number of attempts per
  layer, a broken layer stays broken, and every attempt risks detection.

All expressions of the form ``1 - (1 - x)**N`` go through :func:`at_least_one`,
which stays accurate for ``x`` far below machine epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DomainError

Probability = float  # value in [0, 1]


def _finite(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value):
        raise DomainError(name, value, "must be a number")
    return value


def check_probability(name: str, value: float, *, allow_zero: bool = True, allow_one: bool = True) -> float:
    value = _finite(name, value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(name, value, "must lie in [0, 1]")
    if not allow_zero and value == 0.0:
        raise DomainError(name, value, "must be > 0")
    if not allow_one and value == 1.0:
        raise DomainError(name, value, "must be < 1")
    return value


def check_nonnegative(name: str, value: float) -> float:
    value = _finite(name, value)
    if value < 0.0:
        raise DomainError(name, value, "must be >= 0")
    return value


def check_positive(name: str, value: float) -> float:
    value = _finite(name, value)
    if value <= 0.0:
        raise DomainError(name, value, "must be > 0")
    return value


def _clamp(x: float) -> Probability:
    return min(1.0, max(0.0, x))


def at_least_one(x: Probability, N: float) -> Probability:
    """Probability that at least one of ``N`` independent trials succeeds.

    Each trial succeeds with probability ``x``. Computed as
    ``-expm1(N * log1p(-x))`` so that tiny ``x`` keeps full relative precision.
    """
    if N == 0 or x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return _clamp(-math.expm1(N * math.log1p(-x)))


def _power(base: float, exponent: float) -> float:
    # base**exponent with 0**0 == 1 and no OverflowError on underflow paths
    if exponent == 0:
        return 1.0
    if base == 0.0:
        return 0.0
    return math.exp(exponent * math.log(base))


# ---------------------------------------------------------------------------
# Parameter records


@dataclass(frozen=True)
class BlockadeParams:
    p: float
    n: float
    N: float = 1.0

    def __post_init__(self):
        check_probability("p", self.p)
        check_nonnegative("n", self.n)
        check_nonnegative("N", self.N)


@dataclass(frozen=True)
class DelayParams:
    """Delay-strategy parameters.

    ``lam`` is the per-layer detection rate (``lambda`` on the command line).
    ``N`` is a direct attack count; ``N_a``, ``T`` and ``s`` describe attackers
    working over a horizon instead. Either route may be left unset.
    """

    lam: float
    tau: float
    n: float
    N: Optional[float] = None
    N_a: float = 1.0
    T: Optional[float] = None
    s: float = 1.0

    def __post_init__(self):
        check_nonnegative("lambda", self.lam)
        check_positive("tau", self.tau)
        check_nonnegative("n", self.n)
        check_nonnegative("N_a", self.N_a)
        check_positive("s", self.s)
        if self.N is not None:
            check_nonnegative("N", self.N)
        if self.T is not None:
            check_nonnegative("T", self.T)

    @property
    def speed_advantage(self) -> float:
        return self.lam * self.tau

    @property
    def expected_layers_overcome(self) -> float:
        # as used to derive the horizon attack count: 1 / e^(-lambda tau)
        return math.exp(self.lam * self.tau)


@dataclass(frozen=True)
class CombinedParams:
    p: float
    d: float
    n: float
    N_A: float = 1.0

    def __post_init__(self):
        check_probability("p", self.p)
        check_probability("d", self.d)
        check_nonnegative("n", self.n)
        check_nonnegative("N_A", self.N_A)

    @property
    def u(self) -> Probability:
        return 1.0 - self.d


# ---------------------------------------------------------------------------
# Blockade


def blockade_likelihood(params: BlockadeParams) -> Probability:
    """Likelihood that at least one of ``N`` attacks passes all ``n`` layers."""
    per_attack = _power(params.p, params.n)
    return at_least_one(per_attack, params.N)


def blockade_single_success_mixed(p_list: Iterable[float]) -> Probability:
    """Single-attack success through layers with individual failure probabilities."""
    out = 1.0
    for i, p in enumerate(p_list):
        out *= check_probability(f"p[{i}]", p)
    return out


def blockade_attacks_exact(L: float, p: float, n: float) -> float:
    """Number of attacks that yields breach likelihood ``L``."""
    L = check_probability("L", L, allow_zero=False, allow_one=False)
    p = check_probability("p", p, allow_zero=False, allow_one=False)
    n = check_positive("n", n)
    per_attack = _power(p, n)
    if per_attack == 0.0:
        return math.inf
    return math.log1p(-L) / math.log1p(-per_attack)


def blockade_attacks_approx(L: float, p: float, n: float) -> float:
    """First-order attack count ``L / p**n``; only meaningful for small L and p**n."""
    L = check_positive("L", L)
    p = check_probability("p", p, allow_zero=False, allow_one=False)
    n = check_nonnegative("n", n)
    return math.exp(math.log(L) - n * math.log(p))


def blockade_hardness(L: float, N: float, n: float) -> Probability:
    """Per-layer failure probability that holds the breach likelihood at ``L``."""
    L = check_probability("L", L, allow_zero=False, allow_one=False)
    N = check_positive("N", N)
    n = check_positive("n", n)
    per_attack = -math.expm1(math.log1p(-L) / N)
    return _clamp(math.exp(math.log(per_attack) / n))


# ---------------------------------------------------------------------------
# Delay


def delay_single_success(lam: float, tau: float, n: float) -> Probability:
    lam = check_nonnegative("lambda", lam)
    tau = check_positive("tau", tau)
    n = check_nonnegative("n", n)
    return math.exp(-lam * tau * n)


def delay_likelihood(lam: float, tau: float, n: float, N: float) -> Probability:
    N = check_nonnegative("N", N)
    return at_least_one(delay_single_success(lam, tau, n), N)


def delay_attack_count(N_a: float, T: float, s: float, lam: float, tau: float) -> float:
    """Attacks launched over horizon ``T``, taking ``tau * e^(lambda tau)`` per attack."""
    N_a = check_nonnegative("N_a", N_a)
    T = check_nonnegative("T", T)
    s = check_nonnegative("s", s)
    lam = check_nonnegative("lambda", lam)
    tau = check_positive("tau", tau)
    return N_a * T * s * math.exp(-lam * tau) / tau


def delay_likelihood_over_time(params: DelayParams) -> Probability:
    if params.T is None:
        raise DomainError("T", None, "horizon is required")
    N = delay_attack_count(params.N_a, params.T, params.s, params.lam, params.tau)
    return delay_likelihood(params.lam, params.tau, params.n, N)


def compensating_speedup(L: float, tau: float, N_a: float, T: float, lam: float, n: float) -> float:
    """Attacker speedup that a defense of ``n`` layers can absorb at likelihood ``L``."""
    L = check_positive("L", L)
    tau = check_positive("tau", tau)
    N_a = check_positive("N_a", N_a)
    T = check_positive("T", T)
    lam = check_nonnegative("lambda", lam)
    n = _finite("n", n)
    log_s = math.log(L) + math.log(tau) - math.log(N_a) - math.log(T) + lam * tau * (n + 1)
    try:
        return math.exp(log_s)
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# Combined (learning attacker)


def expected_attempts(n: float, p: float) -> float:
    """Expected failed attempts to break ``n`` layers, a negative-binomial mean."""
    p = check_probability("p", p, allow_zero=False)
    n = check_nonnegative("n", n)
    return n * (1.0 - p) / p


def expected_attempts_mixed(p_list: Iterable[float]) -> float:
    total = 0.0
    for i, p in enumerate(p_list):
        p = check_probability(f"p[{i}]", p, allow_zero=False)
        total += (1.0 - p) / p
    return total


def undetected_success_approx(params: CombinedParams) -> Probability:
    """Campaign success with the attempt count fixed at its mean: ``u**E[N]``."""
    attempts = expected_attempts(params.n, params.p)
    if attempts == 0:
        return 1.0
    if params.d == 1.0:
        return 0.0
    return math.exp(attempts * math.log1p(-params.d))


def undetected_success_exact(params: CombinedParams) -> Probability:
    """Campaign success averaged over the geometric attempt counts: ``E[u**N]``.

    Per layer the failed-attempt count ``K`` has ``P(K=k) = p (1-p)**k``, so
    ``E[u**K] = p / (1 - (1-p) u)``; layers are independent.
    """
    p, d = params.p, params.d
    denom = p + d - p * d  # 1 - (1-p)(1-d)
    if denom == 0.0:
        raise DomainError("p", p, "p=0 with d=0 leaves the campaign undecided forever")
    if params.n == 0:
        return 1.0
    per_layer = min(1.0, p / denom)
    return _power(per_layer, params.n)


def combined_likelihood(params: CombinedParams, per_campaign: Probability) -> Probability:
    """Likelihood that at least one of ``N_A`` campaigns gets through undetected."""
    per_campaign = check_probability("per_campaign", per_campaign)
    return at_least_one(per_campaign, params.N_A)


def combined_likelihood_approx(params: CombinedParams) -> Probability:
    return combined_likelihood(params, undetected_success_approx(params))


def combined_likelihood_exact(params: CombinedParams) -> Probability:
    return combined_likelihood(params, undetected_success_exact(params))


def viability_margin(n: float, d: float, p: float, N_A: float) -> float:
    """``n d / p - ln(N_A)``; a viable defense keeps this above one by a few."""
    p = check_probability("p", p, allow_zero=False)
    d = check_probability("d", d)
    n = check_nonnegative("n", n)
    N_A = check_positive("N_A", N_A)
    return n * d / p - math.log(N_A)
