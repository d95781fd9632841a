"""Seeded Monte Carlo oracles for the breach models.

Each simulator plays out the attack process directly (layer by layer, attempt
by attempt) instead of sampling from the closed forms it is meant to check.

Trials are split into fixed-size blocks. Block ``b`` draws from a Philox
stream whose counter starts at ``b << 64``, so results depend only on the seed
and the config, never on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from . import models
from .models import BlockadeParams, CombinedParams, DelayParams

THREADS_ENV = "DEFENSE_DEPTH_THREADS"
BLOCK_UNITS = 1 << 18
Z95 = 1.96

MODELS = ("blockade", "delay_single", "delay_horizon", "combined")
SCOPES = ("failed_attempts_only", "all_attempts")

_PARAM_TYPES = {
    "blockade": BlockadeParams,
    "delay_single": DelayParams,
    "delay_horizon": DelayParams,
    "combined": CombinedParams,
}
_INTEGER_FIELDS = {
    "blockade": ("n", "N"),
    "delay_single": ("n",),
    "delay_horizon": ("n", "N_a"),
    "combined": ("n", "N_A"),
}

Params = Union[BlockadeParams, DelayParams, CombinedParams]


def default_workers() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    model: str
    params: Params
    trials: int
    seed: int = 0
    detection_scope: str = "failed_attempts_only"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown simulation model {self.model!r}; expected one of {MODELS}")
        if not isinstance(self.params, _PARAM_TYPES[self.model]):
            raise TypeError(f"{self.model} needs {_PARAM_TYPES[self.model].__name__}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.detection_scope not in SCOPES:
            raise ValueError(f"detection_scope must be one of {SCOPES}")
        for name in _INTEGER_FIELDS[self.model]:
            value = getattr(self.params, name)
            if value is None or float(value) != int(value):
                raise ValueError(f"{name} must be an integer for simulation, got {value!r}")
        if self.model == "delay_horizon" and self.params.T is None:
            raise ValueError("delay_horizon needs a horizon T")
        if self.model == "combined" and self.params.p == 0.0:
            raise ValueError("p must be > 0: a layer that can never break ends every campaign in detection")


@dataclass(frozen=True)
class SimEstimate:
    """Bernoulli proportion with a normal-approximation 95% interval.

    ``per_unit`` optionally holds the proportion over the individual attacks
    or campaigns inside the trials.
    """

    mean: float
    std_error: float
    trials: int
    successes: int
    ci95_low: float
    ci95_high: float
    per_unit: Optional["SimEstimate"] = None

    @classmethod
    def from_counts(cls, successes: int, trials: int, per_unit: Optional["SimEstimate"] = None) -> "SimEstimate":
        mean = successes / trials
        se = math.sqrt(mean * (1.0 - mean) / trials)
        return cls(
            mean=mean,
            std_error=se,
            trials=trials,
            successes=successes,
            ci95_low=max(0.0, mean - Z95 * se),
            ci95_high=min(1.0, mean + Z95 * se),
            per_unit=per_unit,
        )

    @property
    def under_resolved(self) -> bool:
        # fewer than 50 successes: the normal interval is unreliable
        return self.mean < 50.0 / self.trials

    def z_score(self, value: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == value else math.inf
        return abs(self.mean - value) / self.std_error

    def agrees(self, value: float, z: float = 3.0) -> bool:
        return self.z_score(value) <= z


class HorizonResult(NamedTuple):
    estimate: SimEstimate
    measured_time_per_attack: float
    attacks: int


# ---------------------------------------------------------------------------
# Block engine


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 64))


def _run_blocks(config: SimConfig, units_per_trial: int, block_fn: Callable, workers: Optional[int]) -> List[tuple]:
    per_block = max(1, BLOCK_UNITS // max(1, units_per_trial))
    spans = [(start, min(per_block, config.trials - start)) for start in range(0, config.trials, per_block)]

    def run(i: int) -> tuple:
        return block_fn(_block_rng(config.seed, i), spans[i][1])

    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(spans) == 1:
        return [run(i) for i in range(len(spans))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(spans))))


def _trials_hit(unit_index: np.ndarray, units_per_trial: int) -> int:
    if unit_index.size == 0:
        return 0
    return int(np.unique(unit_index // units_per_trial).size)


# ---------------------------------------------------------------------------
# Simulators


def sim_blockade(config: SimConfig, workers: Optional[int] = None) -> SimEstimate:
    """Each trial launches ``N`` attacks; an attack gets through if every layer fails."""
    p = config.params.p
    n, N = int(config.params.n), int(config.params.N)

    def block(rng: np.random.Generator, m: int) -> Tuple[int, int]:
        alive = np.arange(m * N)
        for _ in range(n):
            if alive.size == 0:
                break
            alive = alive[rng.random(alive.size) < p]
        return _trials_hit(alive, N), int(alive.size)

    results = _run_blocks(config, N, block, workers)
    hits = sum(r[0] for r in results)
    attacks = sum(r[1] for r in results)
    per_attack = SimEstimate.from_counts(attacks, config.trials * N) if N else None
    return SimEstimate.from_counts(hits, config.trials, per_attack)


def sim_delay_single(config: SimConfig, workers: Optional[int] = None) -> SimEstimate:
    """One attack per trial walks the layers while an exponential detection clock runs."""
    params = config.params
    lam, tau, n = params.lam, params.tau, int(params.n)

    def block(rng: np.random.Generator, m: int) -> Tuple[int]:
        alive = m
        if lam > 0.0:
            for _ in range(n):
                if alive == 0:
                    break
                detect_at = rng.exponential(1.0 / lam, size=alive)
                alive -= int(np.count_nonzero(detect_at < tau))
        return (alive,)

    results = _run_blocks(config, 1, block, workers)
    return SimEstimate.from_counts(sum(r[0] for r in results), config.trials)


def sim_delay_horizon(config: SimConfig, workers: Optional[int] = None) -> HorizonResult:
    """``N_a`` attackers per trial keep attacking until one gets through or time runs out.

    With speed factor ``s`` a layer takes ``tau / s`` and detection runs at
    rate ``lambda * s``. A detected attacker starts over at the first layer
    immediately. A trial stops as soon as one of its attackers gets through.

    The measured time per attack averages the full duration of every attack
    started: an attack cut off by the horizon or by the end of its trial is
    played out past the cut for timing only, so long attacks are not
    censored away.
    """
    params = config.params
    n, N_a = int(params.n), int(params.N_a)
    T = float(params.T)
    layer_time = params.tau / params.s
    rate = params.lam * params.s

    def block(rng: np.random.Generator, m: int) -> Tuple[int, int, float]:
        U = m * N_a
        if U == 0:
            return 0, 0, 0.0
        if n == 0:
            return m, U, 0.0
        # state of attackers still in play, compacted every step; a "draining"
        # attacker is past its horizon or its trial is decided, and only its
        # attack in progress is played out, for timing
        idx = np.arange(U)
        now = np.zeros(U)
        started = np.zeros(U)
        layer = np.zeros(U, dtype=np.int64)
        draining = np.zeros(U, dtype=bool)
        decided = np.zeros(m, dtype=bool)
        winners = []
        durations = []
        attacks = 0
        while idx.size:
            if rate > 0.0:
                detect = rng.exponential(1.0 / rate, size=idx.size)
                caught = detect < layer_time
                end = now + np.where(caught, detect, layer_time)
            else:
                caught = np.zeros(idx.size, dtype=bool)
                end = now + layer_time
            layer = np.where(caught, 0, layer + 1)
            over = caught | (layer == n)
            durations.append(math.fsum(end[over] - started[over]))
            attacks += int(np.count_nonzero(over))

            live = ~draining & (end <= T)
            won = idx[live & over & ~caught]
            if won.size:
                winners.append(won)
                decided[won // N_a] = True
            live &= ~decided[idx // N_a]
            keep = ~over | (live & caught)
            draining = ~live
            started = np.where(caught, end, started)
            idx, now, started, layer, draining = (
                idx[keep], end[keep], started[keep], layer[keep], draining[keep]
            )
        won = np.concatenate(winners) if winners else np.empty(0, dtype=np.int64)
        return _trials_hit(won, N_a), attacks, math.fsum(durations)

    results = _run_blocks(config, N_a, block, workers)
    hits = sum(r[0] for r in results)
    attacks = sum(r[1] for r in results)
    total_time = math.fsum(r[2] for r in results)
    per_attack_time = total_time / attacks if attacks else math.nan
    return HorizonResult(SimEstimate.from_counts(hits, config.trials), per_attack_time, attacks)


def sim_combined(config: SimConfig, workers: Optional[int] = None) -> SimEstimate:
    """``N_A`` independent learning campaigns per trial.

    Per layer, the failed attempts before the break are geometric in ``p`` and
    the index of the first detected attempt is geometric in ``d``; the
    campaign survives the layer when detection would come only after the
    exposed attempts. With ``all_attempts`` the breaking attempt is exposed
    too.
    """
    params = config.params
    p, d = params.p, params.d
    n, N_A = int(params.n), int(params.N_A)
    extra = 1 if config.detection_scope == "all_attempts" else 0

    def block(rng: np.random.Generator, m: int) -> Tuple[int, int]:
        alive = np.arange(m * N_A)
        if d > 0.0:
            for _ in range(n):
                if alive.size == 0:
                    break
                failures = rng.geometric(p, size=alive.size) - 1
                first_detection = rng.geometric(d, size=alive.size)
                alive = alive[first_detection > failures + extra]
        return _trials_hit(alive, N_A), int(alive.size)

    results = _run_blocks(config, N_A, block, workers)
    hits = sum(r[0] for r in results)
    campaigns = sum(r[1] for r in results)
    per_campaign = SimEstimate.from_counts(campaigns, config.trials * N_A) if N_A else None
    return SimEstimate.from_counts(hits, config.trials, per_campaign)


def simulate(config: SimConfig, workers: Optional[int] = None) -> Union[SimEstimate, HorizonResult]:
    runner = {
        "blockade": sim_blockade,
        "delay_single": sim_delay_single,
        "delay_horizon": sim_delay_horizon,
        "combined": sim_combined,
    }[config.model]
    return runner(config, workers)


# ---------------------------------------------------------------------------
# Analytic references


def campaign_success(params: CombinedParams, scope: str = "failed_attempts_only") -> float:
    """Exact per-campaign success probability under a detection scope."""
    exact = models.undetected_success_exact(params)
    if scope == "all_attempts":
        return exact * (1.0 - params.d) ** params.n
    return exact


def formula_time_per_attack(params: DelayParams) -> float:
    return params.tau * math.exp(params.lam * params.tau) / params.s


def renewal_time_per_attack(params: DelayParams) -> float:
    """Mean attack duration when each layer costs ``min(detection time, tau/s)``."""
    q = math.exp(-params.lam * params.tau)
    if params.lam == 0.0:
        return params.n * params.tau / params.s
    return (1.0 - q ** params.n) / (params.lam * params.s)


def analytic_reference(config: SimConfig) -> dict:
    """Closed-form values the simulation of ``config`` should be compared with."""
    params = config.params
    if config.model == "blockade":
        return {
            "L": models.blockade_likelihood(params),
            "per_attack": models.blockade_likelihood(BlockadeParams(params.p, params.n, 1)),
        }
    if config.model == "delay_single":
        return {"L_I": models.delay_single_success(params.lam, params.tau, params.n)}
    if config.model == "delay_horizon":
        renewal = renewal_time_per_attack(params)
        attacks = params.N_a * params.T / renewal if renewal > 0 else math.inf
        return {
            "L": models.delay_likelihood_over_time(params),
            "L_renewal": models.delay_likelihood(params.lam, params.tau, params.n, attacks),
            "time_per_attack": formula_time_per_attack(params),
            "time_per_attack_renewal": renewal,
        }
    per_campaign = campaign_success(params, config.detection_scope)
    return {
        "L": models.combined_likelihood(params, per_campaign),
        "per_campaign": per_campaign,
        "L_approx": models.combined_likelihood_approx(params),
        "per_campaign_approx": models.undetected_success_approx(params),
    }
