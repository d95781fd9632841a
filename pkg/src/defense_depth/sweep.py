"""Parameter sweeps over the model and solver operations, with CSV / JSON-lines output."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, models, solvers
from .errors import DomainError, NoBracketError
from .models import BlockadeParams, CombinedParams, DelayParams


@dataclass(frozen=True)
class Operation:
    name: str
    params: Tuple[str, ...]
    fn: Callable[..., float]

    def __call__(self, values: Dict[str, float]) -> float:
        return self.fn(**{k: values[k] for k in self.params})


def _op(name, params, fn):
    return name, Operation(name, tuple(params.split()), fn)


OPERATIONS: Dict[str, Operation] = dict([
    _op("blockade_likelihood", "p n N", lambda p, n, N: models.blockade_likelihood(BlockadeParams(p, n, N))),
    _op("blockade_attacks_exact", "L p n", models.blockade_attacks_exact),
    _op("blockade_attacks_approx", "L p n", models.blockade_attacks_approx),
    _op("blockade_hardness", "L N n", models.blockade_hardness),
    _op("delay_single_success", "lambda tau n", lambda **kw: models.delay_single_success(kw["lambda"], kw["tau"], kw["n"])),
    _op("delay_likelihood", "lambda tau n N", lambda **kw: models.delay_likelihood(kw["lambda"], kw["tau"], kw["n"], kw["N"])),
    _op("delay_attack_count", "N_a T s lambda tau",
        lambda **kw: models.delay_attack_count(kw["N_a"], kw["T"], kw["s"], kw["lambda"], kw["tau"])),
    _op("delay_likelihood_over_time", "lambda tau n N_a T s",
        lambda **kw: models.delay_likelihood_over_time(
            DelayParams(kw["lambda"], kw["tau"], kw["n"], N_a=kw["N_a"], T=kw["T"], s=kw["s"]))),
    _op("compensating_speedup", "L tau N_a T lambda n",
        lambda **kw: models.compensating_speedup(kw["L"], kw["tau"], kw["N_a"], kw["T"], kw["lambda"], kw["n"])),
    _op("expected_attempts", "n p", models.expected_attempts),
    _op("undetected_success_approx", "p d n", lambda p, d, n: models.undetected_success_approx(CombinedParams(p, d, n))),
    _op("undetected_success_exact", "p d n", lambda p, d, n: models.undetected_success_exact(CombinedParams(p, d, n))),
    _op("combined_likelihood_approx", "p d n N_A",
        lambda p, d, n, N_A: models.combined_likelihood_approx(CombinedParams(p, d, n, N_A))),
    _op("combined_likelihood_exact", "p d n N_A",
        lambda p, d, n, N_A: models.combined_likelihood_exact(CombinedParams(p, d, n, N_A))),
    _op("viability_margin", "n d p N_A", models.viability_margin),
])


def resolve_operation(name: str, names: Optional[Sequence[str]] = None) -> Operation:
    """Look up an operation by name.

    Besides the fixed table, ``solve.<model>.<unknown>[.exact]`` inverts a
    model for one parameter at the breach likelihood ``L``; ``names`` picks
    which parameter set of the model is meant (delay has two).
    """
    if name in OPERATIONS:
        return OPERATIONS[name]
    parts = name.split(".")
    if parts[0] != "solve" or len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in solvers.VARIANTS):
        raise ValueError(f"unknown operation {name!r}")
    model, unknown = parts[1], parts[2]
    variant = parts[3] if len(parts) == 4 else "approx"
    if model not in solvers.MODEL_PARAMS:
        raise ValueError(f"unknown model {model!r} in operation {name!r}")
    options = [o for o in solvers.MODEL_PARAMS[model] if unknown in o]
    if not options:
        raise ValueError(f"{model} has no parameter {unknown!r}")
    chosen = options[0]
    if names is not None:
        given = set(names) - {"L"}
        for o in options:
            if set(o) - {unknown} == given:
                chosen = o
    params = ("L",) + tuple(p for p in chosen if p != unknown)

    def fn(**kw):
        L = kw.pop("L")
        return solvers.solve(solvers.SolveRequest(model, unknown, L, kw, variant=variant))

    return Operation(name, params, fn)


@dataclass
class Axis:
    name: str
    start: float
    stop: float
    steps: int = 200
    scale: str = "linear"

    def __post_init__(self):
        if self.scale not in ("linear", "log"):
            raise ValueError(f"axis scale must be linear or log, got {self.scale!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"axis steps must be a positive integer, got {self.steps!r}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log axis needs positive bounds")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("axis bounds must be finite")

    def values(self) -> List[float]:
        if self.steps == 1:
            return [float(self.start)]
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, int(self.steps)).tolist()
        return np.linspace(self.start, self.stop, int(self.steps)).tolist()


@dataclass
class Series:
    name: str
    values: List[float]


@dataclass
class SweepSpec:
    operation: str
    axis: Axis
    fixed: Dict[str, float] = field(default_factory=dict)
    series: Optional[Series] = None
    name: Optional[str] = None

    def varied(self) -> List[str]:
        return [self.axis.name] + ([self.series.name] if self.series else [])

    def resolve(self) -> Operation:
        names = list(self.fixed) + self.varied()
        op = resolve_operation(self.operation, names)
        if len(set(names)) != len(names):
            raise ValueError(f"{self.operation}: a parameter is assigned more than once")
        missing = sorted(set(op.params) - set(names))
        unknown = sorted(set(names) - set(op.params))
        if missing or unknown:
            detail = []
            if missing:
                detail.append("missing " + ", ".join(missing))
            if unknown:
                detail.append("unknown " + ", ".join(unknown))
            raise ValueError(f"{self.operation}: " + "; ".join(detail))
        return op

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        data = dict(data)
        axis = Axis(**data.pop("axis"))
        series = data.pop("series", None)
        series = Series(**series) if series else None
        return cls(axis=axis, series=series, **data)


@dataclass
class SweepTable:
    columns: List[str]
    rows: List[List[Optional[float]]]
    provenance: List[str] = field(default_factory=list)

    def column(self, name: str) -> List[Optional[float]]:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


_POINT_ERRORS = (DomainError, NoBracketError, ValueError, ZeroDivisionError, OverflowError)


def run_sweep(spec: SweepSpec) -> SweepTable:
    """Evaluate ``spec.operation`` on the grid, axis-major then series.

    A point that fails evaluation becomes an empty cell; one warning
    summarizes the failures.
    """
    op = spec.resolve()
    series_values = spec.series.values if spec.series else [None]
    rows = []
    failures = []
    for x in spec.axis.values():
        for v in series_values:
            values = dict(spec.fixed)
            values[spec.axis.name] = x
            if spec.series:
                values[spec.series.name] = v
            try:
                y = float(op(values))
            except _POINT_ERRORS as exc:
                failures.append((x, v, exc))
                y = None
            rows.append([x] + ([float(v)] if spec.series else []) + [y])
    if failures:
        x, v, exc = failures[0]
        warnings.warn(
            f"{spec.name or spec.operation}: {len(failures)} of {len(rows)} points failed "
            f"(first at {spec.axis.name}={x!r}: {exc})",
            RuntimeWarning,
            stacklevel=2,
        )
    provenance = [
        f"defense_depth {__version__}",
        "spec: " + json.dumps(spec.to_dict(), sort_keys=True),
    ]
    return SweepTable(spec.varied() + [spec.operation], rows, provenance)


# ---------------------------------------------------------------------------
# Presets


def figure_presets(steps: int = 200) -> List[SweepSpec]:
    """Sweeps behind the published figures; time is measured in units of ``tau``."""
    L = 0.001
    lin = lambda name, a, b: Axis(name, a, b, steps, "linear")
    log = lambda name, a, b: Axis(name, a, b, steps, "log")
    delay = {"lambda": 1.0, "tau": 1.0}
    horizon = dict(delay, N_a=1000.0, T=1e5)
    return [
        SweepSpec("blockade_attacks_exact", lin("n", 1, 40), {"L": L, "p": 0.43}, name="fig1a"),
        SweepSpec("blockade_attacks_exact", lin("n", 1, 40), {"L": L},
                  Series("p", [0.3, 0.43, 0.6]), name="fig1b"),
        SweepSpec("blockade_attacks_exact", lin("p", 0.05, 0.95), {"L": L},
                  Series("n", [5.0, 10.0, 20.0]), name="fig1c"),
        SweepSpec("blockade_likelihood", lin("n", 1, 40), {"p": 0.43},
                  Series("N", [5.0, 5e3, 5e6]), name="fig1d"),
        SweepSpec("blockade_hardness", log("N", 1, 1e12), {"L": L},
                  Series("n", [5.0, 10.0, 20.0, 40.0]), name="fig2"),
        SweepSpec("solve.delay.N", lin("n", 1, 30), dict(delay, L=L), name="fig3a"),
        SweepSpec("compensating_speedup", lin("n", 20, 40), dict(horizon, L=L), name="fig3b"),
        SweepSpec("solve.delay.n", lin("N", 1e3, 1e12), dict(delay, L=L), name="fig3c"),
        SweepSpec("solve.delay.n", lin("s", 1, 1e6), dict(horizon, L=L), name="fig3d"),
        SweepSpec("solve.delay.n", log("N", 1e3, 1e12), dict(delay, L=L), name="fig3e"),
        SweepSpec("solve.delay.n", log("s", 1, 1e6), dict(horizon, L=L), name="fig3f"),
        SweepSpec("solve.delay.n", lin("lambda", 0.5, 2.0), {"tau": 1.0, "L": L},
                  Series("N", [1e3, 1e6, 1e9]), name="fig4a"),
        SweepSpec("solve.delay.n", log("lambda", 0.5, 2.0), {"tau": 1.0, "L": L},
                  Series("N", [1e3, 1e6, 1e9]), name="fig4b"),
        SweepSpec("solve.delay.N", lin("lambda", 0.5, 1.2), {"tau": 1.0, "L": L},
                  Series("n", [10.0, 20.0, 25.0]), name="fig4c"),
        SweepSpec("solve.delay.N", log("lambda", 0.5, 1.2), {"tau": 1.0, "L": L},
                  Series("n", [10.0, 20.0, 25.0]), name="fig4d"),
    ]


def get_preset(name: str, steps: int = 200) -> SweepSpec:
    for spec in figure_presets(steps):
        if spec.name == name:
            return spec
    raise ValueError(f"unknown preset {name!r}; available: {', '.join(s.name for s in figure_presets(1))}")


# ---------------------------------------------------------------------------
# Emission


def format_float(x: Optional[float]) -> str:
    return "" if x is None else format(x, ".17g")


def emit(table: SweepTable, fmt: str = "csv") -> bytes:
    """Serialize a table. CSV carries ``#`` provenance lines before the header."""
    if fmt == "csv":
        buf = io.StringIO(newline="")
        for line in table.provenance:
            buf.write(f"# {line}\r\n")
        writer = csv.writer(buf)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_float(x) for x in row])
        return buf.getvalue().encode("utf-8")
    if fmt in ("json", "jsonl", "json-lines"):
        lines = [json.dumps(dict(zip(table.columns, row)), allow_nan=True) for row in table.rows]
        return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    raise ValueError(f"unknown format {fmt!r}; expected csv or json-lines")


def load_csv(data: bytes) -> SweepTable:
    """Parse the CSV produced by :func:`emit` back into a table."""
    text = data.decode("utf-8")
    provenance = []
    body = []
    for line in text.splitlines(keepends=True):
        if line.startswith("#") and not body:
            provenance.append(line[1:].strip())
        else:
            body.append(line)
    reader = csv.reader(io.StringIO("".join(body), newline=""))
    columns = next(reader)
    rows = [[float(x) if x != "" else None for x in row] for row in reader]
    return SweepTable(columns, rows, provenance)
