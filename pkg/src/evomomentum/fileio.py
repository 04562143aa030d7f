"""Run configuration files, trajectory CSV and summary JSON."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .core import BETA_SINGULARITY_TOL, MatrixLandscape, SimplexPoint, make_cyclic_matrix
from .dynamics import DynamicsConfig, Trajectory
from .exceptions import ParseError, ValidationError
from .serialization import canonical_json, config_digest, format_real

DYNAMICS = ("replicator", "projection", "continuous")
MOMENTA = ("none", "polyak", "nesterov")
FORMATS = ("csv", "json", "svg")

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to run and serialize one simulation."""

    x0: tuple
    a: Optional[float] = None
    b: Optional[float] = None
    matrix: Optional[tuple] = None
    dynamic: str = "replicator"
    momentum: str = "none"
    alpha: float = 0.005
    beta: float = 0.0
    normalize: bool = False
    reference: Optional[tuple] = None
    max_steps: int = 10_000_000
    epsilon: float = 1e-6
    boundary_delta: float = 1e-9
    horizon: float = 50.0
    h: float = 0.01
    seed: int = 0
    output: str = "run"
    formats: tuple = FORMATS
    record_every: int = 1

    def landscape(self) -> MatrixLandscape:
        if self.matrix is not None:
            return MatrixLandscape(self.matrix)
        return make_cyclic_matrix(self.a, self.b)

    def reference_point(self) -> SimplexPoint:
        if self.reference is None:
            return SimplexPoint.barycenter(len(self.x0))
        return SimplexPoint(self.reference)

    def dynamics_config(self) -> DynamicsConfig:
        if self.dynamic == "continuous":
            raise ValueError("continuous runs have no discrete configuration")
        return DynamicsConfig(
            dynamic=self.dynamic,
            momentum=self.momentum,
            learning_rate=self.alpha,
            beta=self.beta,
            normalize_by_mean=self.normalize,
            max_steps=self.max_steps,
            convergence_epsilon=self.epsilon,
            boundary_delta=self.boundary_delta,
        )

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = [list(v) if isinstance(v, tuple) else v for v in value]
            out[f.name] = value
        return out

    def digest(self) -> str:
        return config_digest(self.as_dict())

    def to_config_text(self) -> str:
        """Render as a ``key = value`` file that :func:`parse_config` reads back exactly."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_render_value(f.name, value)}")
        return "\n".join(lines) + "\n"


def _render_value(key, value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if key == "matrix":
        return "; ".join(", ".join(repr(float(v)) for v in row) for row in value)
    if isinstance(value, tuple):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return str(value)


# -- value coercion --------------------------------------------------------


def _real(key, text) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ValidationError(key, f"expected a real number, got {text!r}") from None
    if not math.isfinite(value):
        raise ValidationError(key, f"must be finite, got {text!r}")
    return value


def _integer(key, text) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        value = _real(key, text)
        if value != int(value):
            raise ValidationError(key, f"expected an integer, got {text!r}") from None
        return int(value)


def _vector(key, text) -> tuple:
    if isinstance(text, (list, tuple, np.ndarray)):
        items = list(text)
    else:
        items = [t for t in str(text).replace(" ", "").split(",") if t]
    if not items:
        raise ValidationError(key, "empty vector")
    return tuple(_real(key, t) for t in items)


def _matrix(key, text) -> tuple:
    if isinstance(text, (list, tuple, np.ndarray)):
        rows = [tuple(_real(key, v) for v in row) for row in text]
    else:
        rows = [_vector(key, r) for r in str(text).split(";") if r.strip()]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValidationError(key, "matrix must be square (rows separated by ';')")
    return tuple(rows)


def _boolean(key, text) -> bool:
    if isinstance(text, bool):
        return text
    word = str(text).strip().lower()
    if word in _TRUE:
        return True
    if word in _FALSE:
        return False
    raise ValidationError(key, f"expected true/false, got {text!r}")


def _choice(key, text, options) -> str:
    word = str(text).strip().lower()
    if word not in options:
        raise ValidationError(key, f"must be one of {', '.join(options)}, got {text!r}")
    return word


def _formats(key, text) -> tuple:
    if isinstance(text, (list, tuple)):
        items = [str(t).strip().lower() for t in text]
    else:
        items = [t.strip().lower() for t in str(text).split(",") if t.strip()]
    if not items:
        raise ValidationError(key, "at least one output format is required")
    for item in items:
        if item not in FORMATS:
            raise ValidationError(key, f"unknown format {item!r}; choose from {', '.join(FORMATS)}")
    # canonical order keeps dumps stable
    return tuple(f for f in FORMATS if f in items)


_COERCE = {
    "a": _real,
    "b": _real,
    "matrix": _matrix,
    "dynamic": lambda k, v: _choice(k, v, DYNAMICS),
    "momentum": lambda k, v: _choice(k, v, MOMENTA),
    "alpha": _real,
    "beta": _real,
    "normalize": _boolean,
    "x0": _vector,
    "reference": _vector,
    "max_steps": _integer,
    "epsilon": _real,
    "boundary_delta": _real,
    "horizon": _real,
    "h": _real,
    "seed": _integer,
    "output": lambda k, v: str(v).strip(),
    "formats": _formats,
    "record_every": _integer,
}

CONFIG_KEYS = tuple(_COERCE)


def build_run_spec(raw: dict) -> RunSpec:
    """Coerce and validate raw key/value pairs into a :class:`RunSpec`.

    Raises :class:`ValidationError` naming the first offending field.
    """
    for key in raw:
        if key not in _COERCE:
            raise ValidationError(key, "unknown key")
    values = {k: _COERCE[k](k, v) for k, v in raw.items() if v is not None}

    dynamic = values.get("dynamic", "replicator")
    beta = values.get("beta", 0.0)
    if dynamic == "continuous" and abs(1.0 - beta) < BETA_SINGULARITY_TOL:
        raise ValidationError("beta", "beta = 1 is singular for the continuous dynamic (1/(1-beta) undefined)")

    has_ab = "a" in values or "b" in values
    if has_ab and "matrix" in values:
        raise ValidationError("matrix", "give either a/b or matrix, not both")
    if has_ab:
        for key in ("a", "b"):
            if key not in values:
                raise ValidationError(key, "required together with the other cyclic parameter")
        n = 3
    elif "matrix" in values:
        n = len(values["matrix"])
        if n < 2:
            raise ValidationError("matrix", "needs at least two types")
    else:
        raise ValidationError("landscape", "give a and b, or an explicit matrix")

    if values.get("alpha", 1.0) <= 0:
        raise ValidationError("alpha", "learning rate must be positive")
    if "x0" not in values:
        raise ValidationError("x0", "initial state is required")

    delta = values.get("boundary_delta", 1e-9)
    if not 0 < delta < 1.0 / n:
        raise ValidationError("boundary_delta", f"must lie in (0, 1/{n})")
    for key in ("x0", "reference"):
        if key not in values:
            continue
        if len(values[key]) != n:
            raise ValidationError(key, f"expected {n} coordinates, got {len(values[key])}")
        try:
            SimplexPoint(values[key])
        except ValueError as exc:
            raise ValidationError(key, str(exc)) from None
    if any(v <= delta for v in values["x0"]):
        raise ValidationError("x0", "every coordinate must exceed boundary_delta")
    if values.get("max_steps", 1) < 1:
        raise ValidationError("max_steps", "must be at least 1")
    if values.get("epsilon", 1.0) <= 0:
        raise ValidationError("epsilon", "must be positive")
    if values.get("horizon", 1.0) <= 0:
        raise ValidationError("horizon", "must be positive")
    if values.get("h", 1.0) <= 0:
        raise ValidationError("h", "must be positive")
    if values.get("h", 0.01) > values.get("horizon", 50.0):
        raise ValidationError("h", "step exceeds the horizon")
    if values.get("record_every", 1) < 1:
        raise ValidationError("record_every", "must be at least 1")
    if "svg" in values.get("formats", FORMATS) and n != 3:
        raise ValidationError("formats", "svg output needs exactly three types")
    if values.get("normalize") and dynamic == "continuous":
        raise ValidationError("normalize", "not available for the continuous dynamic")
    return RunSpec(**values)


def parse_config(path) -> RunSpec:
    """Read a ``key = value`` configuration file (``#`` starts a comment)."""
    raw = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(lineno, f"expected 'key = value', got {line.strip()!r}")
        key, _, value = body.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not key:
            raise ParseError(lineno, "missing key")
        if key not in _COERCE:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in raw:
            raise ParseError(lineno, f"duplicate key {key!r}")
        raw[key] = value.strip()
    return build_run_spec(raw)


# -- writers ---------------------------------------------------------------


def _cell(value) -> str:
    value = float(value)
    return "" if math.isnan(value) else format_real(value)


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Write ``step,time,x1..xn,kl,euclidean`` rows and a ``# status=`` trailer."""
    n = trajectory.states.shape[1]
    lines = [",".join(["step", "time"] + [f"x{i + 1}" for i in range(n)] + ["kl", "euclidean"])]
    for k in range(len(trajectory)):
        cells = [str(int(trajectory.steps[k])), _cell(trajectory.times[k])]
        cells += [_cell(v) for v in trajectory.states[k]]
        cells += [_cell(trajectory.kl[k]), _cell(trajectory.euclidean[k])]
        lines.append(",".join(cells))
    lines.append(f"# status={trajectory.status.value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path):
    """Parse a file written by :func:`write_trajectory_csv`.

    Returns ``(steps, times, states, kl, euclidean, status)``; absent values
    come back as NaN.
    """
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    n = len(header) - 4
    status = lines[-1].split("=", 1)[1]
    rows = [line.split(",") for line in lines[1:-1]]

    def col(row, i):
        return math.nan if row[i] == "" else float(row[i])

    steps = np.array([int(r[0]) for r in rows], dtype=np.int64)
    times = np.array([col(r, 1) for r in rows])
    states = np.array([[col(r, 2 + i) for i in range(n)] for r in rows]).reshape(-1, n)
    kl = np.array([col(r, 2 + n) for r in rows])
    eu = np.array([col(r, 3 + n) for r in rows])
    return steps, times, states, kl, eu, status


def write_summary_json(result, path) -> None:
    """Canonical JSON (sorted keys, 17-digit reals) of a result object or dict."""
    payload = result if isinstance(result, dict) else result.as_dict()
    Path(path).write_text(canonical_json(payload) + "\n")


def trajectory_summary(trajectory: Trajectory, spec: RunSpec) -> dict:
    final_kl = trajectory.kl[-1] if len(trajectory) else math.nan
    final_eu = trajectory.euclidean[-1] if len(trajectory) else math.nan
    return {
        "status": trajectory.status.value,
        "final_step": trajectory.final_step if len(trajectory) else 0,
        "final_time": float(trajectory.times[-1]) if len(trajectory) else 0.0,
        "final_state": trajectory.final_state.tolist() if len(trajectory) else [],
        "final_kl": None if math.isnan(final_kl) else float(final_kl),
        "final_euclidean": None if math.isnan(final_eu) else float(final_eu),
        "records": len(trajectory),
        "config_digest": spec.digest(),
        "config": spec.as_dict(),
    }
