"""Parameterized experiments: step-ratio sweeps, monotonicity scans, cycling verdicts.

The ``*_landscape`` helpers and the scenario wrappers at the bottom bundle
the parameter sets used by the acceptance suite. Unless told otherwise they
start from :data:`DEFAULT_X0`, an interior state well away from the barycenter.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import MatrixLandscape, SimplexPoint, make_cyclic_matrix
from .dynamics import (
    DynamicKind,
    DynamicsConfig,
    MomentumKind,
    Status,
    Trajectory,
    iterate,
)
from .exceptions import DidNotConverge
from .lyapunov import kl_time_derivative
from .serialization import config_digest

DEFAULT_X0 = (0.8, 0.15, 0.05)
MONOTONE_TOL = 1e-12
SLOPE_TOL = 1e-9


class SweepRow(NamedTuple):
    beta: float
    steps: int
    ratio: float
    predicted: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    base_steps: int
    config_digest: str

    def as_dict(self) -> dict:
        return {
            "rows": [row._asdict() for row in self.rows],
            "base_steps": self.base_steps,
            "config_digest": self.config_digest,
        }

    @property
    def ratios(self) -> dict:
        return {row.beta: row.ratio for row in self.rows}


class Classification(str, enum.Enum):
    CONVERGING = "Converging"
    DIVERGING = "Diverging"
    CYCLING = "Cycling"


@dataclass(frozen=True)
class CyclingVerdict:
    classification: Classification
    kl_start: float
    kl_end: float
    kl_trend_slope: float
    steps_run: int = 0
    status: Status = Status.MAX_STEPS_REACHED
    config_digest: str = ""

    def as_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "kl_start": self.kl_start,
            "kl_end": self.kl_end,
            "kl_trend_slope": self.kl_trend_slope,
            "steps_run": self.steps_run,
            "status": self.status.value,
            "config_digest": self.config_digest,
        }


class MonotonicityRow(NamedTuple):
    beta: float
    monotone: bool
    first_violation_step: Optional[int]


def _as_point(x) -> SimplexPoint:
    return x if isinstance(x, SimplexPoint) else SimplexPoint(x)


def _selected_series(config: DynamicsConfig, trajectory: Trajectory) -> np.ndarray:
    if config.dynamic is DynamicKind.REPLICATOR:
        return trajectory.kl
    return trajectory.euclidean


def run_digest(config: DynamicsConfig, landscape: MatrixLandscape, x0, reference=None, **extra) -> str:
    payload = {
        "config": config.as_dict(),
        "matrix": landscape.matrix.tolist(),
        "x0": list(_as_point(x0)),
        "reference": None if reference is None else list(_as_point(reference)),
    }
    payload.update(extra)
    return config_digest(payload)


def convergence_time(config: DynamicsConfig, landscape: MatrixLandscape, x0, reference) -> int:
    """Index of the first step whose Lyapunov value drops below the threshold.

    Raises :class:`DidNotConverge` (carrying the terminal status) otherwise.
    """
    traj = iterate(config, landscape, x0, reference, record_every=config.max_steps)
    if traj.status is not Status.CONVERGED:
        raise DidNotConverge(
            f"run ended {traj.status.value} after {traj.final_step} steps (beta={config.beta!r})",
            status=traj.status,
            beta=config.beta,
        )
    return traj.final_step


def _steps_for_beta(args):
    base, landscape, x0, reference, beta = args
    config = dataclasses.replace(base, beta=float(beta))
    try:
        return convergence_time(config, landscape, x0, reference)
    except DidNotConverge as exc:
        exc.beta = float(beta)
        raise


def _map(fn, items, max_workers):
    if max_workers is None or max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        # map() yields in submission order, so row order never depends on timing
        return list(pool.map(fn, items))


def beta_sweep_ratio(
    base: DynamicsConfig,
    landscape: MatrixLandscape,
    x0,
    reference,
    betas: Sequence[float],
    *,
    max_workers: Optional[int] = None,
) -> SweepResult:
    """Convergence steps for each beta, relative to the momentum-free run.

    The beta = 0 baseline is always computed; it only appears as a row if
    ``0`` is among ``betas``.
    """
    betas = [float(b) for b in betas]
    if any(not b < 1.0 for b in betas):
        raise ValueError("every beta must be below 1")
    x0 = _as_point(x0)
    reference = _as_point(reference)
    todo = [0.0] + [b for b in betas if b != 0.0]
    steps = _map(_steps_for_beta, [(base, landscape, x0, reference, b) for b in todo], max_workers)
    by_beta = dict(zip(todo, steps))
    base_steps = by_beta[0.0]
    rows = []
    for b in betas:
        s = by_beta[b]
        if base_steps > 0:
            ratio = s / base_steps
        else:
            ratio = 1.0 if s == 0 else math.inf
        rows.append(SweepRow(b, int(s), float(ratio), 1.0 - b))
    digest = run_digest(
        dataclasses.replace(base, beta=0.0), landscape, x0, reference, betas=betas, kind="beta_sweep"
    )
    return SweepResult(rows=tuple(rows), base_steps=int(base_steps), config_digest=digest)


def first_increase(values: np.ndarray, tol: float = MONOTONE_TOL) -> Optional[int]:
    """Index of the first entry exceeding its predecessor by more than ``tol``."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    rises = np.flatnonzero(np.diff(v) > tol)
    return int(rises[0]) + 1 if rises.size else None


def monotonicity_scan(
    base: DynamicsConfig,
    landscape: MatrixLandscape,
    x0,
    reference,
    betas: Sequence[float],
) -> list[MonotonicityRow]:
    """Whether the Lyapunov series is non-increasing over each whole run."""
    if base.momentum is MomentumKind.NONE:
        raise ValueError("monotonicity_scan needs Polyak or Nesterov momentum")
    rows = []
    for b in betas:
        config = dataclasses.replace(base, beta=float(b))
        traj = iterate(config, landscape, x0, reference)
        idx = first_increase(_selected_series(config, traj))
        step = None if idx is None else int(traj.steps[idx])
        rows.append(MonotonicityRow(float(b), idx is None, step))
    return rows


def window_slope(steps: np.ndarray, values: np.ndarray, window: int) -> float:
    """Least-squares slope (per step) through consecutive window means."""
    m = len(values) // window
    if m >= 2:
        cut = m * window
        xs = steps[:cut].reshape(m, window).mean(axis=1)
        ys = values[:cut].reshape(m, window).mean(axis=1)
        return float(np.polyfit(xs, ys, 1)[0])
    span = steps[-1] - steps[0]
    return float((values[-1] - values[0]) / span) if span > 0 else 0.0


def classify_cycling(
    config: DynamicsConfig,
    landscape: MatrixLandscape,
    x0,
    total_steps: int,
    window: int,
    slope_tol: float = SLOPE_TOL,
) -> CyclingVerdict:
    """Classify a zero-sum run as converging, diverging or cycling.

    Runs ``total_steps`` steps (or until the run diverges) and fits a line
    through window-averaged KL divergence from the barycenter. A diverged run
    is always ``Diverging``.
    """
    if not landscape.is_skew_symmetric():
        raise ValueError("classify_cycling needs a zero-sum (skew-symmetric) landscape")
    if window < 1:
        raise ValueError("window must be at least 1")
    reference = SimplexPoint.barycenter(landscape.n)
    run_config = dataclasses.replace(config, max_steps=int(total_steps))
    traj = iterate(run_config, landscape, x0, reference, stop_at_convergence=False)
    finite = np.isfinite(traj.kl)
    steps = traj.steps[finite]
    kl = traj.kl[finite]
    slope = window_slope(steps.astype(np.float64), kl, window)
    if traj.status is Status.DIVERGED or slope > slope_tol:
        label = Classification.DIVERGING
    elif slope < -slope_tol:
        label = Classification.CONVERGING
    else:
        label = Classification.CYCLING
    return CyclingVerdict(
        classification=label,
        kl_start=float(kl[0]),
        kl_end=float(kl[-1]),
        kl_trend_slope=slope,
        steps_run=traj.final_step,
        status=traj.status,
        config_digest=run_digest(
            run_config, landscape, x0, reference, window=int(window), kind="classify_cycling"
        ),
    )


def random_interior_points(n: int, samples: int, seed: int) -> np.ndarray:
    """Uniform points on the open simplex from normalized exponentials."""
    rng = np.random.default_rng(seed)
    e = rng.exponential(size=(samples, n))
    return e / e.sum(axis=1, keepdims=True)


def kl_derivative_table(landscape: MatrixLandscape, reference, betas, samples: int, seed: int):
    """``kl_time_derivative`` at seeded random points for beta = 0 and each beta.

    Returns ``(points, base, {beta: values})``.
    """
    pts = random_interior_points(landscape.n, samples, seed)
    base = np.array([kl_time_derivative(landscape, reference, p, 0.0) for p in pts])
    table = {
        float(b): np.array([kl_time_derivative(landscape, reference, p, b) for p in pts])
        for b in betas
    }
    return pts, base, table


def scaling_identity_check(landscape: MatrixLandscape, reference, betas, samples: int, seed: int) -> float:
    """Largest relative error of ``dV_beta/dt * (1 - beta) = dV_0/dt`` over samples and betas."""
    if any(abs(1.0 - b) < 1e-9 for b in betas):
        raise ValueError("beta = 1 is excluded")
    _, base, table = kl_derivative_table(landscape, reference, betas, samples, seed)
    worst = 0.0
    denom = np.maximum(np.abs(base), 1e-300)
    for b, vals in table.items():
        err = np.abs(vals * (1.0 - b) - base) / denom
        worst = max(worst, float(err.max(initial=0.0)))
    return worst


# -- named scenarios -------------------------------------------------------


def cyc21_landscape() -> MatrixLandscape:
    return make_cyclic_matrix(2.0, 1.0)


def cyc2m1_landscape() -> MatrixLandscape:
    return make_cyclic_matrix(2.0, -1.0)


def rps_landscape() -> MatrixLandscape:
    return make_cyclic_matrix(1.0, -1.0)


def hawk_dove_landscape() -> MatrixLandscape:
    return make_cyclic_matrix(1.0, 1.0)


def ratio_sweep(
    dynamic=DynamicKind.REPLICATOR,
    momentum=MomentumKind.POLYAK,
    alpha: float = 1e-3,
    betas=(0.1, 0.3, 0.5, 0.7),
    x0=DEFAULT_X0,
    epsilon: float = 1e-6,
    max_workers: Optional[int] = None,
) -> SweepResult:
    """Step-ratio sweep on the ``a = b = 1`` landscape toward the barycenter."""
    config = DynamicsConfig(
        dynamic=dynamic, momentum=momentum, learning_rate=alpha, convergence_epsilon=epsilon
    )
    return beta_sweep_ratio(
        config, hawk_dove_landscape(), x0, SimplexPoint.barycenter(3), betas, max_workers=max_workers
    )


def divergence_run(alpha: float, beta: float = 0.9, x0=DEFAULT_X0) -> Trajectory:
    """Polyak replicator run on the ``a = 2, b = -1`` landscape."""
    config = DynamicsConfig(momentum=MomentumKind.POLYAK, learning_rate=alpha, beta=beta)
    return iterate(config, cyc2m1_landscape(), x0, SimplexPoint.barycenter(3))


def cycling_run(momentum, beta: float, alpha: float = 1 / 200, steps: int = 100_000, window: int = 1000,
                x0=DEFAULT_X0) -> CyclingVerdict:
    """Zero-sum rock-paper-scissors run classified by KL trend."""
    config = DynamicsConfig(momentum=momentum, learning_rate=alpha, beta=beta)
    return classify_cycling(config, rps_landscape(), x0, steps, window)
