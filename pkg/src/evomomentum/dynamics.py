"""Replicator and projection dynamics with Polyak or Nesterov momentum.

The discrete maps are written in time-scale form::

    z' = beta * z + F(x)          (Polyak)
    z' = beta * z + F(x + beta*z) (Nesterov)
    x' = x + alpha * z'

with ``z`` starting at zero. ``F`` is either the replicator field
``x_i (f_i - x.f)`` or the projection field ``f_i - mean(f)``, optionally
divided by the corresponding mean fitness.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .core import BETA_SINGULARITY_TOL, MatrixLandscape, SimplexPoint, fitness, snap_to_simplex
from .exceptions import BetaSingularity, NearZeroMeanFitness, StateLeftSimplex
from .lyapunov import lyapunov_evaluator

MEAN_FITNESS_FLOOR = 1e-9

Field = Callable[[np.ndarray], np.ndarray]


class DynamicKind(str, enum.Enum):
    REPLICATOR = "replicator"
    PROJECTION = "projection"


class MomentumKind(str, enum.Enum):
    NONE = "none"
    POLYAK = "polyak"
    NESTEROV = "nesterov"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    MAX_STEPS_REACHED = "MaxStepsReached"


@dataclass(frozen=True)
class DynamicsConfig:
    """Parameters of a discrete run.

    ``boundary_delta`` must also be below ``1/n``; that part is checked by
    :func:`iterate` once the dimension is known.
    """

    dynamic: DynamicKind = DynamicKind.REPLICATOR
    momentum: MomentumKind = MomentumKind.POLYAK
    learning_rate: float = 0.005
    beta: float = 0.0
    normalize_by_mean: bool = False
    max_steps: int = 10_000_000
    convergence_epsilon: float = 1e-6
    boundary_delta: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "dynamic", DynamicKind(self.dynamic))
        object.__setattr__(self, "momentum", MomentumKind(self.momentum))
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta!r}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps!r}")
        if not self.convergence_epsilon > 0:
            raise ValueError(f"convergence_epsilon must be positive, got {self.convergence_epsilon!r}")
        if not 0 < self.boundary_delta < 1:
            raise ValueError(f"boundary_delta must lie in (0, 1/n), got {self.boundary_delta!r}")

    def as_dict(self) -> dict:
        return {
            "dynamic": self.dynamic.value,
            "momentum": self.momentum.value,
            "learning_rate": float(self.learning_rate),
            "beta": float(self.beta),
            "normalize_by_mean": bool(self.normalize_by_mean),
            "max_steps": int(self.max_steps),
            "convergence_epsilon": float(self.convergence_epsilon),
            "boundary_delta": float(self.boundary_delta),
        }


@dataclass(frozen=True)
class MomentumState:
    """Velocity carried between discrete steps."""

    z: np.ndarray

    def __post_init__(self):
        arr = np.array(self.z, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "z", arr)

    @classmethod
    def zeros(cls, n: int) -> MomentumState:
        return cls(np.zeros(n))

    def __array__(self, dtype=None, copy=None):
        return self.z if dtype is None else self.z.astype(dtype)


class TrajectoryRecord(NamedTuple):
    step_index: int
    time: float
    state: np.ndarray
    lyapunov_kl: Optional[float]
    lyapunov_euclidean: Optional[float]


@dataclass
class Trajectory:
    """Recorded states of one run.

    Lyapunov columns hold NaN where a value is absent (no reference given,
    or the final state of a diverged run left the simplex).
    """

    steps: np.ndarray
    times: np.ndarray
    states: np.ndarray
    kl: np.ndarray
    euclidean: np.ndarray
    status: Status
    meta: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.steps)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_step(self) -> int:
        return int(self.steps[-1])

    @property
    def records(self) -> list[TrajectoryRecord]:
        out = []
        for k in range(len(self.steps)):
            kl = self.kl[k]
            eu = self.euclidean[k]
            out.append(
                TrajectoryRecord(
                    int(self.steps[k]),
                    float(self.times[k]),
                    self.states[k],
                    None if math.isnan(kl) else float(kl),
                    None if math.isnan(eu) else float(eu),
                )
            )
        return out

    @classmethod
    def empty(cls, n: int, status: Status = Status.MAX_STEPS_REACHED) -> Trajectory:
        return cls(
            steps=np.zeros(0, dtype=np.int64),
            times=np.zeros(0),
            states=np.zeros((0, n)),
            kl=np.zeros(0),
            euclidean=np.zeros(0),
            status=Status(status),
        )


# -- vector fields ---------------------------------------------------------


def _replicator_kernel(A, x, normalize):
    f = A @ x
    mean = x @ f
    out = x * (f - mean)
    if normalize:
        if abs(mean) <= MEAN_FITNESS_FLOOR:
            raise NearZeroMeanFitness(
                f"mean fitness {mean!r} is too close to zero to normalize; use normalize=False"
            )
        out = out / mean
    return out


def _projection_kernel(A, x, normalize):
    f = A @ x
    mean = f.mean()
    out = f - mean
    if normalize:
        if abs(mean) <= MEAN_FITNESS_FLOOR:
            raise NearZeroMeanFitness(
                f"average fitness {mean!r} is too close to zero to normalize; use normalize=False"
            )
        out = out / mean
    return out


def replicator_field(landscape: MatrixLandscape, x, normalize: bool = False) -> np.ndarray:
    """Replicator field ``x_i (f_i - x.f)``, divided by ``x.f`` if normalizing.

    Raises :class:`NearZeroMeanFitness` when normalizing with ``|x.f| <= 1e-9``.
    """
    xv = np.asarray(x, dtype=np.float64)
    fitness(landscape, xv)  # dimension check
    return _replicator_kernel(landscape.matrix, xv, normalize)


def projection_field(landscape: MatrixLandscape, x, normalize: bool = False) -> np.ndarray:
    """Orthogonal projection field ``f_i - mean(f)`` (unweighted mean)."""
    xv = np.asarray(x, dtype=np.float64)
    fitness(landscape, xv)
    return _projection_kernel(landscape.matrix, xv, normalize)


def make_field(dynamic, landscape: MatrixLandscape, normalize: bool = False) -> Field:
    """Bind a landscape into a one-argument field ``x -> F(x)`` on float64 arrays."""
    dynamic = DynamicKind(dynamic)
    kernel = _replicator_kernel if dynamic is DynamicKind.REPLICATOR else _projection_kernel
    A = landscape.matrix
    normalize = bool(normalize)

    def field(x):
        return kernel(A, x, normalize)

    return field


# -- discrete steppers -----------------------------------------------------


def euclidean_gd_step(field: Field, x, alpha: float) -> np.ndarray:
    """Plain step ``x + alpha * F(x)``; no simplex checks."""
    _check_alpha(alpha)
    xv = np.asarray(x, dtype=np.float64)
    return xv + alpha * field(xv)


def _polyak_raw(field, x, z, alpha, beta):
    z_new = beta * z + field(x)
    return x + alpha * z_new, z_new


def _nesterov_raw(field, x, z, alpha, beta):
    z_new = beta * z + field(x + beta * z)
    return x + alpha * z_new, z_new


def _gd_raw(field, x, z, alpha, beta):
    return x + alpha * field(x), z


def _finish_step(x_new: np.ndarray, z_new: np.ndarray):
    if (x_new < 0.0).any():
        raise StateLeftSimplex(
            f"step produced a negative coordinate: {x_new.tolist()}", state=x_new, momentum=z_new
        )
    return SimplexPoint(x_new), MomentumState(z_new)


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")


def polyak_step(field: Field, x, z, alpha: float, beta: float):
    """One heavy-ball step. Returns ``(x', z')``.

    Raises :class:`StateLeftSimplex` if ``x'`` has a negative coordinate.
    """
    _check_alpha(alpha)
    x_new, z_new = _polyak_raw(
        field, np.asarray(x, dtype=np.float64), np.asarray(z, dtype=np.float64), alpha, beta
    )
    return _finish_step(x_new, z_new)


def nesterov_step(field: Field, x, z, alpha: float, beta: float):
    """One look-ahead step: the field is evaluated at ``x + beta*z``.

    The look-ahead point is not projected back to the simplex.
    """
    _check_alpha(alpha)
    x_new, z_new = _nesterov_raw(
        field, np.asarray(x, dtype=np.float64), np.asarray(z, dtype=np.float64), alpha, beta
    )
    return _finish_step(x_new, z_new)


_KERNELS = {
    MomentumKind.NONE: _gd_raw,
    MomentumKind.POLYAK: _polyak_raw,
    MomentumKind.NESTEROV: _nesterov_raw,
}


def _no_lyapunov(x):
    return math.nan, math.nan


class _Recorder:
    def __init__(self):
        self.steps, self.states, self.kl, self.eu = [], [], [], []

    def add(self, k, x, kl, eu):
        self.steps.append(k)
        self.states.append(np.array(x, dtype=np.float64))
        self.kl.append(kl)
        self.eu.append(eu)

    def build(self, n, time_step, status, meta):
        steps = np.asarray(self.steps, dtype=np.int64)
        states = np.asarray(self.states, dtype=np.float64).reshape(-1, n)
        return Trajectory(
            steps=steps,
            times=steps * time_step,
            states=states,
            kl=np.asarray(self.kl, dtype=np.float64),
            euclidean=np.asarray(self.eu, dtype=np.float64),
            status=status,
            meta=meta,
        )


def iterate(
    config: DynamicsConfig,
    landscape: MatrixLandscape,
    x0,
    reference=None,
    *,
    stop_at_convergence: bool = True,
    record_every: int = 1,
) -> Trajectory:
    """Run the configured discrete dynamic from ``x0`` with ``z0 = 0``.

    Convergence is tested on KL divergence for the replicator dynamic and on
    half squared Euclidean distance for the projection dynamic, and only when
    a ``reference`` is given. A run is ``Diverged`` as soon as a coordinate
    drops to ``boundary_delta`` or below, or a step leaves the simplex; in
    the latter case the offending vector is kept as the last record, with
    both Lyapunov values absent.

    ``record_every`` thins the stored records; the first and last states are
    always kept. ``stop_at_convergence=False`` runs the full ``max_steps``.
    """
    x0 = x0 if isinstance(x0, SimplexPoint) else SimplexPoint(x0)
    n = x0.n
    if n != landscape.n:
        raise ValueError(f"x0 has {n} types but the landscape has {landscape.n}")
    if not config.boundary_delta < 1.0 / n:
        raise ValueError(f"boundary_delta must be below 1/n = {1.0 / n!r}")
    if (x0.coords <= config.boundary_delta).any():
        raise ValueError("x0 must be interior (every coordinate above boundary_delta)")
    if reference is not None and not isinstance(reference, SimplexPoint):
        reference = SimplexPoint(reference)
    if reference is not None and reference.n != n:
        raise ValueError("reference and x0 differ in dimension")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")

    field = make_field(config.dynamic, landscape, config.normalize_by_mean)
    kernel = _KERNELS[config.momentum]
    lyap = _no_lyapunov if reference is None else lyapunov_evaluator(reference)
    check = reference is not None and stop_at_convergence
    use_kl = config.dynamic is DynamicKind.REPLICATOR
    alpha = config.learning_rate
    beta = config.beta
    eps = config.convergence_epsilon
    delta = config.boundary_delta
    meta = {"config": config.as_dict()}

    x = x0.coords
    z = np.zeros(n)
    rec = _Recorder()
    kl, eu = lyap(x)
    rec.add(0, x, kl, eu)
    if check and (kl if use_kl else eu) < eps:
        meta["final_momentum"] = z.tolist()
        return rec.build(n, alpha, Status.CONVERGED, meta)

    status = Status.MAX_STEPS_REACHED
    last = config.max_steps
    for k in range(1, last + 1):
        x_new, z = kernel(field, x, z, alpha, beta)
        if (x_new < 0.0).any():
            rec.add(k, x_new, math.nan, math.nan)
            status = Status.DIVERGED
            break
        x = snap_to_simplex(x_new)
        kl, eu = lyap(x)
        if (x <= delta).any():
            status = Status.DIVERGED
        elif check and (kl if use_kl else eu) < eps:
            status = Status.CONVERGED
        if status is not Status.MAX_STEPS_REACHED or k % record_every == 0 or k == last:
            rec.add(k, x, kl, eu)
        if status is not Status.MAX_STEPS_REACHED:
            break
    meta["final_momentum"] = z.tolist()
    return rec.build(n, alpha, status, meta)


# -- continuous dynamic ----------------------------------------------------


def momentum_replicator_rhs(landscape: MatrixLandscape, beta: float) -> Field:
    """Right-hand side ``x_i (f_i - x.f) / (1 - beta)`` of the continuous dynamic."""
    if abs(1.0 - beta) < BETA_SINGULARITY_TOL:
        raise BetaSingularity(f"beta={beta!r}: the coefficient 1/(1-beta) is undefined")
    scale = 1.0 / (1.0 - beta)

    def rhs(x):
        return scale * replicator_field(landscape, x)

    return rhs


def rk4_step(rhs: Field, x: np.ndarray, h: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step for an autonomous system."""
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h * k2)
    k4 = rhs(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def continuous_integrate(
    landscape: MatrixLandscape,
    x0,
    beta: float,
    T: float,
    h: float = 0.01,
    *,
    reference=None,
    boundary_delta: float = 1e-9,
    record_every: int = 1,
) -> Trajectory:
    """Integrate the continuous momentum replicator dynamic on ``[0, T]``.

    Uses fixed-step RK4. If ``T/h`` is not an integer the step is shrunk so
    the last step lands on ``T``. Each state's coordinate sum is reset to one
    after the step. A run that reaches ``T`` ends with status
    ``MaxStepsReached``; touching the boundary ends it as ``Diverged``.
    """
    rhs = momentum_replicator_rhs(landscape, beta)
    if not (h > 0 and T > 0):
        raise ValueError("T and h must be positive")
    if h > T:
        raise ValueError(f"step h={h!r} exceeds horizon T={T!r}")
    n_steps = int(round(T / h))
    if abs(n_steps * h - T) > 1e-9 * max(1.0, T):
        n_steps = int(math.ceil(T / h))
    h_eff = T / n_steps

    x = x0 if isinstance(x0, SimplexPoint) else SimplexPoint(x0)
    if x.n != landscape.n:
        raise ValueError(f"x0 has {x.n} types but the landscape has {landscape.n}")
    if reference is not None and not isinstance(reference, SimplexPoint):
        reference = SimplexPoint(reference)

    lyap = _no_lyapunov if reference is None else lyapunov_evaluator(reference)
    rec = _Recorder()
    kl, eu = lyap(x.coords)
    rec.add(0, x.coords, kl, eu)
    xv = np.array(x.coords)
    status = Status.MAX_STEPS_REACHED
    for k in range(1, n_steps + 1):
        xv = rk4_step(rhs, xv, h_eff)
        xv = xv / xv.sum()
        if np.any(xv <= boundary_delta):
            status = Status.DIVERGED
            if np.any(xv < 0.0):
                rec.add(k, xv, math.nan, math.nan)
                break
        kl, eu = lyap(xv)
        if status is Status.DIVERGED or k % record_every == 0 or k == n_steps:
            rec.add(k, xv, kl, eu)
        if status is Status.DIVERGED:
            break
    meta = {"beta": float(beta), "T": float(T), "h": h_eff}
    return rec.build(x.n, h_eff, status, meta)
