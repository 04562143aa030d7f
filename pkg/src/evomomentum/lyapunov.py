"""Divergences used as Lyapunov functions, their rates of change, and ESS checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .core import BETA_SINGULARITY_TOL, MatrixLandscape, SimplexPoint, fitness
from .exceptions import BetaSingularity, DimensionError, NonpositiveArgument, SupportViolation
from .serialization import config_digest

# margins this small (relative to the largest payoff) are treated as exact zeros
MARGIN_ZERO_TOL = 1e-12


def _pair(reference, x):
    r = np.asarray(reference, dtype=np.float64)
    xv = np.asarray(x, dtype=np.float64)
    if r.shape != xv.shape:
        raise DimensionError(f"length mismatch: {r.shape} vs {xv.shape}")
    return r, xv


def _check_support(r, xv, name="x"):
    mask = r > 0
    if np.any(xv[mask] <= 0.0):
        raise SupportViolation(f"{name} vanishes where the reference has mass; divergence is infinite")
    return mask


def kl_divergence(reference, x) -> float:
    """KL divergence ``sum_i r_i log(r_i / x_i)`` in nats.

    Terms with ``r_i = 0`` contribute nothing. Evaluated as
    ``sum r_i (u_i - log1p(u_i)) - (sum x_i - sum r_i)`` over the support,
    with ``u_i = x_i / r_i - 1``, which stays accurate near ``x = r``.
    """
    r, xv = _pair(reference, x)
    mask = _check_support(r, xv)
    return _kl_on_support(r[mask], xv[mask])


def _kl_on_support(rs: np.ndarray, xs: np.ndarray, rs_total=None) -> float:
    if rs_total is None:
        rs_total = rs.sum()
    u = xs / rs - 1.0
    value = float(np.sum(rs * (u - np.log1p(u))) - (xs.sum() - rs_total))
    # the mass correction is pure rounding noise near the reference
    return max(value, 0.0)


def lyapunov_evaluator(reference):
    """Return ``x -> (kl, euclidean)`` with the reference's support precomputed.

    KL is NaN where ``x`` vanishes on the support. Values are bit-identical to
    :func:`kl_divergence` and :func:`euclidean_half_sq`.
    """
    r = np.array(reference, dtype=np.float64)
    mask = r > 0
    full = bool(mask.all())
    rs = r if full else r[mask]
    rs_total = rs.sum()

    def evaluate(x):
        xs = x if full else x[mask]
        kl = math.nan if xs.min() <= 0.0 else _kl_on_support(rs, xs, rs_total)
        d = r - x
        return kl, 0.5 * float(d @ d)

    return evaluate


def kl_divergence_or_nan(reference, x) -> float:
    try:
        return kl_divergence(reference, x)
    except SupportViolation:
        return math.nan


def euclidean_half_sq(reference, x) -> float:
    """Half the squared Euclidean distance."""
    r, xv = _pair(reference, x)
    d = r - xv
    return 0.5 * float(d @ d)


def kl_time_derivative(landscape: MatrixLandscape, reference, x, beta: float = 0.0) -> float:
    """Rate of change of ``KL(reference || x)`` along the continuous momentum replicator.

    Equals ``(x.f - r.f) / (1 - beta)`` with ``f = A x``.
    """
    if abs(1.0 - beta) < BETA_SINGULARITY_TOL:
        raise BetaSingularity(f"beta={beta!r}: the coefficient 1/(1-beta) is undefined")
    r, xv = _pair(reference, x)
    f = fitness(landscape, xv)
    return float(xv @ f - r @ f) / (1.0 - beta)


def euclidean_time_derivative(landscape: MatrixLandscape, reference, x, beta: float = 0.0) -> float:
    """Rate of change of ``0.5 |reference - x|^2`` along the continuous momentum projection dynamic."""
    if abs(1.0 - beta) < BETA_SINGULARITY_TOL:
        raise BetaSingularity(f"beta={beta!r}: the coefficient 1/(1-beta) is undefined")
    r, xv = _pair(reference, x)
    f = fitness(landscape, xv)
    return float((xv - r) @ (f - f.mean())) / (1.0 - beta)


def discrete_lyapunov_quotient(reference, x, x_next, alpha: float) -> float:
    """Difference quotient ``(KL(r || x') - KL(r || x)) / alpha``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    r, xv = _pair(reference, x)
    _, xn = _pair(reference, x_next)
    mask = _check_support(r, xv)
    _check_support(r, xn, "x_next")
    rs, xs, ns = r[mask], xv[mask], xn[mask]
    return -float(np.sum(rs * np.log1p((ns - xs) / xs))) / alpha


def jensen_bound(reference, x, x_next, alpha: float) -> float:
    """``-log(sum_i r_i x'_i / x_i) / alpha``.

    By concavity of the logarithm this never exceeds
    :func:`discrete_lyapunov_quotient`; both agree when ``x' = x`` or when the
    reference is a vertex.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    r, xv = _pair(reference, x)
    _, xn = _pair(reference, x_next)
    mask = _check_support(r, xv)
    rs, xs, ns = r[mask], xv[mask], xn[mask]
    excess = float(np.sum(rs * (ns - xs) / xs))
    if not 1.0 + excess > 0.0:
        raise NonpositiveArgument(f"sum r_i x'_i / x_i = {1.0 + excess!r} is not positive")
    return -math.log1p(excess) / alpha


@dataclass(frozen=True)
class EssReport:
    candidate: SimplexPoint
    is_strict_ess: bool
    worst_margin: float
    samples_tested: int
    radius: float
    seed: int = 0
    config_digest: str = ""

    def as_dict(self) -> dict:
        return {
            "candidate": list(self.candidate),
            "is_strict_ess": self.is_strict_ess,
            "worst_margin": self.worst_margin,
            "samples_tested": self.samples_tested,
            "radius": self.radius,
            "seed": self.seed,
            "config_digest": self.config_digest,
        }


def quasi_uniform_simplex(n: int, samples: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points on the simplex (scrambled Halton + sorted spacings)."""
    if n == 1:
        return np.ones((samples, 1))
    u = qmc.Halton(d=n - 1, scramble=True, seed=seed).random(samples)
    u.sort(axis=1)
    edges = np.hstack([np.zeros((samples, 1)), u, np.ones((samples, 1))])
    return np.diff(edges, axis=1)


def neighborhood_samples(candidate, radius: float, samples: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points of the simplex within ``radius`` of ``candidate``.

    The whole simplex is shrunk toward the candidate by ``radius / sqrt(2)``
    (its diameter), so every point stays on the simplex and inside the ball.
    Points coinciding with the candidate are dropped.
    """
    c = np.asarray(candidate, dtype=np.float64)
    y = quasi_uniform_simplex(c.size, samples, seed)
    pts = c + (radius / math.sqrt(2.0)) * (y - c)
    keep = np.linalg.norm(pts - c, axis=1) > 0.0
    return pts[keep]


def ess_margins(landscape: MatrixLandscape, candidate, points: np.ndarray) -> np.ndarray:
    """``r.f(x) - x.f(x)`` for each row ``x`` of ``points``."""
    c = np.asarray(candidate, dtype=np.float64)
    f = points @ landscape.matrix.T
    margins = f @ c - np.einsum("ij,ij->i", points, f)
    tol = MARGIN_ZERO_TOL * max(1.0, float(np.max(np.abs(landscape.matrix))))
    margins[np.abs(margins) <= tol] = 0.0
    return margins


def verify_ess(
    landscape: MatrixLandscape, candidate, radius: float, samples: int, seed: int = 0
) -> EssReport:
    """Sample the ESS inequality around ``candidate``.

    The candidate is reported strict only if every sampled margin is
    positive. Sampling is deterministic for a given ``seed``.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    if samples < 1:
        raise ValueError(f"samples must be at least 1, got {samples!r}")
    cand = candidate if isinstance(candidate, SimplexPoint) else SimplexPoint(candidate)
    if cand.n != landscape.n:
        raise DimensionError(f"candidate has {cand.n} types, landscape has {landscape.n}")
    pts = neighborhood_samples(cand, radius, samples, seed)
    margins = ess_margins(landscape, cand, pts)
    worst = float(margins.min()) if margins.size else 0.0
    digest = config_digest(
        {
            "matrix": landscape.matrix.tolist(),
            "candidate": list(cand),
            "radius": float(radius),
            "samples": int(samples),
            "seed": int(seed),
        }
    )
    return EssReport(
        candidate=cand,
        is_strict_ess=bool(margins.size > 0 and np.all(margins > 0.0)),
        worst_margin=worst,
        samples_tested=int(margins.size),
        radius=float(radius),
        seed=int(seed),
        config_digest=digest,
    )
