"""scikit-learn style wrapper around the discrete dynamics.

Rows of ``X`` are initial population states. ``fit`` validates the
parameters and freezes the landscape and reference; ``transform`` runs the
dynamic from every row and returns the terminal states; ``predict`` returns
the termination status of each run.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import MatrixLandscape, SimplexPoint, make_cyclic_matrix
from .dynamics import DynamicKind, DynamicsConfig, MomentumKind, iterate


class MomentumDynamics(TransformerMixin, BaseEstimator):
    """Replicator or projection dynamic with optional momentum.

    Parameters
    ----------
    payoff : array-like of shape (n, n), optional
        Payoff matrix. If omitted, the cyclic matrix built from ``a`` and
        ``b`` is used.
    a, b : float
        Cyclic landscape parameters (ignored when ``payoff`` is given).
    dynamic : {"replicator", "projection"}
    momentum : {"none", "polyak", "nesterov"}
    learning_rate : float
    beta : float
    normalize_by_mean : bool
    max_steps : int
    convergence_epsilon : float
    boundary_delta : float
    reference : array-like of shape (n,), optional
        Target state used for convergence; defaults to the barycenter.

    Attributes
    ----------
    landscape_ : MatrixLandscape
    reference_ : SimplexPoint
    config_ : DynamicsConfig
    n_features_in_ : int
    trajectories_ : list of Trajectory
        Runs from the most recent ``transform``/``predict`` call.
    """

    def __init__(
        self,
        payoff=None,
        a=1.0,
        b=1.0,
        dynamic="replicator",
        momentum="polyak",
        learning_rate=0.005,
        beta=0.0,
        normalize_by_mean=False,
        max_steps=10_000_000,
        convergence_epsilon=1e-6,
        boundary_delta=1e-9,
        reference=None,
    ):
        self.payoff = payoff
        self.a = a
        self.b = b
        self.dynamic = dynamic
        self.momentum = momentum
        self.learning_rate = learning_rate
        self.beta = beta
        self.normalize_by_mean = normalize_by_mean
        self.max_steps = max_steps
        self.convergence_epsilon = convergence_epsilon
        self.boundary_delta = boundary_delta
        self.reference = reference

    def fit(self, X, y=None):
        X = self._validate_states(X, reset=True)
        if self.payoff is not None:
            self.landscape_ = MatrixLandscape(self.payoff)
        else:
            self.landscape_ = make_cyclic_matrix(self.a, self.b)
        n = self.landscape_.n
        if X.shape[1] != n:
            raise ValueError(f"X has {X.shape[1]} columns but the landscape has {n} types")
        self.reference_ = (
            SimplexPoint.barycenter(n) if self.reference is None else SimplexPoint(self.reference)
        )
        self.config_ = DynamicsConfig(
            dynamic=DynamicKind(self.dynamic),
            momentum=MomentumKind(self.momentum),
            learning_rate=self.learning_rate,
            beta=self.beta,
            normalize_by_mean=self.normalize_by_mean,
            max_steps=self.max_steps,
            convergence_epsilon=self.convergence_epsilon,
            boundary_delta=self.boundary_delta,
        )
        return self

    def _validate_states(self, X, reset=False):
        X = check_array(X, dtype=np.float64)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} was fitted with {self.n_features_in_}"
            )
        return X

    def _run(self, X):
        check_is_fitted(self, "config_")
        X = self._validate_states(X)
        self.trajectories_ = [
            iterate(self.config_, self.landscape_, row, self.reference_, record_every=self.config_.max_steps)
            for row in X
        ]
        return self.trajectories_

    def transform(self, X):
        """Terminal state of the run started from each row of ``X``."""
        return np.vstack([t.final_state for t in self._run(X)])

    def predict(self, X):
        """Termination status (``"Converged"``, ``"Diverged"``, ``"MaxStepsReached"``) per row."""
        return np.array([t.status.value for t in self._run(X)], dtype=object)

    def n_steps(self, X):
        """Number of steps each run took before stopping."""
        return np.array([t.final_step for t in self._run(X)], dtype=np.int64)
