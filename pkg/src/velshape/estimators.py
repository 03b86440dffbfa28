"""scikit-learn style wrappers around the functional core.

``ReachAvoidEstimator`` computes a reach-avoid set in ``fit`` and answers
membership queries for arrays of states ``X`` of shape ``(n, 2)`` with
columns ``(x1, x2)``.  ``PolicyEstimator`` evaluates a feedback law on such
arrays.  Neither learns anything from data; ``fit`` only runs the
computation and validates parameters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .controllers import policy_from_config
from .exceptions import InputError
from .reach_avoid import TargetSet, compute_reach_avoid
from .trajectory import DEFAULT_GRID


def check_states(X):
    """Validate a state array: finite floats of shape ``(n, 2)``."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise InputError(f"states must have two columns (x1, x2), got {X.shape[1]}")
    return X


class ReachAvoidEstimator(BaseEstimator):
    """Reach-avoid set of a target segment as a membership classifier.

    Parameters
    ----------
    system : PhaseSystem
    target : tuple (c, x2_low, x2_high)
    epsilon : float, default 0.1
    grid : int, default 2000
    poly_degree : int or None
        Degree of the polynomial over-approximation used for the partition.
    """

    def __init__(self, system=None, target=(1.0, 0.0, 1.0), epsilon=0.1, grid=DEFAULT_GRID,
                 poly_degree=None):
        self.system = system
        self.target = target
        self.epsilon = epsilon
        self.grid = grid
        self.poly_degree = poly_degree

    def fit(self, X=None, y=None):
        if self.system is None:
            raise InputError("ReachAvoidEstimator needs a phase system")
        c, lo, hi = (float(v) for v in self.target)
        self.set_ = compute_reach_avoid(self.system, TargetSet(c, lo, hi), self.epsilon,
                                        self.grid, self.poly_degree)
        self.x1_range_ = (self.set_.x1_min, self.set_.target.c)
        return self

    def decision_function(self, X):
        """Signed slack: positive strictly inside, zero on the boundary, negative outside."""
        check_is_fitted(self, "set_")
        X = check_states(X)
        ras = self.set_
        x1 = np.clip(X[:, 0], ras.x1_min, ras.target.c)
        zl = ras.lower(x1)
        zu = ras.upper(x1)
        slack = np.minimum.reduce([X[:, 1] - zl, zu - X[:, 1],
                                   X[:, 0] - ras.x1_min, ras.target.c - X[:, 0]])
        for lo, hi in ras.clipped:
            slack[(X[:, 0] > lo) & (X[:, 0] < hi)] = -1.0
        if ras.empty:
            slack[:] = -np.inf
        return slack

    def predict(self, X):
        return self.decision_function(X) >= 0.0


class PolicyEstimator(BaseEstimator):
    """Actuation level ``lambda(x)`` of a configured policy evaluated row-wise.

    ``policy`` is the same dictionary as the scenario ``policy`` section.
    """

    def __init__(self, policy=None, system=None, reach_avoid=None, sample_period=None):
        self.policy = policy
        self.system = system
        self.reach_avoid = reach_avoid
        self.sample_period = sample_period

    def fit(self, X=None, y=None):
        if self.policy is None:
            raise InputError("PolicyEstimator needs a policy specification")
        ras = self.reach_avoid.set_ if isinstance(self.reach_avoid, ReachAvoidEstimator) \
            else self.reach_avoid
        self.policy_ = policy_from_config(self.policy, self.system, ras, self.sample_period)
        return self

    def predict(self, X):
        check_is_fitted(self, "policy_")
        X = check_states(X)
        return np.array([self.policy_(a, b) for a, b in X])

    def predict_input(self, X):
        """Path accelerations ``u`` including the bound buffer."""
        check_is_fitted(self, "policy_")
        if self.system is None:
            raise InputError("predict_input needs the phase system")
        X = check_states(X)
        lam = self.predict(X)
        out = np.empty(len(X))
        b = self.policy_.buffer
        for k, ((x1, x2), level) in enumerate(zip(X, lam)):
            d, a = self.system.bounds(x1, x2)
            span = a - d
            out[k] = d + b * span + level * (1.0 - 2.0 * b) * span
        return out
