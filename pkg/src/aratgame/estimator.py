"""scikit-learn style front end for the equilibrium search."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .equilibrium import IterationConfig, iterate, verify_epsilon_nash
from .game import GameInstance
from .validation import check_instance, check_player


class ConstrainedNashSolver(BaseEstimator):
    """Fit stationary constrained-Nash policies to a :class:`GameInstance`.

    Parameters mirror :class:`~aratgame.equilibrium.IterationConfig`.

    Attributes
    ----------
    pi1_, pi2_ : StationaryPolicy
        Final policies of the damped best-response search.
    report_ : EquilibriumReport
    converged_ : bool
    n_iter_ : int
    """

    def __init__(self, damping=0.5, max_iter=500, tol=1e-8, epsilon=1e-6):
        self.damping = damping
        self.max_iter = max_iter
        self.tol = tol
        self.epsilon = epsilon

    def _config(self):
        return IterationConfig(max_iterations=self.max_iter, damping=self.damping,
                               tol=self.tol, epsilon=self.epsilon)

    def fit(self, X: GameInstance, y=None):
        game = check_instance(X)
        report = iterate(game, self._config())
        self.game_ = game
        self.report_ = report
        self.pi1_, self.pi2_ = report.pi1, report.pi2
        self.converged_ = report.converged
        self.n_iter_ = report.iterations
        return self

    def predict_proba(self, states=None, player: int = 1) -> np.ndarray:
        """Action distributions of ``player`` at the given state indices (all states by default)."""
        check_is_fitted(self, "report_")
        table = (self.pi1_ if check_player(player) == 1 else self.pi2_).table
        if states is None:
            return table.copy()
        return table[np.asarray(states, dtype=int)].copy()

    def predict(self, states=None, player: int = 1) -> np.ndarray:
        """Most likely action index per state."""
        return np.argmax(self.predict_proba(states, player), axis=1)

    def score(self, X: GameInstance | None = None, y=None) -> float:
        """Negative epsilon-Nash defect of the fitted profile (0 is a perfect equilibrium)."""
        check_is_fitted(self, "report_")
        game = self.game_ if X is None else check_instance(X)
        return -verify_epsilon_nash(game, self.pi1_, self.pi2_, self.epsilon).defect
