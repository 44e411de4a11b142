"""Feature selection for subject-grouped voice recordings.

Evaluates a logistic-regression classifier under ANOVA, LASSO and sequential
forward selection with stratified subject-level k-fold cross-validation.
"""

__version__ = "0.1.0"

from fsgate._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
