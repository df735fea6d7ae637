"""Exception hierarchy shared across the package."""


class TreePceError(Exception):
    """Base class for all library errors."""


class InsufficientSamplesError(TreePceError):
    """Raised when a least-squares system would be underdetermined."""


class DegenerateOutputError(TreePceError):
    """Raised when an operation requires nonzero output variance."""


class BudgetExceededError(TreePceError):
    """Raised when an analytic Sobol' evaluation exceeds its term budget.

    Carries the estimated number of scalar multiply-adds in ``term_count``.
    """

    def __init__(self, term_count: int, budget: int):
        self.term_count = term_count
        self.budget = budget
        super().__init__(
            f"analytic evaluation requires ~{term_count:.3g} multiply-adds, "
            f"exceeding the budget of {budget:.3g}; use the pick-freeze "
            "estimator instead"
        )


class DomainError(TreePceError):
    """Raised when a point falls outside the model's domain."""
