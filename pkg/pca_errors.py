#!/usr/bin/env python3
"""
PCA Lab Errors

Exception hierarchy shared by every pca-lab module. All errors derive from
PcaLabError so the CLI can catch them in one place and map them to exit codes.

Usage:
    from pca_errors import InvalidInput, OracleContractViolation

    raise InvalidInput("k must lie in [1, d]")
"""

from typing import Optional


class PcaLabError(Exception):
    """Base class for pca-lab errors"""

    pass


class InvalidInput(PcaLabError, ValueError):
    """Malformed or out-of-range arguments"""

    pass


class SingularTopSpace(PcaLabError):
    """lambda_k is (numerically) zero, so kappa_k is undefined"""

    pass


class DegenerateTarget(PcaLabError):
    """The target matrix has no usable energy for the requested metric"""

    pass


class DegenerateResidual(PcaLabError):
    """The deflated matrix has a singular block where an inverse is needed"""

    pass


class OracleContractViolation(PcaLabError):
    """An oracle answer is not a unit vector inside span(P)"""

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


class NullResidualSpace(PcaLabError):
    """PMP vanishes, so every unit vector in span(P) is an exact answer"""

    pass


class BudgetExhausted(PcaLabError):
    """An iterative oracle ran out of iterations before meeting its contract"""

    def __init__(self, message: str, achieved: Optional[float] = None):
        super().__init__(message)
        self.achieved = achieved


class PrecondUnmet(PcaLabError):
    """A verifier's hypothesis did not hold, so its check is vacuous"""

    pass


class RegimeRejected(PcaLabError):
    """Parameters fall outside the regime where the cPCA reduction is valid"""

    pass


class NotInRegime(PcaLabError):
    """Counterexample parameters fall outside the construction's window"""

    pass


class FilterCollapse(PcaLabError):
    """The robust filter removed all weight"""

    pass


class PerturbationTooLarge(PcaLabError):
    """Operator-norm perturbation exceeds gamma * lambda_k / 2"""

    pass


class BudgetWarning(UserWarning):
    """Sample or iteration budget below the calibrated requirement"""

    pass
