"""Exceptions raised by stream_verify.

Bad arguments raise ValueError. Everything below signals a numerical or
structural failure and carries the data needed to diagnose it.
Certificate failures (inf-sup transfer, Newton-Kantorovich condition) are
certificate states, not exceptions.
"""


class StreamVerifyError(Exception):
    """Base class for all domain failures."""


class RefinementError(StreamVerifyError):
    """NVB closure did not terminate within its recursion bound."""

    def __init__(self, message: str, rounds: int):
        super().__init__(message)
        self.rounds = rounds


class DegreeOverflowError(StreamVerifyError):
    def __init__(self, degree: int, limit: int):
        super().__init__(f"polynomial degree {degree} exceeds supported maximum {limit}")
        self.degree = degree
        self.limit = limit


class FactorizationError(StreamVerifyError):
    """Cholesky-type factorisation met a non-positive pivot."""

    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


class SingularMatrixError(StreamVerifyError):
    """LU factorisation met a pivot that is zero to working tolerance."""

    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


class EigenSolverError(StreamVerifyError):
    def __init__(self, message: str, ritz_history: list, iterations: int):
        super().__init__(message)
        self.ritz_history = list(ritz_history)
        self.iterations = iterations


class NewtonError(StreamVerifyError):
    def __init__(self, message: str, residual_history: list):
        super().__init__(message)
        self.residual_history = list(residual_history)


class SingularPointError(StreamVerifyError):
    """Closed-form derivatives requested too close to a singular corner."""


class CertificateInvariantError(StreamVerifyError):
    def __init__(self, violated: list):
        super().__init__("certificate invariants violated: " + ", ".join(violated))
        self.violated = list(violated)
