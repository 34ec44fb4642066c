"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the CLI can map failure classes to
distinct process exit codes (2 usage, 3 input/output, 4 environment,
5 numerical).
"""


class SafeflowError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(SafeflowError):
    """An argument is outside the documented domain of an operation."""

    exit_code = 2


class ParseError(SafeflowError):
    """A file could not be read or does not match the expected schema."""

    exit_code = 3


class InvariantViolation(SafeflowError):
    """Input data violates a structural invariant (bad quaternion, bad
    timestamps, ...). Carries the demo/sample indices when applicable."""

    exit_code = 3

    def __init__(self, message, demo=None, sample=None):
        if demo is not None:
            message = f"demo {demo}" + (f", sample {sample}" if sample is not None else "") + f": {message}"
        super().__init__(message)
        self.demo = demo
        self.sample = sample


class NonMonotoneDistance(InvariantViolation):
    """Distance to the goal increases along a demonstration; such
    trajectories are outside the method's validity domain."""


class NotSkewSymmetric(SafeflowError):
    """Matrix handed to vee() is not skew-symmetric within tolerance."""

    exit_code = 5


class NearAntipodal(SafeflowError):
    """Rotation is within tolerance of a half-turn, where the log map is
    ambiguous."""

    exit_code = 5


class EigenFailure(SafeflowError):
    """Covariance eigendecomposition failed even after regularization."""

    exit_code = 5


class InsufficientData(SafeflowError):
    """Not enough samples to fit the requested model size."""

    exit_code = 5


class InsufficientDemos(SafeflowError):
    """Cone-angle learning needs at least two demonstrations."""

    exit_code = 5


class BracketNotFound(SafeflowError):
    """Distance resampling could not bracket a grid value."""

    exit_code = 5


class UnknownModel(SafeflowError):
    """Service request referenced a model id that is not loaded."""

    exit_code = 3


class UnknownSession(SafeflowError):
    """Service request referenced a session id that does not exist."""

    exit_code = 3
