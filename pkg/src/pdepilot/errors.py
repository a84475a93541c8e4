"""Exception hierarchy shared across the pipeline."""


class PdePilotError(Exception):
    """Base class for all package errors."""


# --- problem model ---

class SchemaError(PdePilotError):
    """Problem document is missing fields or has the wrong structure."""


class ExpressionError(PdePilotError):
    """A symbolic expression could not be parsed or uses forbidden symbols."""


class DimensionError(PdePilotError):
    """A derivative index or axis reference is outside the domain dimension."""


class EvalError(PdePilotError):
    """Expression evaluation produced non-finite values."""


# --- planning ---

class NoCompatiblePlanError(PdePilotError):
    """No scheme family supports the problem's BC/type combination."""


class AllCandidatesFailedError(PdePilotError):
    """No executed candidate passed verification."""


# --- kernels ---

class NonPeriodicGridError(PdePilotError):
    """Spectral differentiation requested on a non-periodic grid."""


class BlowupError(PdePilotError):
    """Time stepping produced non-finite values."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class SingularSystemError(PdePilotError):
    """Discrete elliptic operator is singular (e.g. resonant Helmholtz)."""


class LinearSolveError(PdePilotError):
    """A sparse/dense linear solve failed to converge."""


class UnsupportedOperatorError(PdePilotError):
    """Residual evaluation does not support the operator/grid combination."""


# --- verifier ---

class GridMismatchError(PdePilotError):
    """Two fields being compared live on different grids or times."""


class MissingRelationError(PdePilotError):
    """Implicit residual requested without an implicit relation."""


class EmptyAggregateError(PdePilotError):
    """Aggregate statistics requested over an empty report set."""


# --- gateway ---

class TemplateError(PdePilotError):
    """Prompt template referenced a context field that is missing."""


class TransportError(PdePilotError):
    """Network failure talking to the remote agent service."""


class AuthError(PdePilotError):
    """Remote agent service rejected the credential."""


class ReplayMissError(PdePilotError):
    """Replay backend has no transcript entry for this request."""


class MalformedResponseError(PdePilotError):
    """Agent response had no extractable payload."""


# --- executor ---

class ExhaustedError(PdePilotError):
    """All retries and restarts were spent on a candidate."""

    def __init__(self, message, artifact=None):
        super().__init__(message)
        self.artifact = artifact
