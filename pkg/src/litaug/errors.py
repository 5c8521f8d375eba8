"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: ValidationError -> 1, InputError -> 2,
GatewayError -> 3. Anything else is a bug and propagates.
"""


class LitaugError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(LitaugError):
    """Inputs violate a documented precondition or invariant."""


class InputError(LitaugError):
    """Missing or unreadable files, malformed file-level structure."""


class GatewayError(LitaugError):
    """Base class for language-model gateway failures."""


class GatewayTransportError(GatewayError):
    """Transport failure after exhausting retries."""


class GatewayProtocolError(GatewayError):
    """Response violates the wire-protocol invariants."""


class TrainingError(LitaugError):
    """Training diverged (NaN loss) or was otherwise aborted."""
