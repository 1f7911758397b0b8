"""Exception types shared by all noisefp modules.

The CLI maps these onto exit codes: user-facing input problems exit 2,
solver failures exit 4. Keeping them distinct here means library callers
can tell "you gave me garbage" apart from "the optimizer gave up".
"""


class NoiseFpError(Exception):
    """Base class for all errors raised by this package."""


class RejectedInputError(NoiseFpError):
    """Input data violates a documented contract (bad values, labels, files)."""


class InsufficientDataError(NoiseFpError):
    """Not enough samples or chunks to perform the requested operation."""


class InsufficientClassDataError(NoiseFpError):
    """A class has too few samples for training or fold assignment."""


class InvalidAttackSpecError(NoiseFpError):
    """An attack specification is incomplete or inconsistent with the series."""


class UndefinedSnrError(NoiseFpError):
    """Signal-to-noise ratio requested with zero noise energy."""


class TrainingBudgetExceededError(NoiseFpError):
    """SMO did not converge within the allowed pass budget.

    Carries the worst remaining KKT violation so callers can decide whether
    to retry with a larger budget or looser tolerance.
    """

    def __init__(self, message, worst_violation=None):
        super().__init__(message)
        self.worst_violation = worst_violation
