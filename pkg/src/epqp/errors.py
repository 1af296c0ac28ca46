"""Exception hierarchy; the CLI maps these onto exit codes."""


class EPQPError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class DomainError(EPQPError, ValueError):
    """A parameter lies outside the domain of a formula or construction."""

    exit_code = 2


class NumericalQualityError(EPQPError, ArithmeticError):
    """A numerical result failed its quality gate (tail mass, convergence)."""

    exit_code = 3


class TruncationError(NumericalQualityError):
    """The Fock cutoff is too small for the requested state.

    Attributes
    ----------
    tail : float
        Probability mass that fell outside the cutoff.
    required_dim : int
        Suggested cutoff that would bring the tail below tolerance.
    """

    def __init__(self, message, tail, required_dim):
        super().__init__(f"{message} (tail mass {tail:.3e}; try D >= {required_dim})")
        self.tail = tail
        self.required_dim = required_dim
