"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its mathematical domain."""


class DegenerateDataError(ValueError):
    """Input data carries no usable spread (e.g. all samples equal)."""


class NumericalError(RuntimeError):
    """A quadrature, root find or eigensolve did not converge.

    ``residual`` holds the last measured error when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3g})")
        self.residual = residual


class DivergenceError(NumericalError):
    """An iteration left its overflow guard."""


class BracketError(NumericalError):
    """No sign change could be found for a root search."""


class ProtocolError(ValueError):
    """An analysis was requested with an insufficient experimental design."""
