"""Exception hierarchy shared by all gbkp modules.

Each exception carries an ``exit_code`` so the command-line front end can
map failures onto distinct process statuses without inspecting messages.
"""


class GbkpError(Exception):
    exit_code = 2


class ConfigError(GbkpError):
    exit_code = 1

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class MatrixDomainError(GbkpError, ValueError):
    """Period matrix is not purely imaginary, symmetric and positive definite."""


class DimensionError(GbkpError, ValueError):
    pass


class DerivativeOrderError(GbkpError, ValueError):
    pass


class ParameterSetError(GbkpError, ValueError):
    """Supplied free parameters do not match what the solver needs for N."""


class NumericalError(GbkpError):
    exit_code = 2


class IllConditionedError(NumericalError):
    def __init__(self, message, cond=None, nomes=None):
        self.cond = cond
        self.nomes = nomes
        super().__init__(message)


class DegenerateParametersError(NumericalError):
    pass


class ClosureError(NumericalError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class RankError(NumericalError):
    pass


class RungError(NumericalError):
    """A solve failed at one rung of a nome ladder."""

    def __init__(self, message, rung=None, nome=None, cause=None):
        self.rung = rung
        self.nome = nome
        self.cause = cause
        super().__init__(message)


class ResonanceError(NumericalError):
    """Zero denominator in a soliton phase shift."""


class SingularityError(GbkpError):
    exit_code = 3


class NearDivisorError(SingularityError):
    """Evaluation point lies too close to the zero set of theta."""


class DivisorProximityError(SingularityError):
    pass


class SingularPointError(SingularityError):
    """Tau function is non-positive, so ln f is undefined."""


class DomainError(GbkpError, ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


class SignWarning(UserWarning):
    pass
