"""Exception taxonomy.

Three base classes map onto the CLI exit codes: InputError -> 1,
NumericError -> 2, OutputError -> 3. Everything else is a bug.
"""


class RiskalError(Exception):
    """Base class for all library errors."""


class InputError(RiskalError, ValueError):
    """Invalid input data, parameters, or configuration."""


class NumericError(RiskalError, ArithmeticError):
    """A numerical procedure failed (indefinite matrix, non-convergence)."""


class OutputError(RiskalError, OSError):
    """Writing a result file failed."""


# -- probability primitives ------------------------------------------------

class NegativeEntry(InputError):
    pass


class SumNotOne(InputError):
    pass


class LengthMismatch(InputError):
    pass


class EmptyInput(InputError):
    pass


class RowSumNotOne(InputError):
    pass


# -- classifier ------------------------------------------------------------

class LabelOutOfRange(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NonPosDefResult(NumericError):
    """Posterior scale matrix failed its Cholesky factorization."""


class NonPosDefScale(NumericError):
    """Predictive scale matrix failed its Cholesky factorization."""


# -- decision engine -------------------------------------------------------

class NonConvergence(NumericError):
    pass


class ReducibleChain(InputError):
    """The restricted transition matrix has no unique stationary point."""


# -- active learning -------------------------------------------------------

class InsufficientInitialLabels(InputError):
    pass


class EmptyTestSet(InputError):
    pass


# -- data and experiments --------------------------------------------------

class ParseError(InputError):
    pass


class NonFiniteFeature(InputError):
    pass


class ZeroVarianceFeature(InputError):
    pass


class DegenerateCovariance(NumericError):
    pass


class NonPosDefCovariance(InputError):
    pass


class ConfigError(InputError):
    """Malformed or incomplete experiment configuration."""
