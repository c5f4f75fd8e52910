class QcapError(Exception):
    """Base class of every error raised on purpose by qcap.

    The CLI turns ``exit_code`` into the process exit status.
    """

    exit_code: int = 1


class DimensionError(QcapError, ValueError):
    """Operator, factor or channel dimensions do not fit together."""


class DomainError(QcapError, ValueError):
    """A parameter or operator lies outside the domain of an operation."""


class OrthogonalityError(DomainError):
    """Two operators have no overlap where a quantity needs one."""


class ResourceError(QcapError):
    """A requested instance exceeds the dense-matrix dimension guard."""

    exit_code = 3


class ChannelFormatError(QcapError):
    """An input file does not follow its JSON schema."""

    exit_code = 2


class TrialBudgetError(DomainError):
    """Too few Monte-Carlo trials were requested."""

    exit_code = 4


class WindowError(QcapError):
    """The spectral transition window could not be located on the grid."""


class TrendError(QcapError):
    """Spectral windows did not approach the relative-entropy rate."""
