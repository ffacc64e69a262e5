"""Exception types shared across the package."""


class CutlabError(Exception):
    """Base class for all package errors."""


# chains
class DriftOutOfRange(CutlabError):
    """A drift value p_i left the open interval (-1/2, 1/2)."""


class UnknownVertex(CutlabError):
    """Vertex is not a live vertex of the network."""


class EmptyWindow(CutlabError):
    """Kernel truncation window contains no states."""


# greens
class SeriesDiverges(CutlabError):
    """Partial products of the visit series fail to decay (recurrent chain)."""


class NoTailBound(CutlabError):
    """No certified tail bound reached within the configured cap."""


class NotDecreasing(CutlabError):
    """Green values are not strictly decreasing."""


class NotConvex(CutlabError):
    """Green values are not convex (drift would leave [0, 1/2))."""


class OutOfRange(CutlabError):
    """Index outside the computed table range."""


# construct
class NonIncreasingInverse(CutlabError):
    """Sampled inverse is decreasing somewhere."""


class QuadratureFailure(CutlabError):
    """Adaptive quadrature failed to converge on a panel."""


class BlockOverflow(CutlabError):
    """A sparse-schedule block exceeded the configured cap."""


class NotLogConvex(CutlabError):
    """Sampled second differences of a log profile are negative."""


# simulate
class KappaOutOfRange(CutlabError):
    """Per-step killing probability outside [0, 1)."""


class TableMismatch(CutlabError):
    """Trajectory and Green table belong to different chains."""


class InsufficientSamples(CutlabError):
    """Too few samples for the requested statistic."""


# scales
class NonPositiveEntry(CutlabError):
    """Sequence entry is not strictly positive."""


class SequenceDoesNotReach(CutlabError):
    """Sequence never enters a requested scale."""


class ScaleMissing(CutlabError):
    """Requested scale was not populated by the decomposition."""


# killing
class WindowTooSmall(CutlabError):
    """Truncation window too small for the requested horizon/tolerance."""


# cli
class UnknownPreset(CutlabError):
    """Preset name not in the registry."""


class ConfigInvalid(CutlabError):
    """Experiment configuration failed validation."""
