"""Exception types raised across the package.

Every error the library raises deliberately derives from :class:`GDLabError`
so callers (and the CLI) can distinguish our diagnostics from genuine bugs.
"""


class GDLabError(Exception):
    """Base class for all gdlab errors."""


class ConfigError(GDLabError):
    """Malformed or inconsistent run configuration."""


# -- graph parsing / construction -------------------------------------------

class MalformedLine(GDLabError):
    """Edge-list line that is not two integer ids."""


class SelfLoop(GDLabError):
    """Edge with identical endpoints."""


class DisconnectedGraph(GDLabError):
    """Input graph is not connected."""


class EmptyInput(GDLabError):
    """No nodes could be read from the input."""


class XmlParseError(GDLabError):
    """Input is not well-formed XML or lacks a <graph> element."""


class UnknownNodeRef(GDLabError):
    """Edge references a node id that was never declared."""


class DimensionMismatch(GDLabError):
    """Matrix dimensions disagree with the graph."""


class InvalidSize(GDLabError):
    """Requested synthetic graph size is not positive."""


# -- numerics ----------------------------------------------------------------

class PivotCountOutOfRange(GDLabError):
    """num_pivots outside [1, n]."""


class CoincidentNodes(GDLabError):
    """Two nodes share a position where a direction is required."""


class PerplexityOutOfRange(GDLabError):
    """Perplexity outside [1, n-1]."""


class LengthMismatch(GDLabError):
    """Paired sequences have different lengths."""


class NonPositiveLoss(GDLabError):
    """Adaptive weighting needs strictly positive loss values."""


class NonPositiveValue(GDLabError):
    """SPC needs strictly positive metric values."""


class ShapeMismatch(GDLabError):
    """Tensor shapes do not line up."""


class NonScalarRoot(GDLabError):
    """backward() called on a non-scalar node."""


class NonFiniteLoss(GDLabError):
    """A loss evaluated to NaN or infinity during optimization."""
