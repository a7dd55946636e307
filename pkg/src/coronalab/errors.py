"""Exception types shared across the package.

Two families matter to callers: configuration problems (bad domain specs,
resolutions that cannot support the requested construction) and runtime
infeasibilities discovered while computing (no corkscrew point, a walk that
exceeds its step budget, a hypothesis check that fails on real data). The CLI
maps the first family to exit code 2 and the second to exit code 3.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration or construction parameters."""


class UnsupportedDimension(ConfigError):
    pass


class OverlappingPieces(ConfigError):
    """Union primitives whose closures intersect."""


class ResolutionTooCoarse(ConfigError):
    """Sample cloud too coarse for the requested tree depth."""


class LatticeTooCoarse(ConfigError):
    """Quadrature lattice spacing violates its distance-to-boundary rule."""


class FamilyNotDisjoint(ConfigError):
    """A stopping family passed where pairwise-disjoint cubes are required."""


class PreconditionViolated(ConfigError):
    """Supplied data breaks a documented geometric precondition."""


class CoincidentPoints(ConfigError):
    """Green-function pole and evaluation point too close to separate."""


class ModeParamMismatch(ConfigError):
    """Diagnostic mode given parameters that belong to a different mode."""


class PoleMissing(ConfigError):
    pass


class NotAntisymmetric(ConfigError):
    """Matrix field handed to an antisymmetry-only functional fails the check."""


class ConfigInvalid(ConfigError):
    """Malformed run configuration file."""


class IoError(ConfigError):
    """Report or table files missing, unreadable, or empty."""


class ComputationError(RuntimeError):
    """Runtime infeasibility discovered mid-computation."""


class OracleFailure(ComputationError):
    """A pluggable oracle returned values inconsistent with its contract."""


class NonTermination(ComputationError):
    """An iterative refinement exceeded its sweep budget."""


class StageFailed(ComputationError):
    """A pipeline stage raised; carries the stage name for the report."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class CorkscrewNotFound(ComputationError):
    def __init__(self, message: str, resolution: float | None = None):
        super().__init__(message)
        self.resolution = resolution


class PoleOnBoundary(ComputationError):
    pass


class PathCapExceeded(ComputationError):
    """Raised only when every path in an estimate was lost to the step cap."""


class GridConstructionError(ComputationError):
    """Measured grid constants violate a hard cap."""


class BadCorkscrewFamily(ComputationError):
    def __init__(self, message: str, offenders=None):
        super().__init__(message)
        self.offenders = offenders or []


class HypothesisViolated(ComputationError):
    pass


class NotSemiCoherent(ComputationError):
    pass


class GeometryViolated(ComputationError):
    """A pole or region constraint required by a verification mode fails."""


class MissingDerivative(ComputationError):
    pass


class DepthInsufficient(ComputationError):
    pass
