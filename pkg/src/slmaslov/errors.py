"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit-specific failures."""


# frames / unitary representation
class DimensionMismatch(ToolkitError):
    pass


class RankDeficient(ToolkitError):
    pass


class NotIsotropic(ToolkitError):
    pass


class NotUnitary(ToolkitError):
    pass


class NotSymplectic(ToolkitError):
    pass


class NotHermitian(ToolkitError):
    pass


class RankAmbiguous(ToolkitError):
    pass


# angle tracking
class NoEvaluator(ToolkitError):
    pass


class RefinementLimit(ToolkitError):
    pass


class ThetaOnSpectrum(ToolkitError):
    pass


# Sturm-Liouville solvers
class SingularP(ToolkitError):
    pass


class IntegratorDivergence(ToolkitError):
    pass


class SymplecticDefect(ToolkitError):
    pass


class CrossingUnresolved(ToolkitError):
    pass


class EndpointOnSpectrum(ToolkitError):
    pass


class MassNotPositive(ToolkitError):
    pass


class MeshTooCoarse(ToolkitError):
    pass


class DNotConstant(ToolkitError):
    pass


# experiment drivers
class CasePrecludesAttainment(ToolkitError):
    pass


class TuningFailed(ToolkitError):
    pass


class PatternViolation(ToolkitError):
    pass


class PremiseFailed(ToolkitError):
    pass


class DegenerateCluster(ToolkitError):
    pass


# CLI
class ParseError(ToolkitError):
    pass


class UnknownKey(ToolkitError):
    pass
