"""Shared exception types."""


class CohoError(Exception):
    """Base class for all package-specific failures."""


class DegenerateGeometry(CohoError):
    """Polygon too small, collinear, or otherwise unusable."""


class ParseError(CohoError):
    """Input file could not be parsed; message names the offending feature."""


class ValidationError(CohoError):
    """Parsed data violates a declared constraint."""


class ContractViolation(CohoError):
    """A caller broke a documented precondition."""


class NonFiniteGradient(CohoError):
    """Gradient contained NaN/Inf; message names the parameter."""


class TrainingDiverged(CohoError):
    """Loss became non-finite; message carries the step index."""


class DegenerateDimension(CohoError):
    """A latent dimension has too few distinct values to quantize."""


class CompatibilityError(CohoError):
    """Artifact hashes do not match across pipeline stages."""


class NoContext(CohoError):
    """Graph has no edges, so context metrics are undefined."""
