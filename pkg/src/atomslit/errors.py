"""Exception hierarchy shared by all modules."""


class AtomSlitError(Exception):
    """Base class for library errors."""


class DomainError(AtomSlitError, ValueError):
    """Argument outside the domain of a physical function (e.g. r <= 0)."""


class ConfigurationError(AtomSlitError, ValueError):
    """Missing or inconsistent model/run configuration."""


class ValidationError(ConfigurationError):
    """Experiment config failed validation; ``errors`` maps field -> message."""

    def __init__(self, errors):
        self.errors = dict(errors)
        lines = [f"{k}: {v}" for k, v in self.errors.items()]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class ResolutionError(AtomSlitError):
    """Grid too small or too coarse for the requested states."""


class MatchingError(AtomSlitError):
    """Continuum matching radius lies inside the short-range region."""


class SequencingError(AtomSlitError):
    """Observable requested while the field is still on."""


class AbsorberOverflowError(AtomSlitError):
    """Density reached the last grid point despite the absorber."""


class UndefinedPhaseError(AtomSlitError):
    """Phase requested where all amplitudes vanish."""


class MeshRefinementError(AtomSlitError):
    """Energy mesh too coarse to unwrap a phase."""


class ToleranceError(AtomSlitError):
    """Quadrature failed to reach the requested tolerance."""


class SingularTermError(AtomSlitError):
    """Vanishing energy denominator in a continuous-wave expression."""


class BracketingError(AtomSlitError):
    """Root finder was given an interval without a sign change."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan
