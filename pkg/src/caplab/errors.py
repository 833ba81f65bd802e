"""Exception types shared across the package."""


class CaplabError(Exception):
    """Base class for all caplab errors."""


class NotImmersedError(CaplabError):
    """First fundamental form is degenerate at the queried parameter."""


class NotAGraphError(CaplabError):
    """Surface is vertically tangent in the chart; no graph extraction."""


class SignatureError(CaplabError):
    """Quadratic form does not have the required (Lorentzian) signature."""


class SingularPointError(CaplabError):
    """Direction field is singular at the queried point."""


class UnwrapError(CaplabError):
    """Angle samples are too coarse for a safe continuous lift."""

    def __init__(self, message, required_samples=None):
        super().__init__(message)
        self.required_samples = required_samples


class DegenerateIntersectionError(CaplabError):
    """Tangential or otherwise degenerate intersection configuration."""


class ConfigError(CaplabError):
    """Scenario configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
