"""Exception types shared across the toolkit."""


class GlyphfuseError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(GlyphfuseError, ValueError):
    """A tensor or image has a shape that violates an operation's contract."""


class ConfigError(GlyphfuseError, ValueError):
    """A configuration value is outside its legal range."""


class FormatError(GlyphfuseError, ValueError):
    """A file does not conform to its declared on-disk format."""


class NumericalError(GlyphfuseError, ArithmeticError):
    """A computation produced NaN or Inf where finite values are required."""


class GradientError(GlyphfuseError, RuntimeError):
    """Gradient state is missing or inconsistent for an optimizer step."""
