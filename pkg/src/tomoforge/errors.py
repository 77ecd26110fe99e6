"""Exception types shared across the package."""


class TomoforgeError(Exception):
    """Base class for pipeline-specific failures."""


class CutoffError(TomoforgeError):
    """Fock-basis truncation leaves too much probability mass unaccounted."""


class DegenerateScaleError(TomoforgeError):
    """Tomogram has no positive values, so value-to-color scaling is undefined."""


class ForeignPixelError(TomoforgeError):
    """Image contains a pixel too far from every lookup-table color."""

    def __init__(self, message, count=0):
        super().__init__(message)
        self.count = count


class DegeneratePdfError(TomoforgeError):
    """Probability density integrates to zero and cannot be normalized."""


class DivergenceError(TomoforgeError):
    """Adversarial training produced non-finite losses."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
