"""Domain error types.

Every error the library raises on bad input or a broken protocol run derives
from IpgAkaError so the CLI can map them to exit code 1 uniformly.
"""


class IpgAkaError(Exception):
    """Base class for all domain errors raised by this package."""


# --- grid construction / serialization ---

class InvalidGridDimension(IpgAkaError):
    pass


class WidthCountMismatch(IpgAkaError):
    pass


class NonPalindromicWidths(IpgAkaError):
    pass


class WidthNotByteMultiple(IpgAkaError):
    pass


class IndexOutOfRange(IpgAkaError):
    pass


class MalformedGridFile(IpgAkaError):
    pass


class ValidationFailed(IpgAkaError):
    """Raised when a deserialized grid fails structural validation.

    Carries the full report so callers can show every violation, not just the
    first one found.
    """

    def __init__(self, report):
        self.report = report
        first = report.violations[0].detail if report.violations else "unknown"
        super().__init__(f"{len(report.violations)} violation(s); first: {first}")


# --- key sequence / derivation ---

class GridTooSmall(IpgAkaError):
    pass


class NoCompositionFound(IpgAkaError):
    pass


class SequenceGridMismatch(IpgAkaError):
    pass


class ColumnExhausted(IpgAkaError):
    # Internal assertion: unreachable while key-sequence invariants hold.
    pass


class InsufficientSample(IpgAkaError):
    pass


# --- identity concealment ---

class PrimeGenerationFailed(IpgAkaError):
    pass


class BlockOutOfRange(IpgAkaError):
    pass


class EphemeralOutOfRange(IpgAkaError):
    pass


class NonInvertibleElement(IpgAkaError):
    pass


class BlockTooLargeForModulus(IpgAkaError):
    # Internal assertion: split_blocks never emits a block >= p.
    pass


# --- key hierarchy ---

class NccOverflow(IpgAkaError):
    pass


# --- simulated network ---

class UnknownEndpoint(IpgAkaError):
    pass


class UnknownScenario(IpgAkaError):
    pass


class MalformedMessage(IpgAkaError):
    pass


# --- analysis ---

class EmptyInput(IpgAkaError):
    pass


class ZeroLifetime(IpgAkaError):
    pass


class ConfigInvalid(IpgAkaError):
    pass
