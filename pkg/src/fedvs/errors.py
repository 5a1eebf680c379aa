"""Exception types raised across the package."""


class FedVSError(Exception):
    """Base class for every error raised by this package."""


class ZeroInverse(FedVSError, ZeroDivisionError):
    pass


class DuplicatePoints(FedVSError, ValueError):
    pass


class ShapeMismatch(FedVSError, ValueError):
    pass


class NonFiniteInput(FedVSError, ValueError):
    pass


class OverflowRange(FedVSError, OverflowError):
    """A signed integer does not fit the field's signed window."""


class OverflowBoundViolation(FedVSError):
    """Declared data/weight ranges could make decoded sums wrap around p."""


class InsufficientResponders(FedVSError):
    pass


class MissingShare(FedVSError, KeyError):
    pass


class LabelMismatch(FedVSError, ValueError):
    pass


class EmptyResponderSet(FedVSError):
    pass


class ConfigError(FedVSError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ValidationError(ConfigError):
    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(rule)


class MalformedRow(FedVSError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class NonNumericFeature(MalformedRow):
    pass
