"""Exception hierarchy shared by every module."""


class SigbellError(Exception):
    """Base class for all library errors."""


class InvalidInput(SigbellError, ValueError):
    """Malformed or out-of-range input data."""


class InvalidBehavior(InvalidInput):
    pass


class EmptyCell(InvalidInput):
    """A setting pair has no joint click events."""


class NotDichotomic(InvalidInput):
    pass


class TooLarge(InvalidInput):
    def __init__(self, count: int, cap: int, what: str = "strategies"):
        super().__init__(f"{count} {what} exceeds the cap of {cap}")
        self.count = count
        self.cap = cap


class DimensionMismatch(InvalidInput):
    pass


class InvalidPOVM(InvalidInput):
    pass


class NotPSD(InvalidInput):
    pass


class InvalidGamma(InvalidInput):
    pass


class InvalidArgs(InvalidInput):
    pass


class AllNoClick(InvalidInput):
    """Some setting pair has (numerically) zero joint detection probability."""


class SolverFailure(SigbellError, RuntimeError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
