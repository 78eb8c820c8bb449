"""Exception hierarchy shared by every module of the package."""


class SheetApproxError(Exception):
    """Base class for all errors raised by ``sheetapprox``."""


class StructuralError(SheetApproxError, ValueError):
    """Mismatched dimensions or malformed geometric objects."""


class DomainError(SheetApproxError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ResourceError(SheetApproxError, MemoryError):
    """A configured cell or lattice budget would be exceeded.

    ``required`` carries the budget the operation would have needed.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class NumericError(SheetApproxError, ArithmeticError):
    """A numerical procedure (e.g. a factorization) failed."""


class ConfigError(SheetApproxError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line
