"""Exception hierarchy shared by every clchain module."""


class ClchainError(Exception):
    """Base class for all library errors."""


class InvalidPartition(ClchainError, ValueError):
    pass


class BruteForceBoundExceeded(ClchainError):
    """A brute-force enumeration would exceed the configured group-size bound."""


class WindowMismatch(ClchainError, ValueError):
    pass


class Unresolved(ClchainError):
    """A mod p^N Smith form could not certify every elementary divisor."""


class RetryCapExceeded(ClchainError):
    pass


class NonInvertible(ClchainError, ValueError):
    pass


class SizeTooSmall(ClchainError, ValueError):
    pass
