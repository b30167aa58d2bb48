"""Exception hierarchy. ``exit_code`` is what the CLI returns for each class."""


class EquidistError(Exception):
    exit_code = 3


class ConfigError(EquidistError, ValueError):
    exit_code = 2


class MathGuardError(EquidistError):
    """A mathematical precondition or a size guard refused the request."""

    exit_code = 3


class NotPrime(MathGuardError, ValueError):
    pass


class FieldTooLarge(MathGuardError):
    pass


class NoIrreducibleFound(MathGuardError):
    pass


class OrderDoesNotDivide(MathGuardError, ValueError):
    pass


class NotTotallySplit(MathGuardError):
    pass


class EvenCharacteristic(MathGuardError, ValueError):
    pass


class CostGuard(MathGuardError):
    pass


class ValueOutOfRange(MathGuardError, ValueError):
    pass


class SNFOverflow(MathGuardError):
    pass


class SizeGuard(MathGuardError):
    pass


class MassMismatch(MathGuardError, ValueError):
    pass


class LatticeGuard(MathGuardError):
    pass


class UnboundedSupport(MathGuardError, ValueError):
    pass


class InfeasibleTransport(MathGuardError):
    pass


class SweepAborted(MathGuardError):
    pass


class AcceptanceFailure(EquidistError):
    exit_code = 4
