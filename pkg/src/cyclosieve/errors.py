"""Exception hierarchy.

Every error raised by the package derives from :class:`CyclosieveError` and
falls in one of three categories, which the command line maps to exit codes:
validation problems (2), resource caps (3) and internal invariant violations (4).
"""


class CyclosieveError(Exception):
    exit_code = 4


class ValidationError(CyclosieveError, ValueError):
    exit_code = 2


class ResourceError(CyclosieveError):
    exit_code = 3


class InvariantViolation(CyclosieveError, AssertionError):
    exit_code = 4


# field_core
class NotPrime(ValidationError):
    pass


class FieldTooLarge(ResourceError):
    pass


class OrderNotDividing(ValidationError):
    pass


class DomainMismatch(ValidationError):
    pass


# cyclotomic
class MixedOrders(ValidationError):
    pass


class NotCoprime(ValidationError):
    pass


# trace_functions
class ZeroArgument(ValidationError):
    pass


class BadCharacterOrder(ValidationError):
    pass


class DegenerateRationalFunction(ValidationError):
    pass


class NotARoot(ValidationError):
    pass


class EvenCharacteristic(ValidationError):
    pass


class NotSquarefreeModP(ValidationError):
    pass


class CacheFormatError(ValidationError):
    pass


# ring_formulas
class FormulaSyntaxError(ValidationError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariable(ValidationError):
    def __init__(self, name):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class DepthExceeded(ValidationError):
    pass


class FieldTooLargeForDepth(ResourceError):
    pass


# matrix_groups
class GroupTooLarge(ResourceError):
    pass


class BadDimension(ValidationError):
    pass


class MismatchedField(ValidationError):
    pass


class TrivialCharacter(ValidationError):
    pass


# sieve_engine
class EmptyLambda(ValidationError):
    pass


class LocalDensityOne(ValidationError):
    pass


class UnsafeFormula(ValidationError):
    pass


class TableMismatch(ValidationError):
    pass


class ZeroPL(ValidationError):
    pass
