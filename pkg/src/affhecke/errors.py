"""Exception types raised across the package."""


class AffHeckeError(Exception):
    """Base class for all errors raised by :mod:`affhecke`."""


class InputError(AffHeckeError):
    """Malformed or inconsistent user input (maps to CLI exit code 2)."""


# lattice / torus
class InfiniteIntersection(AffHeckeError):
    pass


class NotFiniteGroup(AffHeckeError):
    pass


class NotLiftable(AffHeckeError):
    pass


# root data
class NotReduced(InputError):
    pass


class NotCrystallographic(InputError):
    pass


class InfiniteRootSystem(InputError):
    pass


class InconsistentParameters(InputError):
    pass


class InvalidGammaAction(InputError):
    pass


# Hecke algebra
class InfiniteOmega(AffHeckeError):
    """Enumeration of the length-zero subgroup requested when it is infinite."""


class AlgebraMismatch(AffHeckeError):
    pass


class ConversionBoxExceeded(AffHeckeError):
    pass


class RewriteBoxExceeded(ConversionBoxExceeded):
    pass


class NotInParabolic(AffHeckeError):
    pass


class DomainMismatch(AffHeckeError):
    pass


# modules
class RelationFailure(AffHeckeError):
    pass


class NumericIllConditioned(AffHeckeError):
    pass


class NotScalarCentralAction(AffHeckeError):
    pass


class NotSplitWithinTolerance(AffHeckeError):
    pass


# induction
class ActionUndefined(AffHeckeError):
    pass
