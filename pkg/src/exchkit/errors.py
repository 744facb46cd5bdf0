"""Exception hierarchy shared by all exchkit modules."""


class ExchkitError(Exception):
    """Base class for every error raised by exchkit."""


class NonNormalized(ExchkitError, ValueError):
    pass


class MixedArity(ExchkitError, ValueError):
    pass


class ArityNotOne(ExchkitError, ValueError):
    pass


class ArityMismatch(ExchkitError, ValueError):
    pass


class KOutOfRange(ExchkitError, ValueError):
    pass


class EmptyTuple(ExchkitError, ValueError):
    pass


class TooLargeToEnumerate(ExchkitError):
    """An exact computation would exceed the enumeration guard."""


class BlackBoxLaw(ExchkitError):
    """An exact operation was requested on a sampler-only system."""


class MissingDirectingMeasure(ExchkitError, ValueError):
    pass


class NotMultiExchangeable(ExchkitError):
    pass


class InconsistentFamily(ExchkitError, ValueError):
    pass


class TheoremViolation(ExchkitError, AssertionError):
    """An identity that must hold exactly was observed to fail."""


class ConfigInvalid(ExchkitError, ValueError):
    pass
