"""Exception hierarchy shared by every chargesim module."""


class ChargeSimError(Exception):
    """Base class for all simulator errors."""


class InputError(ChargeSimError, ValueError):
    """An argument is outside the operation's domain."""


class RangeError(InputError):
    """A value cannot be represented by the requested mapping."""


class UndefinedDeviationError(InputError):
    pass


class UnreachableError(InputError):
    """The programmable resistor cannot produce the requested value."""


class ChecksumError(ChargeSimError):
    """A command frame failed its checksum or framing check."""


class MalformedBurstError(ChargeSimError):
    pass


class HarnessError(ChargeSimError):
    """Script or scenario problem: bad event ordering, unknown names, bad JSON."""


class UnknownScenarioError(HarnessError):
    pass


class MalformedInputError(HarnessError):
    """Scenario or script file that cannot be parsed."""
