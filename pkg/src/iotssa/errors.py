"""Exception hierarchy shared by every module of the package."""


class SsaError(Exception):
    """Base class for all errors raised by iotssa."""


class DuplicateIdError(SsaError):
    def __init__(self, ident):
        super().__init__(f"duplicate id: {ident!r}")
        self.ident = ident


class DanglingEndpointError(SsaError):
    def __init__(self, ident):
        super().__init__(f"connection endpoint does not name a place: {ident!r}")
        self.ident = ident


class UnknownThreatError(SsaError):
    def __init__(self, ident):
        super().__init__(f"unknown threat: {ident!r}")
        self.ident = ident


class UnknownPlaceError(SsaError):
    def __init__(self, ident):
        super().__init__(f"unknown place: {ident!r}")
        self.ident = ident


class RangeError(SsaError, ValueError):
    def __init__(self, field, value, allowed):
        super().__init__(f"{field}={value!r} out of range ({allowed})")
        self.field = field
        self.value = value


class IllegalActionError(SsaError):
    pass


class StateMismatchError(SsaError):
    pass


class EmptyThreatSetError(SsaError, ValueError):
    pass


class InvalidRadixError(SsaError, ValueError):
    pass


class HorizonMismatchError(SsaError):
    pass
