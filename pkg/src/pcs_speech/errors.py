"""Exception hierarchy shared by all pcs_speech modules."""


class PcsError(Exception):
    """Base class for every error raised by this package."""


class MissingFile(PcsError, FileNotFoundError):
    pass


class UnsupportedEncoding(PcsError):
    pass


class ChannelCountError(PcsError):
    pass


class CorruptHeader(PcsError):
    pass


class InvalidBuffer(PcsError, ValueError):
    pass


class InvalidConfig(PcsError, ValueError):
    pass


class EmptySignal(PcsError, ValueError):
    pass


class DegenerateNormalization(PcsError):
    pass


class ShapeMismatch(PcsError, ValueError):
    pass


class DegenerateTable(PcsError, ValueError):
    pass


class InvalidRange(PcsError, ValueError):
    pass


class NegativeMagnitude(PcsError, ValueError):
    pass


class LengthMismatch(PcsError, ValueError):
    pass


class SignalTooShort(PcsError, ValueError):
    pass


class AllFramesSilent(PcsError, ValueError):
    pass


class PairMismatch(PcsError):
    pass


class MissingReference(PcsError):
    pass
