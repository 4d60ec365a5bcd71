"""Exception hierarchy shared by every netsense module."""


class NetsenseError(Exception):
    """Base class for data errors raised by netsense."""


class PcapError(NetsenseError):
    pass


class UnknownMagic(PcapError):
    pass


class UnsupportedLinktype(PcapError):
    pass


class TruncatedFile(PcapError):
    """A packet record claims more bytes than the file holds."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at file offset {offset})"
        super().__init__(message)
        self.offset = offset


class EdgeFormatError(NetsenseError):
    pass


class LengthMismatch(NetsenseError):
    pass


class TooLarge(NetsenseError):
    pass
