"""Exception hierarchy shared by the codec, sender, receiver and CLI."""


class StegTorrentError(Exception):
    """Base class for every error raised by this package."""


class DomainError(StegTorrentError, ValueError):
    """An argument is outside the domain an operation accepts."""


class HeaderError(StegTorrentError, ValueError):
    pass


class MalformedLengthError(HeaderError):
    pass


class UnsupportedVersionError(HeaderError):
    pass


class UnknownTypeError(HeaderError):
    pass


class CapacityError(DomainError):
    """A cover plan cannot host the symbol runs a secret requires."""


class ConfigurationError(StegTorrentError, ValueError):
    pass


class AmbiguousOrderError(StegTorrentError):
    """Two distinct packets carry the same timestamp."""

    def __init__(self, timestamp, count=2):
        super().__init__(
            f"{count} distinct packets share timestamp_microseconds={timestamp}"
        )
        self.timestamp = timestamp


class OutOfCodebookError(StegTorrentError):
    """A decoded package ranks above the largest rank a sender can emit."""

    def __init__(self, rank, capacity, package_index=None):
        where = "" if package_index is None else f" (package {package_index})"
        super().__init__(
            f"rank {rank} >= 2**{capacity}: not a steganographic package{where}"
        )
        self.rank = rank
        self.capacity = capacity
        self.package_index = package_index


class PackageCorruptionError(StegTorrentError):
    """A symbol repeated inside a package that had not closed yet."""

    def __init__(self, symbol, position, package_index):
        super().__init__(
            f"symbol {symbol} repeats inside package {package_index} "
            f"at stream position {position}"
        )
        self.symbol = symbol
        self.position = position
        self.package_index = package_index


class TraceFormatError(StegTorrentError, ValueError):
    def __init__(self, message, line_no=None):
        prefix = "" if line_no is None else f"line {line_no}: "
        super().__init__(prefix + message)
        self.line_no = line_no
