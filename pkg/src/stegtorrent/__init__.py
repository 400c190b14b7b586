"""Covert channel in the send order of uTP data packets to several receivers.

Secret bits pick a permutation of a shared set of receiver IPs (ranked with
the Lehmer code); the sender emits packets to those IPs in that order and
stamps each packet with a strictly increasing ``timestamp_microseconds`` so
the receivers can restore the order after network reordering and loss.
"""
from .channel import ChannelConfig, transmit, uniform_configs
from .errors import (
    AmbiguousOrderError,
    CapacityError,
    ConfigurationError,
    DomainError,
    MalformedLengthError,
    OutOfCodebookError,
    PackageCorruptionError,
    StegTorrentError,
    TraceFormatError,
    UnknownTypeError,
    UnsupportedVersionError,
)
from .experiment import (
    CaseResult,
    CaseSpec,
    ChannelSettings,
    SessionMetrics,
    run_case,
    run_experiment,
    table_report,
)
from .lehmer import (
    Permutation,
    bits_to_permutation,
    capacity_bits,
    permutation_to_bits,
    rank,
    relative_order,
    unrank,
)
from .mutp import MutpHeader, PacketType, decode_header, encode_header, wrap_compare
from .packets import DataPackage, PacketBatch, PacketEvent
from .receiver import (
    ExtractionReport,
    ReceivedStream,
    decode_bits,
    extract,
    extract_symbols,
    restore_order,
)
from .sender import (
    CoverPlan,
    RunPolicy,
    SendSchedule,
    bits_to_bytes,
    build_schedule,
    bytes_to_bits,
    embed_in_cover,
    pad_info,
)
from .traffic import IpDistribution, SessionConfig, generate_cover, preset

__version__ = "0.1.0"
