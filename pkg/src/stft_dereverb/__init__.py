"""Single-channel dereverberation with a least-squares inter-frame STFT filter."""

from ._backend import BACKEND
from .metrics import DrrParams, MetricReport, direct_path_energy, drr, srr_seg
from .rir import RoomRanges, RoomSpec, batch_rooms, generate_rir
from .signals import ImpulseResponse, convolve, speech_like
from .solver import (
    ErrorBoundReport,
    LsProblem,
    check_error_bound,
    effective_channel,
    filter_bank_from_json,
    filter_bank_to_json,
    shifted_channel_stfts,
    solve_filter_bank,
    solve_for_channel,
    target_stfts,
)
from .stft import (
    FilterBank,
    Signal,
    Spectrogram,
    StftConfig,
    analyze,
    apply_filter_bank,
    make_window,
    synthesize,
)
from .widrow import InverseFilterSpec, equalize, widrow_inverse

__version__ = "0.1.0"
