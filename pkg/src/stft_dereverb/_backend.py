"""Pick the compiled kernels when available, numpy otherwise.

Set ``STFT_DEREVERB_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

BACKEND = "python"
overlap_add = _fallback.overlap_add
frame_convolve = _fallback.frame_convolve
deposit_images = _fallback.deposit_images

if os.environ.get("STFT_DEREVERB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ext
    except ImportError:  # pragma: no cover - depends on build
        log.debug("compiled kernels unavailable, using numpy fallback")
    else:
        BACKEND = "cython"
        overlap_add = _ext.overlap_add
        frame_convolve = _ext.frame_convolve
        deposit_images = _ext.deposit_images
