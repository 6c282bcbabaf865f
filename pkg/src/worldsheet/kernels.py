"""Hot-loop kernels: compiled extension when importable, numpy otherwise.

Set ``WORLDSHEET_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import logging
import os

from . import _frames_py

logger = logging.getLogger(__name__)

BACKEND = "python"
align_column = _frames_py.align_column
align_rows = _frames_py.align_rows

if os.environ.get("WORLDSHEET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _frames  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        logger.debug("compiled frame kernel unavailable; using numpy fallback")
    else:
        align_column = _frames.align_column
        align_rows = _frames.align_rows
        BACKEND = "cython"
