"""JSON emission with every float written at 17 significant digits."""

from __future__ import annotations

import json
import math
from enum import Enum

import numpy as np


def _floatstr(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # json's C encoder hard-codes float.__repr__; route through the
        # pure-Python iterator to control float formatting.
        return json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            json.encoder.py_encode_basestring_ascii if self.ensure_ascii else json.encoder.py_encode_basestring,
            self.indent,
            _floatstr,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            False,
        )(o, 0)


def dumps(obj, indent: int | None = None) -> str:
    return json.dumps(_plain(obj), cls=_Encoder, indent=indent, sort_keys=True)
