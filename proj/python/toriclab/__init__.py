"""Hessian geometry of weighted Monge-Ampere solitons on affine domains."""

from ._core import *  # noqa: F401,F403
from ._core import ToricLabError, field_from_json as _field_from_json

import json as _json


def field(spec, base_dir=""):
    """Build a potential from a field spec given as a dict or JSON text."""
    if not isinstance(spec, str):
        spec = _json.dumps(spec)
    return _field_from_json(spec, base_dir)


__version__ = "0.1.0"
