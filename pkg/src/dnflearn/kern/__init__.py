"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is unavailable or when DNFLEARN_BACKEND=python is set.  Both
backends are importable side by side for the equivalence tests and the
benchmark.
"""

import os

from . import _fallback

try:
    from . import _corekern
except ImportError:  # pragma: no cover - depends on build environment
    _corekern = None

if _corekern is not None and os.environ.get("DNFLEARN_BACKEND") != "python":
    BACKEND = "compiled"
    _impl = _corekern
else:
    BACKEND = "python"
    _impl = _fallback

dnf_table = _impl.dnf_table
stem_walks = _impl.stem_walks


def available_backends():
    out = {"python": _fallback}
    if _corekern is not None:
        out["compiled"] = _corekern
    return out
