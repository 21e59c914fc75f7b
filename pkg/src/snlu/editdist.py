"""Edit-distance kernel selection.

Imports the compiled Cython kernel when available, otherwise the pure-Python
fallback. Set SNLU_PURE=1 to force the fallback (used by the benchmark and
for debugging).
"""
import os

from . import _editdist_py

if os.environ.get("SNLU_PURE") == "1":
    _impl = _editdist_py
    BACKEND = "python"
else:
    try:
        from . import _editdist_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _editdist_py
        BACKEND = "python"

edit_distance = _impl.edit_distance
