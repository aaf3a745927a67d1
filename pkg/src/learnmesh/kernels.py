"""Kernel backend selection: compiled extension when available, else pure Python.

Set LEARNMESH_PURE_PYTHON=1 to force the fallback (useful for benchmarking
and for verifying that both backends agree bit for bit).
"""

import os

if os.environ.get("LEARNMESH_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

advance_positions = _impl.advance_positions
contact_pairs = _impl.contact_pairs
component_labels = _impl.component_labels

__all__ = ["BACKEND", "advance_positions", "contact_pairs", "component_labels"]
