"""Kernel backend selection.

The tree-growth and SMO kernels exist twice: a compiled extension
(``emhlab._core``) and a pure-numpy fallback (``py_core``) with identical,
bit-for-bit behavior.  The compiled one is preferred when importable;
setting ``EMHLAB_FORCE_PY=1`` in the environment forces the fallback, which
is how the benchmark and the parity tests exercise both sides.
"""

from __future__ import annotations

import os

from emhlab.backends import py_core

try:
    from emhlab import _core
except ImportError:
    _core = None

HAS_COMPILED_CORE = _core is not None

if HAS_COMPILED_CORE and os.environ.get("EMHLAB_FORCE_PY", "") != "1":
    BACKEND = "compiled"
    grow_tree = _core.grow_tree
    smo_solve = _core.smo_solve
else:
    BACKEND = "python"
    grow_tree = py_core.grow_tree
    smo_solve = py_core.smo_solve

__all__ = ["BACKEND", "HAS_COMPILED_CORE", "grow_tree", "smo_solve", "py_core"]
