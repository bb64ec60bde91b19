"""Hot loops behind the checker: alternating chain search and the CK fixpoint.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``PLAUSIBILITY_MC_PURE_PYTHON=1`` is set, the pure-Python
versions are used.  Both are always importable as ``kernels.python`` and
(when built) ``kernels.compiled`` for comparisons.
"""

import os

from . import _pykernels as python

compiled = None
if os.environ.get("PLAUSIBILITY_MC_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

alt_bfs = _impl.alt_bfs
ck_fixpoint = _impl.ck_fixpoint

__all__ = ["alt_bfs", "ck_fixpoint", "BACKEND", "python", "compiled"]
