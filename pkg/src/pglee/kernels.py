"""Distance kernel selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is unavailable or ``PGLEE_PURE_PYTHON=1`` is set. Both backends
produce bitwise-identical results (see tests/test_kernels.py), so the
choice never affects pipeline outputs.
"""

import os

if os.environ.get("PGLEE_PURE_PYTHON") == "1":
    from pglee import _pykernels as _impl
else:
    try:
        from pglee import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from pglee import _pykernels as _impl

BACKEND = _impl.BACKEND
pairwise_sqdist = _impl.pairwise_sqdist
nearest_center = _impl.nearest_center
