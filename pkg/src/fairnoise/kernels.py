"""Backend selection for the hot kernels.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``FAIRNOISE_PURE=1`` forces the numpy fallback (used by
the benchmark and by tests that compare the two).
"""

import os

from fairnoise import _pykern

if os.environ.get("FAIRNOISE_PURE"):
    _impl = _pykern
else:
    try:
        from fairnoise import _ckern as _impl
    except ImportError:
        _impl = _pykern

BACKEND = _impl.BACKEND
best_split = _impl.best_split
cell_sums = _impl.cell_sums
discrete_replace = _impl.discrete_replace
