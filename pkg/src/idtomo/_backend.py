"""Inner-loop backend selection: compiled extension with numpy fallback.

The Cython extension ``idtomo._core`` is optional; when it is missing (or
when ``IDTOMO_NO_EXT`` is set to a non-empty value) the pure-numpy kernels
are used. Both backends compute identical quantities; see
``benchmarks/bench_kernels.py`` for a side-by-side timing.
"""

from __future__ import annotations

import os

from . import _kernels_np

if os.environ.get("IDTOMO_NO_EXT"):
    _core = None
else:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

HAVE_EXT = _core is not None
BACKEND = "compiled" if HAVE_EXT else "numpy"

if HAVE_EXT:
    tf_pair = _core.tf_pair
    acc_update = _core.acc_update
else:
    tf_pair = _kernels_np.tf_pair
    acc_update = _kernels_np.acc_update
