"""Select the compiled event loops when available, else the pure-Python ones.

Set ``PDLSS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("PDLSS_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
chain_advance = _impl.chain_advance
particles_advance = _impl.particles_advance

python_backend = _pykernels
