"""Kernel lane selection.

Imports the compiled kernels when the extension is present and the
environment variable UAG_PURE is unset, otherwise the pure-Python lane.
Both lanes export the same functions with identical behavior; ACTIVE names
the lane actually in use.
"""

from __future__ import annotations

import os

if os.environ.get("UAG_PURE"):
    from . import _pykern as _impl
else:
    try:
        from . import _ckern as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykern as _impl

ACTIVE = "compiled" if _impl.IS_COMPILED else "pure"

attach_block = _impl.attach_block
bfs_dists = _impl.bfs_dists
set_distance = _impl.set_distance
cycles_upto = _impl.cycles_upto
cycle_probe = _impl.cycle_probe
eval_formula = _impl.eval_formula
