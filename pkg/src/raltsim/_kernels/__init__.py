"""Hot-loop kernels with a compiled core and a numpy fallback.

The backend is chosen once at import. Set ``RALTSIM_KERNEL=python`` to force
the numpy reference, ``RALTSIM_KERNEL=compiled`` to fail loudly when the
extension is missing; anything else (default ``auto``) prefers the compiled
module when it imports.
"""

import os
from contextlib import contextmanager

from . import _pykernels

_choice = os.environ.get("RALTSIM_KERNEL", "auto").strip().lower()

_compiled = None
if _choice != "python":
    try:
        from . import _ckernels as _compiled
    except ImportError:
        if _choice == "compiled":
            raise
        _compiled = None

if _compiled is not None:
    render_sweep = _compiled.render_sweep
    analyze_spectrum = _compiled.analyze_spectrum
    BACKEND = "compiled"
else:
    render_sweep = _pykernels.render_sweep
    analyze_spectrum = _pykernels.analyze_spectrum
    BACKEND = "python"

__all__ = ["BACKEND", "render_sweep", "analyze_spectrum", "available_backends", "get_backend", "use_backend"]


def available_backends():
    names = ["python"]
    if _compiled is not None or _try_compiled() is not None:
        names.append("compiled")
    return names


def _try_compiled():
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


def get_backend(name):
    """Module object exposing ``render_sweep``/``analyze_spectrum`` for ``name``."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        mod = _try_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return mod
    raise ValueError(f"unknown kernel backend {name!r}")


@contextmanager
def use_backend(name):
    """Temporarily route the module-level kernels to backend ``name``."""
    global render_sweep, analyze_spectrum, BACKEND
    mod = get_backend(name)
    saved = render_sweep, analyze_spectrum, BACKEND
    render_sweep, analyze_spectrum, BACKEND = mod.render_sweep, mod.analyze_spectrum, name
    try:
        yield mod
    finally:
        render_sweep, analyze_spectrum, BACKEND = saved
