"""Kernel selection: the compiled extension when available, else the
pure-Python fallback. Both give bit-identical results; only speed differs.

``benchmarks/bench_kernel.py`` compares the two.
"""

from __future__ import annotations

try:
    from . import _kernel as _impl
except ImportError:  # extension not built
    from . import _pykernel as _impl

BACKEND: str = _impl.BACKEND
add_stabilize = _impl.add_stabilize
run_chain = _impl.run_chain


def backends():
    """All importable kernel implementations, keyed by name."""
    out = {}
    try:
        from . import _kernel

        out[_kernel.BACKEND] = _kernel
    except ImportError:
        pass
    from . import _pykernel

    out[_pykernel.BACKEND] = _pykernel
    return out
