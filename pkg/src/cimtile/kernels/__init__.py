"""Kernel backend selection.

The compiled extension is preferred when built; otherwise the numpy
reference implementation is used. Both produce bit-identical results,
which tests enforce, so backend choice never changes simulation output.
"""

from . import pyref

try:
    from . import _fastkern as _impl
    BACKEND = "compiled"
except ImportError:  # extension not built
    _impl = pyref
    BACKEND = "pure-python"

quantize_counts = _impl.quantize_counts
convert_counts = _impl.convert_counts
ewise_levels = _impl.ewise_levels
ewise_convert = _impl.ewise_convert


def get_backend(name: str):
    """Explicit backend lookup, used by the benchmark and equivalence tests."""
    if name == "pure-python":
        return pyref
    if name == "compiled":
        if BACKEND != "compiled":
            raise ImportError("compiled kernel extension is not built")
        return _impl
    raise ValueError(f"unknown backend {name!r}")
