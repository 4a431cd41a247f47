"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
pure-Python module ``_pykernels`` is used.  :func:`use_backend` switches at run
time (tests and the benchmark compare the two).
"""

from contextlib import contextmanager

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

KERNEL_NAMES = (
    "squeeze_points",
    "push_segments",
    "flat_norm_search",
    "sturm_counts",
    "clip_volume",
    "simplex_max",
    "greedy_pack",
    "segment_line_counts",
)

_active = {"name": "compiled" if _ckernels is not None else "python"}


def available_backends():
    """Names of the backends that can be selected."""
    return ("compiled", "python") if _ckernels is not None else ("python",)


def backend():
    """Name of the backend currently in use."""
    return _active["name"]


def use_backend(name):
    """Select ``"compiled"`` or ``"python"`` kernels for subsequent calls."""
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; choose from {available_backends()}")
    _active["name"] = name


@contextmanager
def backend_scope(name):
    """Temporarily select a backend inside a ``with`` block."""
    prev = backend()
    use_backend(name)
    try:
        yield
    finally:
        use_backend(prev)


def _impl():
    return _ckernels if _active["name"] == "compiled" else _pykernels


def _f(a):
    # memoryviews in the extension need writable, contiguous float64 buffers
    return np.require(a, np.float64, ["C", "W"])


def squeeze_points(X, l, s, eps, offset):
    return _impl().squeeze_points(_f(X), l, s, eps, _f(offset))


def push_segments(A, B, l, s, eps, offset):
    return _impl().push_segments(_f(A), _f(B), l, s, eps, _f(offset))


def flat_norm_search(bnd_masks, c_mask, w_cell, w_face):
    # integer weights keep the comparisons exact; the extension takes C longs
    if int(w_cell) != w_cell or int(w_face) != w_face:
        raise ValueError("flat norm weights must be integers")
    w_cell, w_face = int(w_cell), int(w_face)
    # masks wider than 64 bits only fit the arbitrary-precision Python version
    if _active["name"] == "compiled" and (
        max([int(c_mask)] + [int(v) for v in bnd_masks]) >= 1 << 64
    ):
        return _pykernels.flat_norm_search(bnd_masks, c_mask, w_cell, w_face)
    return _impl().flat_norm_search(bnd_masks, c_mask, w_cell, w_face)


def sturm_counts(C, lo, hi):
    return _impl().sturm_counts(_f(C), _f(lo), _f(hi))


def clip_volume(F, v, t):
    return _impl().clip_volume(_f(F), _f(v), t)


def simplex_max(c, A, b, tol=1e-10, max_iter=5000):
    return _impl().simplex_max(_f(c), _f(A), _f(b), tol, max_iter)


def greedy_pack(cands, radii, cell):
    return _impl().greedy_pack(_f(cands), _f(radii), cell)


def segment_line_counts(P0, P1, theta, offs):
    return _impl().segment_line_counts(_f(P0), _f(P1), _f(theta), _f(offs))
