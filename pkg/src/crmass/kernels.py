"""Hot pairwise kernels, compiled when the extension is available.

The Cython module ``_kernels`` is preferred; the numpy module ``_kernels_py``
is used when the extension failed to build or ``CRMASS_PURE_PYTHON=1`` is set.
``BACKEND`` names the active implementation.
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("CRMASS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def backend(name=None):
    """Kernel module by name ("compiled" or "python"); the active one by default."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("the compiled kernel extension is not available")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64).ravel()


def heis_log_pair_sum(x, y, t, m, diag, impl=None):
    """sum_{i != j} m_i m_j ln d_K(p_i, p_j) + sum_i m_i^2 diag_i.

    d_K is the Koranyi gauge of p_i . p_j^{-1}.  Coincident distinct nodes give -inf.
    """
    impl = impl or _impl
    return float(impl.heis_log_pair_sum(_f64(x), _f64(y), _f64(t), _f64(m), _f64(diag)))


def sphere_ball_masses(c1, c2, z1, z2, w, thresh, impl=None):
    """Per centre c, the w-mass of nodes q with |1 - c . conj(q)| < thresh."""
    impl = impl or _impl
    c1, c2 = np.asarray(c1, dtype=complex).ravel(), np.asarray(c2, dtype=complex).ravel()
    z1, z2 = np.asarray(z1, dtype=complex).ravel(), np.asarray(z2, dtype=complex).ravel()
    return np.asarray(impl.sphere_ball_masses(
        _f64(c1.real), _f64(c1.imag), _f64(c2.real), _f64(c2.imag),
        _f64(z1.real), _f64(z1.imag), _f64(z2.real), _f64(z2.imag), _f64(w), float(thresh)))
