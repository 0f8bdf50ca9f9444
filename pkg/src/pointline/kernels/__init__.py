"""Backend dispatch for the hot loops.

Compiled numba kernels are used by default. Set ``POINTLINE_DISABLE_NUMBA=1`` (or
call :func:`use_backend`) to run the pure-numpy implementations instead. The
choice is read at call time so tests can flip it.
"""
from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

ENV_FLAG = "POINTLINE_DISABLE_NUMBA"
BACKENDS = ("numba", "numpy")

_override: str | None = None
_numba_ok: bool | None = None


def numba_available() -> bool:
    global _numba_ok
    if _numba_ok is None:
        try:
            import numba  # noqa: F401

            _numba_ok = True
        except ImportError:  # pragma: no cover
            _numba_ok = False
    return _numba_ok


def backend_name() -> str:
    if _override is not None:
        return _override
    if os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no"):
        return "numpy"
    return "numba" if numba_available() else "numpy"


@contextmanager
def use_backend(name: str):
    """Temporarily force a backend."""
    global _override
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and not numba_available():
        raise RuntimeError("numba is not installed")
    prev = _override
    _override = name
    try:
        yield
    finally:
        _override = prev


def _impl():
    if backend_name() == "numba":
        from . import _numba

        return _numba
    from . import _numpy

    return _numpy


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def enumerate_block(j: int, P, N, D, B):
    """Candidates with first index ``j``: ``(rot (m,2), trans (m,2), prov (m,3))``."""
    return _impl().enumerate_block(int(j), _f64(P), _f64(N), _f64(D), _f64(B))


def candidate_costs(rot, trans, P, N, B, scale, weights, lip_kind: int, lip_param: float, outer_kind: int, trim_k: int):
    return _impl().candidate_costs(
        _f64(rot).reshape(-1, 2),
        _f64(trans).reshape(-1, 2),
        _f64(P),
        _f64(N),
        _f64(B),
        _f64(scale),
        _f64(weights),
        int(lip_kind),
        float(lip_param),
        int(outer_kind),
        int(trim_k),
    )


def hungarian(M):
    M = _f64(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("cost matrix must be square")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return _impl().hungarian(M)


def matching_costs(rot, trans, P, N, B, scale, lip_kind: int, lip_param: float):
    return _impl().matching_costs(
        _f64(rot).reshape(-1, 2),
        _f64(trans).reshape(-1, 2),
        _f64(P),
        _f64(N),
        _f64(B),
        _f64(scale),
        int(lip_kind),
        float(lip_param),
    )
