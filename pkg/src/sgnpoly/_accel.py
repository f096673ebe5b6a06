"""Backend selection for the hot kernels.

Set ``SGNPOLY_NUMBA=0`` to force the pure-numpy path (also used automatically
when numba is not importable).  ``SGNPOLY_THREADS`` caps numba's thread pool.
Both paths compute the same per-row / per-pair quantities and reduce them in
the same order, so results agree to rounding (~1e-12 relative).
"""
from __future__ import annotations

import contextlib
import os
import warnings

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


_use_numba = HAVE_NUMBA and _env_flag("SGNPOLY_NUMBA", True)


def _pick_threading_layer() -> None:
    # parallel kernels may be entered from several harness threads at once,
    # which the default workqueue layer does not allow
    if not HAVE_NUMBA or "NUMBA_THREADING_LAYER" in os.environ:
        return
    try:
        from numba.np.ufunc import omppool  # noqa: F401

        numba.config.THREADING_LAYER = "omp"
    except ImportError:
        numba.config.THREADING_LAYER = "threadsafe"


_pick_threading_layer()


def _apply_thread_cap() -> None:
    raw = os.environ.get("SGNPOLY_THREADS")
    if not raw or not HAVE_NUMBA:
        return
    try:
        want = int(raw)
    except ValueError:
        warnings.warn(f"ignoring non-integer SGNPOLY_THREADS={raw!r}")
        return
    want = max(1, min(want, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(want)


_apply_thread_cap()


def use_numba() -> bool:
    return _use_numba


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _use_numba
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return "numba" if _use_numba else "numpy"


@contextlib.contextmanager
def backend(name: str):
    prev = backend_name()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def thread_count() -> int:
    """Worker count for rep-level parallelism (harness)."""
    raw = os.environ.get("SGNPOLY_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


if HAVE_NUMBA:
    njit = numba.njit
    prange = numba.prange
else:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

    prange = range
