"""Best-effort glibc malloc tuning for grid-array churn.

The steppers allocate and free many ~1 MB arrays per step; with glibc's
default mmap threshold each one round-trips through mmap/munmap and the
page-fault cost roughly doubles a step.  Keeping large blocks on the heap
(M_MMAP_MAX = 0) and disabling trimming removes that overhead.  No-op on
platforms without glibc's mallopt.
"""

import ctypes

_M_MMAP_MAX = -4
_M_TRIM_THRESHOLD = -1

_applied = False


def tune_allocator() -> bool:
    global _applied
    if _applied:
        return True
    try:
        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(_M_MMAP_MAX, 0)
        libc.mallopt(_M_TRIM_THRESHOLD, -1)
    except (OSError, AttributeError):
        return False
    _applied = True
    return True
