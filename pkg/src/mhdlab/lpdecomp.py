"""Smooth dyadic frequency projectors and Riesz-multiplier diagnostics."""

from __future__ import annotations

import numpy as np

from .grid import SpectralField, bessel, modulus_power, nonlocal_op

__all__ = [
    "bump",
    "project",
    "riesz_apply",
    "lemma_ratio_diagnostic",
]


def bump(r):
    """Radial cutoff: 1 on [0, 1], 0 on [2, inf), smooth monotone ramp between.

    Ramp: exp(1 - 1/(1 - (r-1)^2)) on (1, 2).
    """
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    mid = (r > 1.0) & (r < 2.0)
    s = r[mid] - 1.0
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - s * s))
    if out.ndim == 0:
        return float(out)
    return out


def _profile(grid, m: float, axis: str | None):
    if m <= 0:
        raise ValueError("projector scale M must be > 0")
    if axis is None:
        mod = np.sqrt(grid.k2)
    elif axis == "x":
        mod = np.abs(np.broadcast_to(grid.kxg, (grid.nx, grid.ny)))
    elif axis == "y":
        mod = np.abs(np.broadcast_to(grid.kyg, (grid.nx, grid.ny)))
    else:
        raise ValueError("axis must be None, 'x' or 'y'")
    return mod / m


def project(f: SpectralField, m: float, mode: str, axis: str | None = None) -> SpectralField:
    """Smooth frequency truncation at scale M.

    mode 'leq' keeps |k| <~ 2M, 'gt' the complement, 'band' the dyadic shell.
    By default the full 2D modulus is truncated; ``axis`` restricts the
    truncation to one frequency variable for sensitivity studies.
    """
    r = _profile(f.grid, m, axis)
    if mode == "leq":
        mult = bump(r)
    elif mode == "gt":
        mult = 1.0 - bump(r)
    elif mode == "band":
        mult = bump(r) - bump(2.0 * r)
    else:
        raise ValueError("mode must be 'leq', 'gt' or 'band'")
    return SpectralField(f.grid, f.coeffs * mult)


def riesz_apply(f: SpectralField, pattern) -> SpectralField:
    """Compose signed Riesz-type multipliers.

    ``pattern`` is a nonempty list of (a, b) or (a, b, sign) entries; each
    applies sign * k_a k_b / |k|^2.  Every factor has modulus <= 1 and zeroes
    the k = 0 mode.
    """
    if not pattern:
        raise ValueError("pattern must be nonempty")
    out = f
    for entry in pattern:
        if len(entry) == 2:
            a, b = entry
            sign = 1.0
        else:
            a, b, sign = entry
        out = nonlocal_op(out, a, b)
        if sign != 1.0:
            out = sign * out
    return out


def _l1(f: SpectralField) -> float:
    return float(np.sum(np.abs(f.phys())) * f.grid.cell_area)


def lemma_ratio_diagnostic(
    f: SpectralField, alpha: float, eps: float, n0: float = 0.0
) -> float:
    """Measured constant of the mixed-Riesz interpolation bound.

    Ratio of || |grad|^alpha <grad>^n0 (dxdy/(-lap)) f ||_1 against
    ||f||_1^(1-alpha+eps) ||f_x||_1^(alpha-eps) + || <grad>^(n0-1+alpha+eps) f_x ||_1.
    Both sides are homogeneous of degree one in f, so the ratio is scale
    invariant.  Reported, never asserted against a constant.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if not np.any(f.coeffs):
        raise ValueError("f must be nonzero")

    lhs_field = modulus_power(bessel(-1.0 * nonlocal_op(f, "x", "y"), n0), alpha)
    lhs = _l1(lhs_field)

    from .grid import deriv

    fx = deriv(f, "x")
    term1 = _l1(f) ** (1.0 - alpha + eps) * _l1(fx) ** (alpha - eps)
    term2 = _l1(bessel(fx, n0 - 1.0 + alpha + eps))
    rhs = term1 + term2
    if rhs == 0.0:
        return float("inf")
    return lhs / rhs
