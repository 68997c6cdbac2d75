"""Quadratic terms of the damped MHD system and the second-order forcings.

The pressure-eliminated first-order system for (u, v, psi) is

    u_t = -u + psi_xy + P1,
    v_t = -v - psi_xx + P2,
    psi_t = -(u psi_x + v psi_y) - v,

where (P1, P2) is the divergence-free part of -(u . grad u + lap(psi) grad psi).
Differentiating in time gives damped wave equations with forcings

    F0 = -u.grad(psi) - d/dt (u.grad(psi)) - P2,
    F1 = d/dt P1 - dxdy (u.grad(psi)),
    F2 = d/dt P2 + dxdx (u.grad(psi)),

where every d/dt is expanded analytically through the first-order equations
(product rule on each quadratic monomial), never by finite differencing.

Two independent assemblies of (P1, P2) are kept: the divergence-form tensor
route used in the hot path, and the term-by-term expansion with explicit
Riesz-type multipliers; their agreement is reported as a residual.

All fields here are real, so the hot path works on rfft half spectra
(batched transforms, half-size multiplier arithmetic) and expands back to
the full coefficient table only at the public boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Grid2D,
    SpectralField,
    State,
    _fft2,
    _ifft2,
    _irfft2,
    _rfft2,
    full_from_half,
    half_from_full,
)

__all__ = [
    "PiPair",
    "ForcingTriple",
    "transport",
    "pi_terms",
    "pi_vector",
    "pi_expanded",
    "pi_time_derivative",
    "time_derivative_fields",
    "forcing_terms",
    "f0_expansion_residual",
]


@dataclass
class PiPair:
    pi1: SpectralField
    pi2: SpectralField
    equivalence_residual: float


@dataclass
class ForcingTriple:
    f0: SpectralField
    f1: SpectralField
    f2: SpectralField


# -- full-grid helpers (diagnostic paths) -----------------------------------


def _phys(c: np.ndarray, grid: Grid2D) -> np.ndarray:
    return np.real(_ifft2(c)) * (grid.nx * grid.ny)


def _hat(arr: np.ndarray, grid: Grid2D) -> np.ndarray:
    return (_fft2(arr) / (grid.nx * grid.ny)) * grid.dealias_mask


def _phys_many(grid: Grid2D, coeff_arrays) -> list[np.ndarray]:
    stack = np.stack(coeff_arrays)
    out = np.real(_ifft2(stack)) * (grid.nx * grid.ny)
    return [out[i] for i in range(out.shape[0])]


def _hat_many(grid: Grid2D, real_arrays) -> list[np.ndarray]:
    stack = np.stack(real_arrays)
    out = (_fft2(stack) / (grid.nx * grid.ny)) * grid.dealias_mask
    return [out[i] for i in range(out.shape[0])]


# -- half-spectrum helpers (hot path; real fields only) ----------------------


def _phys_many_h(grid: Grid2D, half_arrays) -> list[np.ndarray]:
    """Batched inverse transforms of half spectra to physical samples."""
    stack = np.stack(half_arrays)
    out = _irfft2(stack, (grid.nx, grid.ny)) * (grid.nx * grid.ny)
    return [out[i] for i in range(out.shape[0])]


def _hat_many_h(grid: Grid2D, real_arrays) -> list[np.ndarray]:
    """Batched dealiased forward transforms to half spectra."""
    stack = np.stack(real_arrays)
    out = (_rfft2(stack) / (grid.nx * grid.ny)) * grid.dealias_mask_half
    return [out[i] for i in range(out.shape[0])]


def transport(u: SpectralField, v: SpectralField, f: SpectralField) -> SpectralField:
    """Dealiased spectral form of u f_x + v f_y."""
    g = u.grid
    fh = half_from_full(g, f.coeffs)
    up, vp, fx, fy = _phys_many_h(
        g,
        (
            half_from_full(g, u.coeffs),
            half_from_full(g, v.coeffs),
            1j * g.kxg * fh,
            1j * g.kyg_half * fh,
        ),
    )
    (out,) = _hat_many_h(g, (up * fx + vp * fy,))
    return SpectralField(g, full_from_half(g, out))


def _source_hats(grid, up, vp, pxp, pyp, dup=None, dvp=None, dpxp=None, dpyp=None):
    """Divergence-form source S = u.grad(u) + lap(psi) grad(psi) and transport.

    Returns half-spectrum (S1, S2, C) with C = u psi_x + v psi_y, assembled
    from the symmetric tensors u (x) u and grad(psi) (x) grad(psi); valid for
    divergence-free u.  With the d-arguments supplied, returns the polarized
    time derivative (each tensor entry differentiated by the product rule).
    """
    if dup is None:
        a11, a12, a22 = up * up, up * vp, vp * vp
        b11, b12, b22 = pxp * pxp, pxp * pyp, pyp * pyp
        c = up * pxp + vp * pyp
    else:
        a11 = 2.0 * up * dup
        a12 = up * dvp + dup * vp
        a22 = 2.0 * vp * dvp
        b11 = 2.0 * pxp * dpxp
        b12 = pxp * dpyp + dpxp * pyp
        b22 = 2.0 * pyp * dpyp
        c = dup * pxp + up * dpxp + dvp * pyp + vp * dpyp
    a11h, a12h, a22h, b11h, b12h, b22h, ch = _hat_many_h(
        grid, (a11, a12, a22, b11, b12, b22, c)
    )
    ikx, iky = 1j * grid.kxg, 1j * grid.kyg_half
    s1 = ikx * (a11h + 0.5 * b11h - 0.5 * b22h) + iky * (a12h + b12h)
    s2 = ikx * (a12h + b12h) + iky * (a22h + 0.5 * b22h - 0.5 * b11h)
    return s1, s2, ch


def _pi_from_source(grid, s1, s2):
    """Divergence-free part with sign: P_i = -S_i + d_i lap^{-1} div S."""
    ikx, iky = 1j * grid.kxg, 1j * grid.kyg_half
    div = ikx * s1 + iky * s2
    corr = -grid.inv_k2_half * div  # lap^{-1} div S
    return -s1 + ikx * corr, -s2 + iky * corr


def _state_phys_h(state: State):
    g = state.grid
    pch = half_from_full(g, state.psi.coeffs)
    return _phys_many_h(
        g,
        (
            half_from_full(g, state.u.coeffs),
            half_from_full(g, state.v.coeffs),
            1j * g.kxg * pch,
            1j * g.kyg_half * pch,
        ),
    )


def pi_vector(state: State) -> tuple[SpectralField, SpectralField]:
    """(P1, P2) via the divergence-form route."""
    g = state.grid
    up, vp, pxp, pyp = _state_phys_h(state)
    s1, s2, _ = _source_hats(g, up, vp, pxp, pyp)
    p1, p2 = _pi_from_source(g, s1, s2)
    return (
        SpectralField(g, full_from_half(g, p1)),
        SpectralField(g, full_from_half(g, p2)),
    )


def pi_expanded(state: State) -> tuple[SpectralField, SpectralField]:
    """(P1, P2) via the term-by-term expansion with explicit multipliers."""
    g = state.grid
    ikx, iky = 1j * g.kxg, 1j * g.kyg

    uc, vc, pc = state.u.coeffs, state.v.coeffs, state.psi.coeffs
    (up, vp, uxp, uyp, vxp, vyp, pxp, pyp, pxxp, pyyp, pxyp) = _phys_many(
        g,
        (
            uc, vc,
            ikx * uc, iky * uc, ikx * vc, iky * vc,
            ikx * pc, iky * pc,
            ikx * ikx * pc, iky * iky * pc, ikx * iky * pc,
        ),
    )

    names = (
        "u_ux", "v_uy", "u_vx", "v_ux", "px_pxx", "px_pyy", "py_pxx", "py_pxy",
        "v_vy", "u_u", "u_v", "py_pyy", "px_px", "px_py",
    )
    pairs = (
        (up, uxp), (vp, uyp), (up, vxp), (vp, uxp), (pxp, pxxp), (pxp, pyyp),
        (pyp, pxxp), (pyp, pxyp),
        (vp, vyp), (up, up), (up, vp), (pyp, pyyp), (pxp, pxp), (pxp, pyp),
    )
    h = dict(zip(names, _hat_many(g, [a * b for a, b in pairs])))

    def nl(hat, a, b):
        ka = g.kxg if a == "x" else g.kyg
        kb = g.kxg if b == "x" else g.kyg
        return hat * ka * kb * g.inv_k2

    pi1 = (
        -h["u_ux"]
        - h["v_uy"]
        + nl(h["u_vx"], "x", "y")
        - nl(h["v_ux"], "x", "y")
        + nl(h["u_ux"], "x", "x")
        + nl(h["v_uy"], "x", "x")
        - h["px_pxx"]
        - h["px_pyy"]
        + nl(h["py_pxx"], "x", "y")
        + nl(h["py_pxy"], "y", "y")
        + nl(h["px_pxx"], "x", "x")
        + nl(h["px_pyy"], "x", "x")
    )
    pi2 = (
        -nl(h["u_vx"], "x", "x")
        - nl(h["v_vy"], "x", "x")
        + ikx * nl(h["u_u"], "x", "y")
        + ikx * nl(h["u_v"], "y", "y")
        - nl(h["py_pxx"], "x", "x")
        - nl(h["py_pyy"], "x", "x")
        + 0.5 * ikx * nl(h["px_px"], "x", "y")
        + ikx * nl(h["px_py"], "y", "y")
        - nl(h["py_pxy"], "x", "y")
    )
    return SpectralField(g, pi1), SpectralField(g, pi2)


def pi_terms(state: State) -> PiPair:
    """Both routes to (P1, P2); the vector-form values are returned."""
    p1, p2 = pi_vector(state)
    e1, e2 = pi_expanded(state)
    num = np.linalg.norm(p1.coeffs - e1.coeffs) ** 2 + np.linalg.norm(p2.coeffs - e2.coeffs) ** 2
    den = np.linalg.norm(p1.coeffs) ** 2 + np.linalg.norm(p2.coeffs) ** 2
    residual = 0.0 if den == 0.0 else float(np.sqrt(num / den))
    return PiPair(p1, p2, residual)


def pi_time_derivative(state: State, dstate):
    """Analytic (d/dt P1, d/dt P2) given the state and its time derivative."""
    g = state.grid
    du, dv, dpsi = dstate
    up, vp, pxp, pyp = _state_phys_h(state)
    dpch = half_from_full(g, dpsi.coeffs)
    dup, dvp, dpxp, dpyp = _phys_many_h(
        g,
        (
            half_from_full(g, du.coeffs),
            half_from_full(g, dv.coeffs),
            1j * g.kxg * dpch,
            1j * g.kyg_half * dpch,
        ),
    )
    s1, s2, _ = _source_hats(g, up, vp, pxp, pyp, dup, dvp, dpxp, dpyp)
    p1, p2 = _pi_from_source(g, s1, s2)
    return (
        SpectralField(g, full_from_half(g, p1)),
        SpectralField(g, full_from_half(g, p2)),
    )


def _rhs_core_h(state: State):
    """Shared half-spectrum evaluation.

    Returns (du, dv, dpsi, pi1, pi2, transport) as half spectra plus the
    physical factor fields.
    """
    g = state.grid
    uch = half_from_full(g, state.u.coeffs)
    vch = half_from_full(g, state.v.coeffs)
    pch = half_from_full(g, state.psi.coeffs)
    up, vp, pxp, pyp = _phys_many_h(
        g, (uch, vch, 1j * g.kxg * pch, 1j * g.kyg_half * pch)
    )
    s1, s2, ch = _source_hats(g, up, vp, pxp, pyp)
    pi1, pi2 = _pi_from_source(g, s1, s2)
    kx, ky = g.kxg, g.kyg_half
    du = -uch - kx * ky * pch + pi1
    dv = -vch + kx * kx * pch + pi2
    dpsi = -ch - vch
    return du, dv, dpsi, pi1, pi2, ch, (up, vp, pxp, pyp)


def time_derivative_fields(state: State):
    """(u_t, v_t, psi_t) of the first-order system; (u_t, v_t) is solenoidal."""
    du, dv, dpsi, *_ = _rhs_core_h(state)
    g = state.grid
    return (
        SpectralField(g, full_from_half(g, du)),
        SpectralField(g, full_from_half(g, dv)),
        SpectralField(g, full_from_half(g, dpsi)),
    )


def forcing_terms(state: State) -> ForcingTriple:
    """Second-order forcings (F0, F1, F2), time derivatives by substitution."""
    g = state.grid
    du, dv, dpsi, pi1, pi2, ch, (up, vp, pxp, pyp) = _rhs_core_h(state)
    dup, dvp, dpxp, dpyp = _phys_many_h(
        g, (du, dv, 1j * g.kxg * dpsi, 1j * g.kyg_half * dpsi)
    )
    ds1, ds2, dch = _source_hats(g, up, vp, pxp, pyp, dup, dvp, dpxp, dpyp)
    dpi1, dpi2 = _pi_from_source(g, ds1, ds2)
    kx, ky = g.kxg, g.kyg_half
    f0 = -ch - dch - pi2
    f1 = dpi1 + kx * ky * ch
    f2 = dpi2 - kx * kx * ch
    return ForcingTriple(
        SpectralField(g, full_from_half(g, f0)),
        SpectralField(g, full_from_half(g, f1)),
        SpectralField(g, full_from_half(g, f2)),
    )


def f0_expansion_residual(state: State) -> float:
    """Relative gap between F0 and its fully substituted expansion.

    The expansion inserts the evolution equations into every time derivative:
    F0 = -P2 - psi_xy psi_x - P1 psi_x + psi_xx psi_y - P2 psi_y
         - u d_x(psi_t) - v d_y(psi_t).
    Agreement is structural (same substitution, different assembly order), so
    the residual is a roundoff-level consistency diagnostic.
    """
    g = state.grid
    ikx, iky = 1j * g.kxg, 1j * g.kyg_half
    f0 = half_from_full(g, forcing_terms(state).f0.coeffs)

    du, dv, dpsi, pi1, pi2, ch, (up, vp, pxp, pyp) = _rhs_core_h(state)
    pch = half_from_full(g, state.psi.coeffs)
    pxyp, pxxp, pi1p, pi2p, ptxp, ptyp = _phys_many_h(
        g,
        (ikx * iky * pch, ikx * ikx * pch, pi1, pi2, ikx * dpsi, iky * dpsi),
    )
    (quad,) = _hat_many_h(
        g,
        (-pxyp * pxp - pi1p * pxp + pxxp * pyp - pi2p * pyp - up * ptxp - vp * ptyp,),
    )
    expanded = -pi2 + quad
    num = np.linalg.norm(f0 - expanded)
    den = np.linalg.norm(f0)
    return float(num) if den == 0 else float(num / den)
