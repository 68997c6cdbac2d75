"""Shared independent oracles and state generators for the test suite."""

import numpy as np

from mhdlab.grid import (
    Grid2D,
    SpectralField,
    State,
    dealias,
    field_from_coeffs,
    field_from_phys,
    leray_project,
)


def rk4_mode_values(xi, t, p0, p1, h_target=1e-3):
    """RK4 integration of phi'' + phi' + xi^2 phi = 0 from (p0, p1) to time t.

    The one-step RK4 update of this linear system is a fixed 2x2 matrix
    polynomial in the companion matrix; n identical steps are composed by
    binary exponentiation, which reproduces the stepped trajectory to
    roundoff at negligible cost.  Vectorized over samples.
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    t = np.atleast_1d(np.asarray(t, float))
    p0 = np.atleast_1d(np.asarray(p0, float))
    p1 = np.atleast_1d(np.asarray(p1, float))
    steps = np.maximum(np.ceil(t / h_target).astype(np.int64), 1)
    steps[t == 0] = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(steps > 0, t / np.maximum(steps, 1), 0.0)

    # companion matrix A = [[0, 1], [-xi^2, -1]]
    a00 = np.zeros_like(xi)
    a01 = np.ones_like(xi)
    a10 = -(xi**2)
    a11 = -np.ones_like(xi)

    def mat_mul(x, y):
        x00, x01, x10, x11 = x
        y00, y01, y10, y11 = y
        return (
            x00 * y00 + x01 * y10,
            x00 * y01 + x01 * y11,
            x10 * y00 + x11 * y10,
            x10 * y01 + x11 * y11,
        )

    # one-step matrix I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24
    ha = (h * a00, h * a01, h * a10, h * a11)
    m = (1.0 + 0 * h, 0 * h, 0 * h, 1.0 + 0 * h)
    term = (1.0 + 0 * h, 0 * h, 0 * h, 1.0 + 0 * h)
    for k in (1, 2, 3, 4):
        term = mat_mul(term, ha)
        term = tuple(c / k for c in term)
        m = tuple(mc + tc for mc, tc in zip(m, term))

    # R = M^steps by binary exponentiation with per-sample exponents
    r = [np.ones_like(h), np.zeros_like(h), np.zeros_like(h), np.ones_like(h)]
    p = list(m)
    e = steps.copy()
    while np.any(e > 0):
        odd = (e & 1).astype(bool)
        if np.any(odd):
            new_r = mat_mul(tuple(p), tuple(r))
            for i in range(4):
                r[i] = np.where(odd, new_r[i], r[i])
        e >>= 1
        if np.any(e > 0):
            p = list(mat_mul(tuple(p), tuple(p)))

    return r[0] * p0 + r[1] * p1


def rk4_mode_values_loop(xi, t, p0, p1, h_target=1e-3):
    """Plain sequential RK4 of the same mode equation (cross-check)."""
    steps = max(int(np.ceil(t / h_target)), 1) if t > 0 else 0
    h = t / steps if steps else 0.0
    y, yd = float(p0), float(p1)
    for _ in range(steps):
        k1a, k1b = yd, -yd - xi**2 * y
        y2, yd2 = y + h / 2 * k1a, yd + h / 2 * k1b
        k2a, k2b = yd2, -yd2 - xi**2 * y2
        y3, yd3 = y + h / 2 * k2a, yd + h / 2 * k2b
        k3a, k3b = yd3, -yd3 - xi**2 * y3
        y4, yd4 = y + h * k3a, yd + h * k3b
        k4a, k4b = yd4, -yd4 - xi**2 * y4
        y += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        yd += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
    return y


def random_field(grid: Grid2D, rng, amplitude=1.0, decay=0.25) -> SpectralField:
    """Random real dealiased field with smoothly decaying spectrum."""
    c = rng.standard_normal((grid.nx, grid.ny)) + 1j * rng.standard_normal(
        (grid.nx, grid.ny)
    )
    c *= np.exp(-decay * grid.k2)
    f = field_from_coeffs(grid, c)
    phys = f.phys()
    scale = np.max(np.abs(phys))
    if scale == 0:
        scale = 1.0
    return field_from_phys(grid, phys * (amplitude / scale))


def random_state(grid: Grid2D, rng, amplitude=1e-3) -> State:
    """Random dealiased divergence-free state at t = 1."""
    chi = random_field(grid, rng, amplitude)
    from mhdlab.grid import deriv

    u = deriv(chi, "y")
    v = -1.0 * deriv(chi, "x")
    u, v = leray_project(u, v)
    psi = random_field(grid, rng, amplitude)
    return State(u, v, dealias(psi), t=1.0)


def field_gap_l2(f, g) -> float:
    return float(np.linalg.norm(f.coeffs - g.coeffs))


def rel_gap(f, g) -> float:
    num = np.linalg.norm(f.coeffs - g.coeffs)
    den = max(np.linalg.norm(f.coeffs), np.linalg.norm(g.coeffs))
    return float(num / den) if den else 0.0
