"""Norms, time-weighted component reports, pressure recovery, decay fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import SpectralField, State, bessel, deriv, nonlocal_op
from .nonlinear import _hat_many, _phys_many, time_derivative_fields, transport

__all__ = [
    "NormComponent",
    "NormReport",
    "DecayFit",
    "DecayFitError",
    "WeightedL1",
    "X0Norm",
    "l2_norm",
    "linf_norm",
    "sobolev_norm",
    "weighted_l1",
    "x0_norm",
    "norm_report",
    "pressure_recover",
    "decay_fit",
    "energy_of_state",
    "energy_report",
    "energy_residuals",
    "commutator_norm",
]


def l2_norm(f: SpectralField) -> float:
    """Physical L2 norm via Parseval on the normalized coefficients."""
    g = f.grid
    return float(math.sqrt(g.lx * g.ly) * np.linalg.norm(f.coeffs))


def linf_norm(f: SpectralField) -> float:
    return float(np.max(np.abs(f.phys())))


def sobolev_norm(f: SpectralField, s: float, p) -> float:
    """Bessel-potential norm of order s; p = 2 spectrally, p = inf on the grid."""
    if p == 2:
        g = f.grid
        w = (1.0 + g.k2) ** (s / 2.0)
        return float(math.sqrt(g.lx * g.ly) * np.linalg.norm(w * f.coeffs))
    if p in ("inf", np.inf, math.inf):
        return linf_norm(bessel(f, s))
    raise ValueError("p must be 2 or inf")


@dataclass
class WeightedL1:
    value: float
    localized: bool
    boundary_ratio: float


def weighted_l1(f: SpectralField, w: float) -> WeightedL1:
    """Grid quadrature of (1 + r^2)^(w/2) |f| with r from the box center.

    Meaningful for localized fields only; a field whose boundary magnitude
    exceeds 1e-8 of its max is flagged as non-localized.
    """
    if w < 0:
        raise ValueError("weight must be >= 0")
    g = f.grid
    vals = f.phys()
    X, Y = g.mesh
    r2 = (X - g.lx / 2.0) ** 2 + (Y - g.ly / 2.0) ** 2
    value = float(np.sum((1.0 + r2) ** (w / 2.0) * np.abs(vals)) * g.cell_area)

    amax = float(np.max(np.abs(vals)))
    if amax == 0.0:
        return WeightedL1(0.0, True, 0.0)
    edge = max(
        np.max(np.abs(vals[0, :])),
        np.max(np.abs(vals[-1, :])),
        np.max(np.abs(vals[:, 0])),
        np.max(np.abs(vals[:, -1])),
    )
    ratio = float(edge / amax)
    return WeightedL1(value, ratio <= 1e-8, ratio)


@dataclass
class X0Norm:
    value: float
    sobolev: float
    data_l1: float
    derivative_l1: float
    localized: bool


def x0_norm(state: State, n: float = 5.0, weight: float = 6.1, derivatives=None) -> X0Norm:
    """Initial-data norm: Sobolev piece plus weighted-L1 of data and its rate."""
    gx = deriv(state.psi, "x")
    gy = deriv(state.psi, "y")
    sob = math.sqrt(
        sum(sobolev_norm(f, n, 2) ** 2 for f in (state.u, state.v, gx, gy))
    )
    if derivatives is None:
        derivatives = time_derivative_fields(state)
    parts0 = [weighted_l1(f, weight) for f in (state.u, state.v, state.psi)]
    parts1 = [weighted_l1(f, weight) for f in derivatives]
    data_l1 = sum(p.value for p in parts0)
    der_l1 = sum(p.value for p in parts1)
    localized = all(p.localized for p in parts0 + parts1)
    return X0Norm(sob + data_l1 + der_l1, sob, data_l1, der_l1, localized)


# ---------------------------------------------------------------------------
# time-weighted component report
# ---------------------------------------------------------------------------


@dataclass
class NormComponent:
    key: str
    family: str  # "x", "y" or "extra"
    power: float
    raw: float

    @property
    def weighted(self) -> float:
        return self.raw  # replaced in NormReport with the t-weighted value


@dataclass
class NormReport:
    t: float
    components: dict
    n: float
    eps: float

    def raw(self, key: str) -> float:
        return self.components[key].raw

    def weighted(self, key: str) -> float:
        c = self.components[key]
        return c.raw * self.t**c.power

    def keys(self):
        return list(self.components)


def _vec_l2(fields) -> float:
    return math.sqrt(sum(l2_norm(f) ** 2 for f in fields))


def _vec_linf(fields) -> float:
    mag = None
    for f in fields:
        p = f.phys()
        mag = p * p if mag is None else mag + p * p
    return float(np.sqrt(np.max(mag)))


def norm_report(
    state: State,
    t: float | None = None,
    n: float = 5.0,
    eps: float = 0.01,
    derivatives=None,
    pressure: SpectralField | None = None,
    commutator_sigma: float | None = None,
) -> NormReport:
    """All time-weighted solution-norm components at one time.

    ``derivatives`` may pass cached (u_t, v_t, psi_t); otherwise they are
    recomputed from the state.  Each component stores its raw norm; the
    weighted value is raw * t**power.
    """
    t = float(state.t if t is None else t)
    if t < 1:
        raise ValueError("reports are defined for t >= 1")
    if derivatives is None:
        derivatives = time_derivative_fields(state)
    du, dv, _ = derivatives
    psi = state.psi
    u, v = state.u, state.v
    dxx_psi = deriv(psi, "x", 2)

    comps: list[NormComponent] = []

    def add(key, family, power, raw):
        comps.append(NormComponent(key, family, power, float(raw)))

    gx, gy = deriv(psi, "x"), deriv(psi, "y")
    add(f"h{n:g}_uv_gradpsi_l2", "x", -eps,
        _vec_l2([bessel(f, n) for f in (u, v, gx, gy)]))
    add("h3_psi_l2", "x", 0.25, sobolev_norm(psi, 3, 2))
    add("h1_dxx_psi_linf", "x", 1.5, sobolev_norm(dxx_psi, 1, "inf"))
    add("h3_dxx_psi_l2", "x", 1.25, sobolev_norm(dxx_psi, 3, 2))
    add("dxxx_psi_l2", "x", 1.5, l2_norm(deriv(psi, "x", 3)))
    add("dt_uv_linf", "x", 1.5, _vec_linf([du, dv]))
    add("h1_dt_uv_l2", "x", 1.25, _vec_l2([bessel(du, 1), bessel(dv, 1)]))
    add("h1_dx_uv_linf", "x", 1.0,
        _vec_linf([bessel(deriv(u, "x"), 1), bessel(deriv(v, "x"), 1)]))
    add("dx_dt_v_l2", "x", 1.5, l2_norm(deriv(dv, "x")))

    add("h2_psi_linf", "y", 0.5, sobolev_norm(psi, 2, "inf"))
    add("h1_dx_psi_l2", "y", 0.75, sobolev_norm(deriv(psi, "x"), 1, 2))
    add("h3_dx_psi_linf", "y", 1.0, linf_norm(deriv(bessel(psi, 3), "x")))
    add("u_linf", "y", 1.0, linf_norm(u))
    add("v_linf", "y", 1.5, linf_norm(v))
    add("u_l2", "y", 0.75, l2_norm(u))
    add("dx_u_l2", "y", 1.25, l2_norm(deriv(u, "x")))
    add("v_l2", "y", 1.25, l2_norm(v))

    add("psi_linf", "extra", 0.5, linf_norm(psi))
    if pressure is None:
        pressure = pressure_recover(state)
    add("p_linf", "extra", 0.5, linf_norm(pressure))
    if commutator_sigma is not None:
        add("commutator_l2", "extra", 0.0,
            commutator_norm(state, commutator_sigma))

    return NormReport(t, {c.key: c for c in comps}, n, eps)


def pressure_recover(state: State) -> SpectralField:
    """Pressure from the velocity and stream-function fields; zero mean.

    P = -2 psi_y + div div (grad psi (x) grad psi + u (x) u) / (-lap).
    """
    g = state.grid
    up, vp, pxp, pyp = _phys_many(
        g,
        (
            state.u.coeffs, state.v.coeffs,
            1j * g.kxg * state.psi.coeffs, 1j * g.kyg * state.psi.coeffs,
        ),
    )
    t11, t12, t22 = _hat_many(
        g, (pxp * pxp + up * up, pxp * pyp + up * vp, pyp * pyp + vp * vp)
    )
    kx, ky = g.kxg, g.kyg
    quad = -(kx * kx * t11 + 2.0 * kx * ky * t12 + ky * ky * t22) * g.inv_k2
    coeffs = -2.0 * (1j * ky) * state.psi.coeffs + quad
    coeffs[0, 0] = 0.0
    return SpectralField(g, coeffs)


def commutator_norm(state: State, sigma: float, which: str = "psi") -> float:
    """L2 size of <grad>^sigma (u.grad f) - u.grad <grad>^sigma f (diagnostic)."""
    f = {"psi": state.psi, "u": state.u, "v": state.v}[which]
    lhs = bessel(transport(state.u, state.v, f), sigma)
    rhs = transport(state.u, state.v, bessel(f, sigma))
    return l2_norm(lhs - rhs)


# ---------------------------------------------------------------------------
# decay fits
# ---------------------------------------------------------------------------


class DecayFitError(ValueError):
    pass


@dataclass
class DecayFit:
    exponent: float
    stderr: float
    window: tuple[float, float]
    r_squared: float
    n_samples: int
    intercept: float


def decay_fit(series, window) -> DecayFit:
    """Least-squares slope of log(value) against log(t) inside the window."""
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise DecayFitError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    pts = [(float(t), float(v)) for t, v in series if lo <= t <= hi]
    if len(pts) < 8:
        raise DecayFitError(f"need >= 8 in-window samples, got {len(pts)}")
    if any(v <= 0 for _, v in pts):
        raise DecayFitError("nonpositive series values in window")
    x = np.log([t for t, _ in pts])
    y = np.log([v for _, v in pts])
    n = len(pts)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise DecayFitError("degenerate window: all abscissae equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((y - ym) ** 2))
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else float("nan")
    r2 = 1.0 if sst == 0 else 1.0 - ssr / sst
    return DecayFit(slope, stderr, (lo, hi), r2, n, intercept)


# ---------------------------------------------------------------------------
# energy balance
# ---------------------------------------------------------------------------


def energy_of_state(state: State) -> tuple[float, float]:
    """(E, ||u||_2^2) with E = ||u||^2 + ||grad psi||^2."""
    u2 = l2_norm(state.u) ** 2 + l2_norm(state.v) ** 2
    gpsi = l2_norm(deriv(state.psi, "x")) ** 2 + l2_norm(deriv(state.psi, "y")) ** 2
    return u2 + gpsi, u2


def energy_residuals(ts, e, u2) -> np.ndarray:
    """Central-difference balance defect of dE/dt = -2 ||u||^2.

    The dissipation is averaged with Simpson weights over the same stencil,
    which is the quadrature the centered difference of E integrates exactly
    against; endpoints are NaN.
    """
    ts = np.asarray(ts, float)
    e = np.asarray(e, float)
    u2 = np.asarray(u2, float)
    if len(ts) >= 3:
        steps = np.diff(ts)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1e-300):
            raise ValueError("energy series must have uniform cadence")
    out = np.full(len(ts), np.nan)
    if len(ts) < 3:
        return out
    h = ts[1] - ts[0]
    dedt = (e[2:] - e[:-2]) / (2.0 * h)
    diss = (u2[:-2] + 4.0 * u2[1:-1] + u2[2:]) / 3.0
    out[1:-1] = dedt + diss
    return out


def energy_report(history) -> list[tuple[float, float, float, float]]:
    """Rows (t, E, ||u||^2, residual) for a uniformly spaced state history."""
    ts, es, u2s = [], [], []
    for st in history:
        e, u2 = energy_of_state(st)
        ts.append(st.t)
        es.append(e)
        u2s.append(u2)
    res = energy_residuals(ts, es, u2s)
    return [(ts[i], es[i], u2s[i], float(res[i])) for i in range(len(ts))]
