"""Time steppers: primitive RK4, exact-kernel Duhamel, and the induction form.

All three advance the same dynamics from t = 1:

  * ``step_primitive`` -- classical RK4 on the first-order (u, v, psi) system,
    each stage Leray-projected.
  * ``step_duhamel`` -- the second-order damped-wave form advanced by the
    exact propagator pair plus a trapezoidal forcing quadrature with one
    corrector pass; the linear dynamics are integrated exactly.
  * ``step_bform`` -- RK4 on (u, b) with the magnetic field evolved directly;
    used for formulation cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    NormReport,
    energy_of_state,
    norm_report,
    pressure_recover,
)
from .grid import (
    Grid2D,
    SpectralField,
    State,
    deriv,
    inv_laplacian,
    leray_project,
    make_initial_data,
    write_snapshot,
    zero_field,
)
from .grid import full_from_half, half_from_full
from .kernels import khat_all
from .nonlinear import _hat_many_h, _phys_many_h, forcing_terms, time_derivative_fields

__all__ = [
    "CFLError",
    "NumericalAbort",
    "SecondOrderState",
    "BState",
    "RunRecord",
    "cfl_dt_max",
    "initial_time_derivatives",
    "step_primitive",
    "step_duhamel",
    "step_bform",
    "run",
]


class CFLError(ValueError):
    """Requested dt exceeds the advective stability guard."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(
            f"dt = {dt:g} violates the CFL guard; required dt_max = {dt_max:g}"
        )
        self.dt_max = dt_max


class NumericalAbort(RuntimeError):
    """A field stopped being finite; carries the last healthy time."""

    def __init__(self, t_last: float):
        super().__init__(f"non-finite field values; last healthy time t = {t_last:g}")
        self.t_last = t_last


def initial_time_derivatives(state0: State):
    """Rate fields seeding the second-order system; identical to the RHS."""
    return time_derivative_fields(state0)


def cfl_dt_max(state: State) -> float:
    """Advective guard 0.5 / (max|u| kx_max + max|v| ky_max + 1)."""
    g = state.grid
    umax = float(np.max(np.abs(state.u.phys())))
    vmax = float(np.max(np.abs(state.v.phys())))
    return 0.5 / (umax * g.kx_max + vmax * g.ky_max + 1.0)


def _linear_rhs(state: State):
    g = state.grid
    kx, ky = g.kxg, g.kyg
    du = -state.u.coeffs - kx * ky * state.psi.coeffs
    dv = -state.v.coeffs + kx * kx * state.psi.coeffs
    dpsi = -state.v.coeffs
    return (
        SpectralField(g, du),
        SpectralField(g, dv),
        SpectralField(g, dpsi),
    )


def step_primitive(state: State, dt: float, nonlinear: bool = True) -> State:
    """One RK4 step of the first-order system with per-stage projection."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    dt_max = cfl_dt_max(state)
    if dt > dt_max:
        raise CFLError(dt, dt_max)

    def rhs(s: State):
        du, dv, dpsi = (
            time_derivative_fields(s) if nonlinear else _linear_rhs(s)
        )
        du, dv = leray_project(du, dv)
        return du, dv, dpsi

    def advance(s: State, h: float, k) -> State:
        return State(s.u + h * k[0], s.v + h * k[1], s.psi + h * k[2], s.t + h)

    k1 = rhs(state)
    k2 = rhs(advance(state, dt / 2.0, k1))
    k3 = rhs(advance(state, dt / 2.0, k2))
    k4 = rhs(advance(state, dt, k3))
    h6 = dt / 6.0
    return State(
        state.u + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        state.v + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        state.psi + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        state.t + dt,
    )


# ---------------------------------------------------------------------------
# second-order / Duhamel stepper
# ---------------------------------------------------------------------------


@dataclass
class SecondOrderState:
    """(u, v, psi) together with cached time derivatives for the wave form."""

    u: SpectralField
    v: SpectralField
    psi: SpectralField
    ut: SpectralField
    vt: SpectralField
    psit: SpectralField
    t: float

    @classmethod
    def from_state(cls, state: State) -> "SecondOrderState":
        ut, vt, psit = initial_time_derivatives(state)
        return cls(state.u.copy(), state.v.copy(), state.psi.copy(), ut, vt, psit, state.t)

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def state(self) -> State:
        return State(self.u, self.v, self.psi, self.t)

    def derivatives(self):
        return self.ut, self.vt, self.psit


def step_duhamel(ss: SecondOrderState, dt: float, nonlinear: bool = True) -> SecondOrderState:
    """Exact homogeneous propagation plus corrected trapezoidal forcing.

    Each pair (phi, phi_t) is advanced with (K0, K1) and their derivative
    multipliers; the forcing integral over one step uses nodes at both ends
    (the left-end kernel weight of the value channel is K1(0) = 0) with the
    end forcing recomputed once from the predicted state.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    g = ss.grid
    k0, k1, dk0, dk1 = (m[:, None] for m in khat_all(dt, g.kx))

    def hom(phi: SpectralField, phit: SpectralField):
        mixed = 0.5 * phi.coeffs + phit.coeffs
        return k0 * phi.coeffs + k1 * mixed, dk0 * phi.coeffs + dk1 * mixed

    pairs = ((ss.u, ss.ut), (ss.v, ss.vt), (ss.psi, ss.psit))
    hom_vals = [hom(phi, phit) for phi, phit in pairs]

    if not nonlinear:
        new = [
            (SpectralField(g, a), SpectralField(g, b)) for a, b in hom_vals
        ]
        return SecondOrderState(
            new[0][0], new[1][0], new[2][0], new[0][1], new[1][1], new[2][1], ss.t + dt
        )

    f_now = forcing_terms(ss.state())
    f_now_per_field = (f_now.f1, f_now.f2, f_now.f0)  # u, v, psi channels

    half = dt / 2.0
    predicted = [
        SpectralField(g, hv[0] + half * (k1 * fc.coeffs))
        for hv, fc in zip(hom_vals, f_now_per_field)
    ]
    pred_state = State(predicted[0], predicted[1], predicted[2], ss.t + dt)
    f_end = forcing_terms(pred_state)
    f_end_per_field = (f_end.f1, f_end.f2, f_end.f0)

    out_fields = []
    out_rates = []
    for hv, fc, fe in zip(hom_vals, f_now_per_field, f_end_per_field):
        out_fields.append(SpectralField(g, hv[0] + half * (k1 * fc.coeffs)))
        out_rates.append(
            SpectralField(g, hv[1] + half * (dk1 * fc.coeffs + fe.coeffs))
        )
    return SecondOrderState(
        out_fields[0], out_fields[1], out_fields[2],
        out_rates[0], out_rates[1], out_rates[2],
        ss.t + dt,
    )


# ---------------------------------------------------------------------------
# induction-form stepper
# ---------------------------------------------------------------------------


@dataclass
class BState:
    """Velocity and magnetic components; both solenoidal.

    The magnetic field determines the stream function only up to a constant,
    so the gauge scalar ``psi_mean`` is carried alongside (its exact dynamics
    is d/dt mean(psi) = -mean(v), and mean(v) decays as e^{-(t-1)}).
    """

    u: SpectralField
    v: SpectralField
    bx: SpectralField
    by: SpectralField
    t: float
    psi_mean: float = 0.0

    @classmethod
    def from_stream(cls, state: State) -> "BState":
        bx = deriv(state.psi, "y")
        bx.coeffs[0, 0] += 1.0  # equilibrium field (1, 0)
        by = -1.0 * deriv(state.psi, "x")
        return cls(state.u.copy(), state.v.copy(), bx, by, state.t, state.psi.mean)

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def to_state(self) -> State:
        """Recover the stream form: lap(psi) = d_y bx - d_x by."""
        curl = deriv(self.bx, "y") - deriv(self.by, "x")
        psi = inv_laplacian(curl)
        psi.coeffs[0, 0] = self.psi_mean
        return State(self.u.copy(), self.v.copy(), psi, self.t)


def _leray_h(grid, w1, w2):
    kx, ky = grid.kxg, grid.kyg_half
    corr = (kx * w1 + ky * w2) * grid.inv_k2_half
    return w1 - kx * corr, w2 - ky * corr


def _bform_rhs(bs: BState):
    g = bs.grid
    ikx, iky = 1j * g.kxg, 1j * g.kyg_half
    halves = [half_from_full(g, f.coeffs) for f in (bs.u, bs.v, bs.bx, bs.by)]
    stacks = _phys_many_h(
        g,
        halves + [ikx * c for c in halves] + [iky * c for c in halves],
    )
    up, vp, bxp, byp = stacks[0:4]
    gradx = stacks[4:8]
    grady = stacks[8:12]

    def advect(ax, ay, wx, wy):
        return ax * wx + ay * wy

    conv_u, conv_v, lor_u, lor_v, adv_bx, adv_by, str_bx, str_by = _hat_many_h(
        g,
        (
            advect(up, vp, gradx[0], grady[0]),   # (u . grad) u
            advect(up, vp, gradx[1], grady[1]),   # (u . grad) v
            advect(bxp, byp, gradx[2], grady[2]),  # (b . grad) bx
            advect(bxp, byp, gradx[3], grady[3]),  # (b . grad) by
            advect(up, vp, gradx[2], grady[2]),   # (u . grad) bx
            advect(up, vp, gradx[3], grady[3]),   # (u . grad) by
            advect(bxp, byp, gradx[0], grady[0]),  # (b . grad) u
            advect(bxp, byp, gradx[1], grady[1]),  # (b . grad) v
        ),
    )
    # momentum: P(-u. grad u + b. grad b) - u
    du_h, dv_h = _leray_h(g, -conv_u + lor_u, -conv_v + lor_v)
    du_h -= halves[0]
    dv_h -= halves[1]

    # induction: -u. grad b + b. grad u
    dbx_h, dby_h = _leray_h(g, -adv_bx + str_bx, -adv_by + str_by)
    return (
        SpectralField(g, full_from_half(g, du_h)),
        SpectralField(g, full_from_half(g, dv_h)),
        SpectralField(g, full_from_half(g, dbx_h)),
        SpectralField(g, full_from_half(g, dby_h)),
    )


def step_bform(bs: BState, dt: float) -> BState:
    """One RK4 step of the velocity/induction formulation."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    dt_max = cfl_dt_max(State(bs.u, bs.v, bs.bx, bs.t))
    if dt > dt_max:
        raise CFLError(dt, dt_max)

    def advance(s: BState, h: float, k) -> BState:
        return BState(s.u + h * k[0], s.v + h * k[1], s.bx + h * k[2], s.by + h * k[3], s.t + h)

    k1 = _bform_rhs(bs)
    k2 = _bform_rhs(advance(bs, dt / 2.0, k1))
    k3 = _bform_rhs(advance(bs, dt / 2.0, k2))
    k4 = _bform_rhs(advance(bs, dt, k3))
    h6 = dt / 6.0
    # the gauge mean obeys mean(psi)' = -mean(v) with mean(v)' = -mean(v)
    v_mean = float(bs.v.coeffs[0, 0].real)
    return BState(
        bs.u + h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        bs.v + h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        bs.bx + h6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        bs.by + h6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
        bs.t + dt,
        bs.psi_mean - v_mean * (1.0 - np.exp(-dt)),
    )


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    times: list = field(default_factory=list)
    reports: list = field(default_factory=list)  # NormReport per recorded time
    energy: list = field(default_factory=list)  # E
    dissipation: list = field(default_factory=list)  # ||u||_2^2
    snapshots: list = field(default_factory=list)
    aborted: bool = False
    abort_time: float | None = None
    final_state: State | None = None


def _finite(*fields: SpectralField) -> bool:
    return all(np.all(np.isfinite(f.coeffs)) for f in fields)


def run(cfg, progress=None) -> RunRecord:
    """Advance from t = 1 to cfg.time.t_end, recording reports at the cadence.

    Deterministic for a fixed config.  On loss of finiteness the record is
    returned with ``aborted`` set and the last healthy time; recorded rows and
    snapshots up to that point are kept.
    """
    grid = Grid2D(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)
    state0 = make_initial_data(grid, cfg.ic.kind, cfg.ic.amplitude, cfg.ic.params())
    dt = cfg.time.dt
    n_steps = max(0, round((cfg.time.t_end - 1.0) / dt))
    report_every = max(1, round(cfg.diag.cadence / dt))
    snap_every = (
        max(1, round(cfg.output.snapshot_cadence / dt))
        if cfg.output.snapshot_cadence > 0
        else 0
    )

    stepper = cfg.time.stepper
    if stepper == "duhamel":
        work = SecondOrderState.from_state(state0)
    elif stepper == "bform":
        work = BState.from_stream(state0)
    else:
        work = state0

    record = RunRecord()

    def current_state_and_derivs():
        if stepper == "duhamel":
            return work.state(), work.derivatives()
        if stepper == "bform":
            return work.to_state(), None
        return work, None

    def record_report(step_index: int):
        st, derivs = current_state_and_derivs()
        t = 1.0 + step_index * dt
        st = State(st.u, st.v, st.psi, t)
        rep = norm_report(
            st,
            n=cfg.diag.n,
            eps=cfg.diag.eps,
            derivatives=derivs,
            pressure=pressure_recover(st),
            commutator_sigma=cfg.diag.n,
        )
        e, u2 = energy_of_state(st)
        record.times.append(t)
        record.reports.append(rep)
        record.energy.append(e)
        record.dissipation.append(u2)
        if progress is not None:
            progress(t, rep)

    def write_snap(step_index: int):
        if not cfg.output.snapshot_dir:
            return
        st, _ = current_state_and_derivs()
        t = 1.0 + step_index * dt
        path = f"{cfg.output.snapshot_dir}/snap_t{t:012.5f}.mhd2"
        write_snapshot(path, State(st.u, st.v, st.psi, t))
        record.snapshots.append(path)

    record_report(0)
    if snap_every:
        write_snap(0)

    for i in range(1, n_steps + 1):
        if stepper == "duhamel":
            work = step_duhamel(work, dt)
            ok = _finite(work.u, work.v, work.psi, work.ut, work.vt, work.psit)
        elif stepper == "bform":
            work = step_bform(work, dt)
            ok = _finite(work.u, work.v, work.bx, work.by)
        else:
            work = step_primitive(work, dt)
            ok = _finite(work.u, work.v, work.psi)
        if not ok:
            record.aborted = True
            record.abort_time = 1.0 + (i - 1) * dt
            return record
        if i % report_every == 0 or i == n_steps:
            record_report(i)
        if snap_every and i % snap_every == 0:
            write_snap(i)

    st, _ = current_state_and_derivs()
    record.final_state = State(st.u, st.v, st.psi, 1.0 + n_steps * dt)
    return record
