"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with ``pytest -s``).  The
long-horizon decay experiment is executed once and shared by the criteria
that consume it.
"""

import math
import time

import numpy as np
import pytest

from helpers import random_field, random_state, rk4_mode_values
from mhdlab.config import RunConfig, SweepSpec, parse_config
from mhdlab.diagnostics import (
    DecayFit,
    decay_fit,
    energy_of_state,
    energy_residuals,
    l2_norm,
)
from mhdlab.grid import (
    Grid2D,
    deriv,
    field_from_phys,
    leray_project,
    make_initial_data,
)
from mhdlab.harness import RATE_WINDOWS, run_experiment, sweep
from mhdlab.integrate import (
    BState,
    SecondOrderState,
    step_bform,
    step_duhamel,
    step_primitive,
)
from mhdlab.kernels import BOUND_FAMILIES, check_kernel_bounds, khat_all
from mhdlab.lpdecomp import project
from mhdlab.nonlinear import State, forcing_terms, pi_terms
from mhdlab.report import read_series_csv


def announce(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {num:02d} {name}: {status} ({detail})", flush=True)


def small_data_config(nx, dt, t_end, cadence):
    cfg = RunConfig()
    cfg.grid.nx = cfg.grid.ny = nx
    cfg.grid.lx = cfg.grid.ly = 64 * math.pi
    cfg.ic.kind = "gaussian_vortex"
    cfg.ic.amplitude = 1e-3
    cfg.ic.sigma = 1.5
    cfg.time.dt = dt
    cfg.time.t_end = t_end
    cfg.diag.cadence = cadence
    cfg.diag.fit_lo, cfg.diag.fit_hi = 5.0, 50.0
    return cfg


@pytest.fixture(scope="module")
def decay_run(tmp_path_factory):
    """Criterion-7 long-horizon experiment at 512^2 (shared with criterion 8)."""
    cfg = small_data_config(nx=512, dt=0.05, t_end=50.5, cadence=0.25)
    cfg.output.dir = str(tmp_path_factory.mktemp("decay512"))
    cfg.output.figures = True
    t0 = time.perf_counter()
    result = run_experiment(cfg, verbose=False)
    elapsed = time.perf_counter() - t0
    return result, elapsed


def test_c01_kernel_mode_equation_oracle(rng):
    t0 = time.perf_counter()
    n = 200
    xi = rng.uniform(0.0, 4.0, n)
    t = rng.uniform(0.0, 20.0, n)
    p0 = rng.standard_normal(n)
    p1 = rng.standard_normal(n)
    rk4 = rk4_mode_values(xi, t, p0, p1, h_target=1e-3)
    k0, k1, _, _ = khat_all(t, xi)
    closed = k0 * p0 + k1 * (0.5 * p0 + p1)
    rel = np.max(np.abs(closed - rk4) / np.maximum(np.abs(rk4), 1e-290))
    elapsed = time.perf_counter() - t0
    ok = rel <= 1e-8 and elapsed < 1.0
    announce(1, "kernel mode-equation oracle", ok,
             f"max rel err {rel:.2e}, {elapsed:.2f} s")
    assert rel <= 1e-8
    assert elapsed < 1.0


def test_c02_kernel_bound_certification():
    t0 = time.perf_counter()
    ts = np.linspace(0.0, 100.0, 200)
    xis = np.linspace(-4.0, 4.0, 200)
    report = check_kernel_bounds(ts, xis, BOUND_FAMILIES)
    elapsed = time.perf_counter() - t0
    ok = report.all_pass and elapsed < 1.0
    announce(2, "kernel envelope bounds", ok,
             f"{report.n_samples} samples, {report.n_violations} violations, "
             f"max ratio {report.max_ratio:.4f}, {elapsed:.2f} s")
    assert report.all_pass, report.violations[:5]
    assert elapsed < 1.0


def test_c03_dual_form_nonlinearity_equivalence(rng):
    t0 = time.perf_counter()
    grid = Grid2D(128, 128)
    worst = 0.0
    for _ in range(100):
        st = random_state(grid, rng, amplitude=10 ** rng.uniform(-3, -1))
        worst = max(worst, pi_terms(st).equivalence_residual)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30.0
    announce(3, "dual-form quadratic terms", ok,
             f"worst residual {worst:.2e} over 100 states, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 30.0


def test_c04_energy_balance_small_data_run():
    t0 = time.perf_counter()
    cfg = small_data_config(nx=256, dt=1e-2, t_end=10.0, cadence=1e-2)
    grid = Grid2D(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)
    st = make_initial_data(grid, cfg.ic.kind, cfg.ic.amplitude, cfg.ic.params())
    ts, es, u2s = [], [], []
    steps = round((cfg.time.t_end - 1.0) / cfg.time.dt)
    for i in range(steps + 1):
        e, u2 = energy_of_state(st)
        ts.append(st.t)
        es.append(e)
        u2s.append(u2)
        if i < steps:
            st = step_primitive(st, cfg.time.dt)
    res = energy_residuals(ts, es, u2s)
    worst = float(np.nanmax(np.abs(res)))
    bound = 1e-5 * es[0]
    elapsed = time.perf_counter() - t0
    ok = worst <= bound and elapsed < 120.0
    announce(4, "energy balance on [1,10]", ok,
             f"max residual {worst:.2e} vs bound {bound:.2e}, {elapsed:.0f} s")
    assert worst <= bound
    assert elapsed < 120.0


def test_c05_formulation_equivalence():
    t0 = time.perf_counter()
    grid = Grid2D(128, 128, 32 * math.pi, 32 * math.pi)
    st = make_initial_data(grid, "gaussian_vortex", 1e-3, {"sigma": 1.5})
    bs = BState.from_stream(st)
    prim = st
    dt, steps = 1e-2, 200
    worst = 0.0
    for i in range(1, steps + 1):
        bs = step_bform(bs, dt)
        prim = step_primitive(prim, dt)
        if i % 20 == 0 or i == steps:
            mapped = BState.from_stream(prim)
            gap2 = sum(
                l2_norm(getattr(bs, name) - getattr(mapped, name)) ** 2
                for name in ("u", "v", "bx", "by")
            )
            worst = max(worst, math.sqrt(gap2))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 60.0
    announce(5, "stream vs induction form on [1,3]", ok,
             f"max L2 trajectory gap {worst:.2e}, {elapsed:.0f} s")
    assert worst <= 1e-6
    assert elapsed < 60.0


def test_c06_integrator_cross_validation():
    t0 = time.perf_counter()
    cfg = small_data_config(nx=256, dt=1e-2, t_end=5.0, cadence=0.5)
    grid = Grid2D(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)
    st = make_initial_data(grid, cfg.ic.kind, cfg.ic.amplitude, cfg.ic.params())
    ss = SecondOrderState.from_state(st)
    prim = st
    steps = round((cfg.time.t_end - 1.0) / cfg.time.dt)
    worst = 0.0
    for i in range(1, steps + 1):
        ss = step_duhamel(ss, cfg.time.dt)
        prim = step_primitive(prim, cfg.time.dt)
        if i % 50 == 0 or i == steps:
            for a, b in ((ss.u, prim.u), (ss.v, prim.v), (ss.psi, prim.psi)):
                worst = max(worst, float(np.max(np.abs(a.phys() - b.phys()))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 120.0
    announce(6, "Duhamel vs RK4 trajectories on [1,5]", ok,
             f"max sup gap {worst:.2e}, {elapsed:.0f} s")
    assert worst <= 1e-4
    assert elapsed < 120.0


def test_c07_decay_rates(decay_run, tmp_path_factory):
    result, elapsed = decay_run
    fits = result.fits
    details = []
    ok = result.record.aborted is False and elapsed < 1200.0
    for key, (lo, hi) in RATE_WINDOWS.items():
        fit = fits.get(key)
        inside = (
            isinstance(fit, DecayFit)
            and lo <= fit.exponent <= hi
            and fit.r_squared >= 0.9
        )
        ok = ok and inside
        if isinstance(fit, DecayFit):
            details.append(f"{key.removeprefix('raw_')} {fit.exponent:+.2f}/R2 {fit.r_squared:.3f}")
        else:
            details.append(f"{key}: {fit}")

    # rate independence from amplitude, exercised through the sweep machinery
    base = small_data_config(nx=256, dt=0.05, t_end=50.5, cadence=0.25)
    base.output.figures = False
    spec = SweepSpec(base, [("ic.amplitude", [1e-4, 1e-3, 1e-2])], parallelism=2)
    sw = sweep(spec, out_dir=str(tmp_path_factory.mktemp("amp_sweep")), verbose=False)
    v_exps = []
    for label, point, res in sw.points:
        assert not isinstance(res, str) and res is not None, (label, res)
        fit = res.fits["raw_v_linf"]
        assert isinstance(fit, DecayFit)
        v_exps.append(fit.exponent)
    spread = max(v_exps) - min(v_exps)
    ok = ok and spread <= 0.1 and sw.failures == 0
    announce(7, "predicted decay rates", ok,
             "; ".join(details) + f"; v-rate spread over amplitudes {spread:.3f}; "
             f"512^2 run {elapsed:.0f} s")
    for key, (lo, hi) in RATE_WINDOWS.items():
        fit = fits[key]
        assert isinstance(fit, DecayFit), (key, fit)
        assert lo <= fit.exponent <= hi, (key, fit.exponent)
        assert fit.r_squared >= 0.9, (key, fit.r_squared)
    assert spread <= 0.1
    assert elapsed < 1200.0


def test_c08_norm_boundedness(decay_run):
    result, _ = decay_run
    cols = read_series_csv(result.csv_path)
    reports = result.record.reports
    x_keys = [k for k, c in reports[0].components.items() if c.family == "x"]
    worst_key, worst_ratio = None, 0.0
    for key in x_keys:
        series = cols[key]
        assert series[0] > 0, f"component {key} vanishes at t = 1"
        ratio = float(series.max() / series[0])
        if ratio > worst_ratio:
            worst_key, worst_ratio = key, ratio
    ok = worst_ratio < 10.0
    announce(8, "weighted norm boundedness", ok,
             f"worst growth {worst_ratio:.2f}x at {worst_key}")
    assert worst_ratio < 10.0


def test_c09_projector_exactness(rng):
    t0 = time.perf_counter()
    grid = Grid2D(128, 128, 8 * math.pi, 8 * math.pi)
    worst_comp, worst_tel = 0.0, 0.0
    for _ in range(5):
        f = random_field(grid, rng)
        scale = float(np.max(np.abs(f.coeffs)))
        low = project(f, 1.9, "leq")
        high = project(f, 1.9, "gt")
        worst_comp = max(
            worst_comp, float(np.max(np.abs(low.coeffs + high.coeffs - f.coeffs))) / scale
        )
        scales = [2.0**j for j in range(-3, 6)]
        total = sum(project(f, m, "band").coeffs for m in scales)
        expected = (
            project(f, scales[-1], "leq").coeffs
            - project(f, scales[0] / 2, "leq").coeffs
        )
        worst_tel = max(worst_tel, float(np.max(np.abs(total - expected))) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst_comp <= 1e-12 and worst_tel <= 1e-12 and elapsed < 1.0
    announce(9, "dyadic projector exactness", ok,
             f"complementarity {worst_comp:.1e}, telescoping {worst_tel:.1e}, {elapsed:.2f} s")
    assert worst_comp <= 1e-12
    assert worst_tel <= 1e-12
    assert elapsed < 1.0


def test_c10_property_suites(rng):
    grid = Grid2D(96, 96)
    details = []

    # spectral round trip
    vals = rng.standard_normal((96, 96))
    f = field_from_phys(grid, vals, dealias_field=False)
    rt = float(np.max(np.abs(f.phys() - vals)) / np.max(np.abs(vals)))
    details.append(f"round trip {rt:.1e}")
    assert rt <= 1e-12

    # Leray idempotence
    u = random_field(grid, rng)
    v = random_field(grid, rng)
    pu, pv = leray_project(u, v)
    ppu, ppv = leray_project(pu, pv)
    idem = max(
        float(np.max(np.abs(ppu.coeffs - pu.coeffs))),
        float(np.max(np.abs(ppv.coeffs - pv.coeffs))),
    )
    details.append(f"projection idempotence {idem:.1e}")
    assert idem <= 1e-13

    # Riesz-type symbol bound
    sym_max = 0.0
    for ka in (grid.kxg, grid.kyg):
        for kb in (grid.kxg, grid.kyg):
            sym_max = max(sym_max, float(np.max(np.abs(ka * kb) * grid.inv_k2)))
    details.append(f"symbol max {sym_max:.3f}")
    assert sym_max <= 1.0 + 1e-15

    # decay-fit scale invariance
    ts = np.linspace(2, 30, 40)
    series = ts**-1.2 * (1 + 0.03 * np.sin(ts))
    f1 = decay_fit(zip(ts, series), (2, 30))
    f2 = decay_fit(zip(ts, 1e6 * series), (2, 30))
    drift = abs(f1.exponent - f2.exponent)
    details.append(f"fit scale drift {drift:.1e}")
    assert drift <= 1e-12

    # quadratic homogeneity of the nonlinearities
    st = random_state(grid, rng, amplitude=1e-2)
    lam = 2.0
    scaled = State(lam * st.u, lam * st.v, lam * st.psi, st.t)
    pa, pb = pi_terms(st), pi_terms(scaled)
    hom = max(
        float(np.max(np.abs(pb.pi1.coeffs - lam**2 * pa.pi1.coeffs)))
        / max(float(np.max(np.abs(pb.pi1.coeffs))), 1e-300),
        float(np.max(np.abs(pb.pi2.coeffs - lam**2 * pa.pi2.coeffs)))
        / max(float(np.max(np.abs(pb.pi2.coeffs))), 1e-300),
    )
    details.append(f"quadratic homogeneity {hom:.1e}")
    assert hom <= 1e-12

    # exact quadratic+cubic structure of the forcings
    def f_of(lam_):
        s = State(lam_ * st.u, lam_ * st.v, lam_ * st.psi, st.t)
        return forcing_terms(s)

    fa, fb, fc = f_of(1.0), f_of(2.0), f_of(4.0)
    worst_poly = 0.0
    for name in ("f0", "f1", "f2"):
        combo = (
            getattr(fc, name).coeffs
            - 12 * getattr(fb, name).coeffs
            + 32 * getattr(fa, name).coeffs
        )
        scale = max(float(np.max(np.abs(getattr(fc, name).coeffs))), 1e-300)
        worst_poly = max(worst_poly, float(np.max(np.abs(combo))) / scale)
    details.append(f"forcing structure {worst_poly:.1e}")
    assert worst_poly <= 1e-10

    announce(10, "property suites", True, ", ".join(details))
