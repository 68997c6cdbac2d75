"""Solution multipliers of the damped wave equation and their certified bounds.

The x-frequency symbol of the homogeneous problem

    phi_tt + phi_t + xi^2 phi = 0

has the two branches lam_{+,-} = -1/2 +- sqrt(1/4 - xi^2).  The propagator
pair (K0, K1) maps data (phi(0), phi_t(0)) to phi(t) via

    phi(t) = K0(t, xi) phi(0) + K1(t, xi) (phi(0)/2 + phi_t(0)),

and the time derivatives satisfy

    dK0/dt = -K0/2 + (1/4 - xi^2) K1,      dK1/dt = K0 - K1/2.

Evaluation is branch-free in exact arithmetic (K0 = e^{-t/2} C(mu t^2),
K1 = t e^{-t/2} S(mu t^2) with mu = 1/4 - xi^2 and C, S the even entire
continuations of cosh/sinhc), but for numerical stability the three regimes
are evaluated separately:

  * |mu| t^2 < 1e-6: 4-term Taylor series of C and S (the closed forms are
    0/0 at xi = 1/2).
  * mu > 0: factored exponentials with the growing rate computed as
    lam_+ = -xi^2 / (1/2 + sqrt(mu)), which avoids the catastrophic
    cancellation of the naive -1/2 + sqrt(mu) and of the identity-based
    derivative formulas at large t.
  * mu < 0: e^{-t/2} (cos, sin/omega) with omega = sqrt(-mu).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .grid import SpectralField

__all__ = [
    "KernelId",
    "KernelBound",
    "BoundSample",
    "KernelBoundReport",
    "khat",
    "khat_all",
    "apply_kernel",
    "check_kernel_bounds",
    "BOUND_FAMILIES",
]

_TAYLOR_WINDOW = 1e-6


class KernelId(enum.Enum):
    K0 = "K0"
    K1 = "K1"
    K0DOT = "K0dot"
    K1DOT = "K1dot"


def khat_all(t, xi):
    """Evaluate (K0, K1, dK0/dt, dK1/dt) at broadcastable (t, xi) arrays."""
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(t < 0):
        raise ValueError("kernel time must be >= 0")
    t, xi = np.broadcast_arrays(t, xi)
    mu = 0.25 - xi**2
    z = mu * t * t

    k0 = np.empty_like(t)
    k1 = np.empty_like(t)
    dk0 = np.empty_like(t)
    dk1 = np.empty_like(t)

    tiny = np.abs(z) < _TAYLOR_WINDOW
    if np.any(tiny):
        zt, tt, mt = z[tiny], t[tiny], mu[tiny]
        c = 1.0 + zt / 2.0 + zt**2 / 24.0 + zt**3 / 720.0
        s = 1.0 + zt / 6.0 + zt**2 / 120.0 + zt**3 / 5040.0
        e = np.exp(-tt / 2.0)
        k0[tiny] = e * c
        k1[tiny] = tt * e * s
        dk0[tiny] = e * (-0.5 * c + mt * tt * s)
        dk1[tiny] = e * (c - 0.5 * tt * s)

    hyp = ~tiny & (mu > 0)
    if np.any(hyp):
        sq = np.sqrt(mu[hyp])
        lam_p = -(xi[hyp] ** 2) / (0.5 + sq)
        lam_m = -0.5 - sq
        ep = np.exp(lam_p * t[hyp])
        em = np.exp(lam_m * t[hyp])
        k0[hyp] = 0.5 * (ep + em)
        k1[hyp] = (ep - em) / (2.0 * sq)
        dk0[hyp] = 0.25 * (2.0 * sq - 1.0) * ep - 0.25 * (2.0 * sq + 1.0) * em
        dk1[hyp] = (lam_p * ep - lam_m * em) / (2.0 * sq)

    osc = ~tiny & (mu < 0)
    if np.any(osc):
        om = np.sqrt(-mu[osc])
        to = t[osc]
        e = np.exp(-to / 2.0)
        c = np.cos(om * to)
        s = np.sin(om * to)
        k0[osc] = e * c
        k1[osc] = e * s / om
        dk0[osc] = e * (-0.5 * c - om * s)
        dk1[osc] = e * (c - 0.5 * s / om)

    return k0, k1, dk0, dk1


def khat(kind: KernelId, t, xi):
    """One kernel multiplier value; scalar in, float out; arrays broadcast."""
    vals = khat_all(t, xi)
    idx = {KernelId.K0: 0, KernelId.K1: 1, KernelId.K0DOT: 2, KernelId.K1DOT: 3}[kind]
    out = vals[idx]
    if out.ndim == 0:
        return float(out)
    return out


def apply_kernel(kind: KernelId, t: float, f: SpectralField) -> SpectralField:
    """Apply the multiplier along kx only; independent of ky."""
    mult = khat(kind, float(t), f.grid.kx)
    return SpectralField(f.grid, f.coeffs * np.asarray(mult)[:, None])


# ---------------------------------------------------------------------------
# constant-free bound certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelBound:
    """One constant-free bound family |K| <= bound(t, xi) on a frequency range."""

    name: str
    kind: KernelId
    low_frequency: bool  # True: |xi| <= 1/2, False: |xi| >= 1/2
    nonnegative: bool  # additionally require value >= 0

    def bound(self, t, xi):
        t = np.asarray(t, float)
        xi = np.asarray(xi, float)
        if self.name == "K0_low":
            return np.exp(-t * xi**2)
        if self.name == "K1_low":
            # the sharp ratio sup is 4/e at (t, xi) = (4, 1/2); factor 2 margin
            return 2.0 * np.exp(-t * xi**2)
        if self.name in ("K0dot_low", "K1dot_low"):
            return 2.0 * (xi**2 * np.exp(-t * xi**2) + np.exp(-t / 2.0))
        if self.name == "K0_high":
            return np.exp(-t / 2.0)
        if self.name == "K1_high":
            return t * np.exp(-t / 2.0)
        if self.name == "K0dot_high":
            return (0.5 + np.sqrt(np.maximum(xi**2 - 0.25, 0.0))) * np.exp(-t / 2.0)
        if self.name == "K1dot_high":
            return (1.0 + t / 2.0) * np.exp(-t / 2.0)
        raise ValueError(self.name)


BOUND_FAMILIES = (
    KernelBound("K0_low", KernelId.K0, True, True),
    KernelBound("K1_low", KernelId.K1, True, True),
    KernelBound("K0dot_low", KernelId.K0DOT, True, False),
    KernelBound("K1dot_low", KernelId.K1DOT, True, False),
    KernelBound("K0_high", KernelId.K0, False, False),
    KernelBound("K1_high", KernelId.K1, False, False),
    KernelBound("K0dot_high", KernelId.K0DOT, False, False),
    KernelBound("K1dot_high", KernelId.K1DOT, False, False),
)


@dataclass
class BoundSample:
    t: float
    xi: float
    kind: str
    value: float
    bound: float
    ratio: float
    passed: bool


@dataclass
class _FamilySamples:
    """Array-backed samples of one bound family (kept vectorized for speed)."""

    name: str
    t: np.ndarray
    xi: np.ndarray
    value: np.ndarray
    bound: np.ndarray
    ratio: np.ndarray
    passed: np.ndarray


@dataclass
class KernelBoundReport:
    families: list = field(default_factory=list)
    max_ratio: float = 0.0

    @property
    def samples(self) -> list[BoundSample]:
        out = []
        for fam in self.families:
            for i in range(fam.t.size):
                out.append(
                    BoundSample(
                        float(fam.t[i]), float(fam.xi[i]), fam.name,
                        float(fam.value[i]), float(fam.bound[i]),
                        float(fam.ratio[i]), bool(fam.passed[i]),
                    )
                )
        return out

    @property
    def n_samples(self) -> int:
        return sum(fam.t.size for fam in self.families)

    @property
    def n_violations(self) -> int:
        return sum(int(np.sum(~fam.passed)) for fam in self.families)

    @property
    def violations(self) -> list[BoundSample]:
        out = []
        for fam in self.families:
            for i in np.nonzero(~fam.passed)[0]:
                out.append(
                    BoundSample(
                        float(fam.t[i]), float(fam.xi[i]), fam.name,
                        float(fam.value[i]), float(fam.bound[i]),
                        float(fam.ratio[i]), False,
                    )
                )
        return out

    @property
    def all_pass(self) -> bool:
        return self.n_violations == 0

    def family_max_ratio(self, name: str) -> float:
        for fam in self.families:
            if fam.name == name:
                return float(np.max(fam.ratio)) if fam.ratio.size else 0.0
        raise KeyError(name)

    def csv_rows(self):
        yield "t,xi,kind,value,bound,ratio,passed"
        for fam in self.families:
            for i in range(fam.t.size):
                yield (
                    f"{fam.t[i]:.17g},{fam.xi[i]:.17g},{fam.name},"
                    f"{fam.value[i]:.17g},{fam.bound[i]:.17g},"
                    f"{fam.ratio[i]:.17g},{int(fam.passed[i])}"
                )


def check_kernel_bounds(t_samples, xi_samples, families=BOUND_FAMILIES) -> KernelBoundReport:
    """Evaluate the constant-free bound families on the (t, xi) sample grid.

    Failing samples are recorded in the report rather than raised.
    """
    ts = np.atleast_1d(np.asarray(t_samples, float))
    xis = np.atleast_1d(np.asarray(xi_samples, float))
    if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(xis))):
        raise ValueError("samples must be finite")
    if np.any(ts < 0):
        raise ValueError("kernel time must be >= 0")

    T, X = np.meshgrid(ts, xis, indexing="ij")
    k0, k1, dk0, dk1 = khat_all(T, X)
    values = {
        KernelId.K0: k0,
        KernelId.K1: k1,
        KernelId.K0DOT: dk0,
        KernelId.K1DOT: dk1,
    }

    report = KernelBoundReport()
    slack = 1.0 + 1e-12
    for fam in families:
        region = np.abs(X) <= 0.5 if fam.low_frequency else np.abs(X) >= 0.5
        if not np.any(region):
            continue
        val = values[fam.kind][region]
        bnd = fam.bound(T[region], X[region])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(
                bnd > 0,
                np.abs(val) / np.where(bnd > 0, bnd, 1.0),
                np.where(val == 0, 0.0, np.inf),
            )
        ok = np.abs(val) <= bnd * slack
        if fam.nonnegative:
            ok &= val >= -1e-12 * np.maximum(bnd, 1.0)
        report.families.append(
            _FamilySamples(fam.name, T[region], X[region], val, bnd, ratio, ok)
        )
    if report.families:
        report.max_ratio = float(max(np.max(f.ratio) for f in report.families))
    return report
