"""Periodic-box spectral machinery: grids, fields, multipliers, initial data.

Fields are stored as normalized Fourier coefficients ``c`` on the full
(kx, ky) index grid, so that

    f(x, y) = sum_k c[k] * exp(i (kx x + ky y)),   c = fft2(f) / (nx * ny).

All differential and nonlocal operators act as exact multipliers on ``c``.
Quadratic products are formed on the collocation grid and truncated with
the 2/3 rule; with the cutoff at ``n // 3`` the retained band of every
pairwise product is alias-free.
"""

from __future__ import annotations

import math
import os
import struct
from contextvars import ContextVar
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _sfft

__all__ = [
    "Grid2D",
    "SpectralField",
    "State",
    "SnapshotError",
    "field_from_phys",
    "field_from_coeffs",
    "zero_field",
    "dealias",
    "deriv",
    "laplacian",
    "inv_laplacian",
    "nonlocal_op",
    "bessel",
    "modulus_power",
    "leray_project",
    "divergence",
    "conjugate_symmetry_defect",
    "make_initial_data",
    "read_snapshot",
    "write_snapshot",
]

THREADS_ENV = "MHD_LAB_THREADS"

_fft_worker_override: ContextVar[int | None] = ContextVar(
    "mhdlab_fft_workers", default=None
)


def fft_workers() -> int:
    """FFT worker count: context override, else MHD_LAB_THREADS, else cpu count."""
    override = _fft_worker_override.get()
    if override is not None:
        return max(1, override)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def set_fft_workers(n: int | None):
    """Override FFT workers in the current context (used by sweep workers)."""
    return _fft_worker_override.set(n)


def _fft2(a):
    return _sfft.fft2(a, workers=fft_workers())


def _ifft2(a):
    return _sfft.ifft2(a, workers=fft_workers())


def _rfft2(a):
    return _sfft.rfft2(a, workers=fft_workers())


def _irfft2(a, shape):
    return _sfft.irfft2(a, s=shape, workers=fft_workers())


def half_from_full(grid: "Grid2D", coeffs: np.ndarray) -> np.ndarray:
    """Half-spectrum view of a real field's full coefficient table."""
    return coeffs[:, : grid.ny_half]


def full_from_half(grid: "Grid2D", half: np.ndarray) -> np.ndarray:
    """Rebuild the full table from the half spectrum of a real field.

    Uses c(-kx, -ky) = conj(c(kx, ky)); the Nyquist column carries its own
    conjugate partner and our dealiased fields keep it zero.
    """
    nx, ny, h = grid.nx, grid.ny, grid.ny_half
    full = np.empty((nx, ny), dtype=complex)
    full[:, :h] = half
    mirror = np.conj(np.roll(half[::-1, :], 1, axis=0))
    full[:, h:] = mirror[:, ny - h : 0 : -1]
    return full


@dataclass(frozen=True)
class Grid2D:
    """Periodic computational box [0, lx) x [0, ly) with nx x ny collocation points."""

    nx: int
    ny: int
    lx: float = 2.0 * math.pi
    ly: float = 2.0 * math.pi

    def __post_init__(self):
        for n, name in ((self.nx, "nx"), (self.ny, "ny")):
            if n < 4 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 4, got {n}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("box side lengths must be positive")

    @cached_property
    def x(self) -> np.ndarray:
        return (self.lx / self.nx) * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return (self.ly / self.ny) * np.arange(self.ny)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def kx(self) -> np.ndarray:
        """Signed x wavenumbers 2*pi*j/lx, fft layout, shape (nx,)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.lx / self.nx)

    @cached_property
    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.ly / self.ny)

    @cached_property
    def kxg(self) -> np.ndarray:
        return self.kx[:, None]

    @cached_property
    def kyg(self) -> np.ndarray:
        return self.ky[None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kxg**2 + self.kyg**2

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """1/|k|^2 with the k = 0 entry set to zero (gauge choice)."""
        k2 = self.k2.copy()
        k2[0, 0] = 1.0
        out = 1.0 / k2
        out[0, 0] = 0.0
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep |jx| <= nx//3 and |jy| <= ny//3."""
        jx = np.fft.fftfreq(self.nx, 1.0 / self.nx)[:, None]
        jy = np.fft.fftfreq(self.ny, 1.0 / self.ny)[None, :]
        return (np.abs(jx) <= self.nx // 3) & (np.abs(jy) <= self.ny // 3)

    # -- half-spectrum views (real fields); used by the nonlinear hot path --

    @property
    def ny_half(self) -> int:
        return self.ny // 2 + 1

    @cached_property
    def kyg_half(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.rfftfreq(self.ny, d=self.ly / self.ny)[None, :]

    @cached_property
    def inv_k2_half(self) -> np.ndarray:
        k2 = self.kxg**2 + self.kyg_half**2
        k2[0, 0] = 1.0
        out = 1.0 / k2
        out[0, 0] = 0.0
        return out

    @cached_property
    def dealias_mask_half(self) -> np.ndarray:
        return self.dealias_mask[:, : self.ny_half]

    @property
    def kx_max(self) -> float:
        """Largest retained |kx| after dealiasing."""
        return (self.nx // 3) * 2.0 * np.pi / self.lx

    @property
    def ky_max(self) -> float:
        return (self.ny // 3) * 2.0 * np.pi / self.ly

    @property
    def cell_area(self) -> float:
        return (self.lx / self.nx) * (self.ly / self.ny)


@dataclass
class SpectralField:
    """One scalar field as normalized Fourier coefficients on a Grid2D."""

    grid: Grid2D
    coeffs: np.ndarray

    def phys(self) -> np.ndarray:
        """Real physical-space samples on the collocation grid."""
        return np.real(_ifft2(self.coeffs)) * (self.grid.nx * self.grid.ny)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * a)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)


def field_from_phys(grid: Grid2D, values: np.ndarray, *, dealias_field: bool = True) -> SpectralField:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.nx, grid.ny):
        raise ValueError(f"expected shape {(grid.nx, grid.ny)}, got {values.shape}")
    coeffs = _fft2(values) / (grid.nx * grid.ny)
    if dealias_field:
        coeffs *= grid.dealias_mask
    return SpectralField(grid, coeffs)


def field_from_coeffs(grid: Grid2D, coeffs: np.ndarray) -> SpectralField:
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (grid.nx, grid.ny):
        raise ValueError(f"expected shape {(grid.nx, grid.ny)}, got {coeffs.shape}")
    return SpectralField(grid, coeffs)


def zero_field(grid: Grid2D) -> SpectralField:
    return SpectralField(grid, np.zeros((grid.nx, grid.ny), dtype=complex))


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def _k_axis(grid: Grid2D, axis: str) -> np.ndarray:
    if axis == "x":
        return grid.kxg
    if axis == "y":
        return grid.kyg
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def deriv(f: SpectralField, axis: str, order: int = 1) -> SpectralField:
    """Spectral derivative: multiply coefficients by (i k_axis)**order."""
    if order < 1:
        raise ValueError("order must be a positive integer")
    k = _k_axis(f.grid, axis)
    return SpectralField(f.grid, f.coeffs * (1j * k) ** order)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def inv_laplacian(f: SpectralField) -> SpectralField:
    """Inverse Laplacian with the k = 0 mode set to zero."""
    return SpectralField(f.grid, -f.grid.inv_k2 * f.coeffs)


def nonlocal_op(f: SpectralField, a: str, b: str) -> SpectralField:
    """Riesz-type multiplier k_a k_b / |k|^2 (i.e. d_a d_b / Laplacian); k=0 zeroed.

    (``nonlocal`` is a Python keyword, hence the suffix.)
    """
    ka = _k_axis(f.grid, a)
    kb = _k_axis(f.grid, b)
    return SpectralField(f.grid, f.coeffs * (ka * kb) * f.grid.inv_k2)


def bessel(f: SpectralField, s: float) -> SpectralField:
    """Inhomogeneous smoothing multiplier (1 + |k|^2)^(s/2)."""
    return SpectralField(f.grid, f.coeffs * (1.0 + f.grid.k2) ** (s / 2.0))


def modulus_power(f: SpectralField, a: float) -> SpectralField:
    """Homogeneous multiplier |k|^a; the k = 0 mode is zeroed for a != 0."""
    if a == 0:
        return f.copy()
    k2 = f.grid.k2.copy()
    k2[0, 0] = 1.0
    mult = k2 ** (a / 2.0)
    mult[0, 0] = 0.0
    return SpectralField(f.grid, f.coeffs * mult)


def divergence(u: SpectralField, v: SpectralField) -> SpectralField:
    return SpectralField(u.grid, 1j * u.grid.kxg * u.coeffs + 1j * u.grid.kyg * v.coeffs)


def leray_project(u: SpectralField, v: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Project (u, v) onto divergence-free fields; the k = 0 mode is untouched."""
    g = u.grid
    div = g.kxg * u.coeffs + g.kyg * v.coeffs  # (k . w), up to factor i
    corr = div * g.inv_k2
    return (
        SpectralField(g, u.coeffs - g.kxg * corr),
        SpectralField(g, v.coeffs - g.kyg * corr),
    )


def conjugate_symmetry_defect(f: SpectralField) -> float:
    """Max |c(-k) - conj(c(k))|; zero for fields representing real functions."""
    c = f.coeffs
    mirrored = np.roll(np.flip(c, axis=(0, 1)), shift=(1, 1), axis=(0, 1))
    return float(np.max(np.abs(mirrored - np.conj(c))))


@dataclass
class State:
    """Velocity components and perturbed magnetic stream function at one time."""

    u: SpectralField
    v: SpectralField
    psi: SpectralField
    t: float = 1.0

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy(), self.psi.copy(), self.t)

    def divergence_max(self) -> float:
        return float(np.max(np.abs(divergence(self.u, self.v).coeffs)))


# ---------------------------------------------------------------------------
# initial data synthesis
# ---------------------------------------------------------------------------

_IC_KINDS = ("gaussian_vortex", "shear", "single_mode", "file")


def make_initial_data(
    grid: Grid2D,
    kind: str,
    amplitude: float,
    params: dict | None = None,
) -> State:
    """Synthesize divergence-free initial data at t = 1.

    Kinds:
      gaussian_vortex -- localized vortex u = rot(chi) with Gaussian chi, plus a
                         Gaussian stream-function perturbation; both centered.
      shear           -- u = amplitude*sin(k y), v = psi = 0.
      single_mode     -- one trigonometric mode in the selected field.
      file            -- read a snapshot file (params['path']).
    """
    params = dict(params or {})
    if kind not in _IC_KINDS:
        raise ValueError(f"unknown initial-data kind {kind!r}; choose from {_IC_KINDS}")
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")

    if kind == "file":
        state = read_snapshot(params["path"], expected_grid=grid)
        return state

    X, Y = grid.mesh
    xc, yc = params.get("center", (grid.lx / 2.0, grid.ly / 2.0))

    if kind == "gaussian_vortex":
        sigma = float(params.get("sigma", 1.5))
        sigma_psi = float(params.get("sigma_psi", sigma))
        psi_fraction = float(params.get("psi_fraction", 1.0))
        r2 = (X - xc) ** 2 + (Y - yc) ** 2
        # chi scaled by sigma so that max |rot chi| = amplitude * e^{-1/2}
        chi = field_from_phys(grid, amplitude * sigma * np.exp(-r2 / (2 * sigma**2)))
        u = deriv(chi, "y")
        v = -1.0 * deriv(chi, "x")
        psi = field_from_phys(
            grid, amplitude * psi_fraction * np.exp(-r2 / (2 * sigma_psi**2))
        )
    elif kind == "shear":
        m = int(params.get("mode_m", max(1, round(grid.ly / (2 * math.pi)))))
        k = 2 * math.pi * m / grid.ly
        u = field_from_phys(grid, amplitude * np.sin(k * Y))
        v = zero_field(grid)
        psi = zero_field(grid)
    else:  # single_mode
        field = params.get("field", "psi")
        mx = int(params.get("mode_mx", 1))
        my = int(params.get("mode_my", 0))
        phase = float(params.get("phase", 0.0))
        wave = amplitude * np.sin(
            2 * math.pi * (mx * X / grid.lx + my * Y / grid.ly) + phase
        )
        u = zero_field(grid)
        v = zero_field(grid)
        psi = zero_field(grid)
        if field == "psi":
            psi = field_from_phys(grid, wave)
        elif field == "u":
            u = field_from_phys(grid, wave)
        elif field == "v":
            v = field_from_phys(grid, wave)
        else:
            raise ValueError(f"single_mode field must be u, v or psi, got {field!r}")

    u, v = leray_project(dealias(u), dealias(v))
    return State(u, v, dealias(psi), t=1.0)


# ---------------------------------------------------------------------------
# snapshot file format
# ---------------------------------------------------------------------------

SNAPSHOT_MAGIC = b"MHD2"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")  # magic, version, nx, ny, lx, ly -> 32 bytes


class SnapshotError(ValueError):
    """Malformed snapshot file; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def write_snapshot(path, state: State) -> None:
    g = state.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.nx, g.ny, g.lx, g.ly)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        for f in (state.u, state.v, state.psi):
            fh.write(np.ascontiguousarray(f.phys(), dtype="<f8").tobytes())
    os.replace(tmp, path)


def read_snapshot(path, expected_grid: Grid2D | None = None) -> State:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotError("truncated header", len(raw))
    magic, version, nx, ny, lx, ly = _HEADER.unpack_from(raw, 0)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"bad magic {magic!r}", 0)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported version {version}", 4)
    try:
        grid = Grid2D(nx, ny, lx, ly)
    except ValueError as exc:
        raise SnapshotError(f"invalid grid header: {exc}", 8) from exc
    if expected_grid is not None and (nx, ny) != (expected_grid.nx, expected_grid.ny):
        raise SnapshotError(
            f"grid {nx}x{ny} does not match requested {expected_grid.nx}x{expected_grid.ny}",
            8,
        )
    if expected_grid is not None:
        grid = Grid2D(nx, ny, expected_grid.lx, expected_grid.ly)

    nfield = nx * ny
    fields = []
    offset = _HEADER.size
    for name in ("u", "v", "psi"):
        end = offset + 8 * nfield
        if len(raw) < end:
            raise SnapshotError(f"truncated payload for field {name}", len(raw))
        arr = np.frombuffer(raw, dtype="<f8", count=nfield, offset=offset)
        fields.append(field_from_phys(grid, arr.reshape(nx, ny)))
        offset = end
    if len(raw) != offset:
        raise SnapshotError("trailing bytes after payload", offset)
    u, v = leray_project(fields[0], fields[1])
    return State(u, v, fields[2], t=1.0)
