"""Pseudo-spectral laboratory for the 2D damped MHD system.

The package simulates the incompressible MHD equations with velocity damping
near the x-aligned magnetic equilibrium, using exact damped-wave solution
multipliers for the linear dynamics, and measures the quantitative decay of
the perturbation against the predicted large-time rates.
"""

from .grid import (
    Grid2D,
    SpectralField,
    State,
    SnapshotError,
    dealias,
    deriv,
    field_from_coeffs,
    field_from_phys,
    inv_laplacian,
    laplacian,
    leray_project,
    make_initial_data,
    nonlocal_op,
    read_snapshot,
    write_snapshot,
    zero_field,
)
from .kernels import KernelId, apply_kernel, check_kernel_bounds, khat
from .nonlinear import (
    ForcingTriple,
    PiPair,
    forcing_terms,
    pi_terms,
    time_derivative_fields,
    transport,
)
from .lpdecomp import lemma_ratio_diagnostic, project, riesz_apply
from .diagnostics import (
    DecayFit,
    DecayFitError,
    NormReport,
    decay_fit,
    energy_report,
    norm_report,
    pressure_recover,
    sobolev_norm,
    weighted_l1,
)
from .integrate import (
    BState,
    CFLError,
    SecondOrderState,
    initial_time_derivatives,
    run,
    step_bform,
    step_duhamel,
    step_primitive,
)
from .config import RunConfig, SweepSpec, parse_config, parse_sweep
from .harness import run_experiment, sweep

__version__ = "0.1.0"
