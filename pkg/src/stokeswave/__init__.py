"""Spectral solver and numerical verifier for steady periodic gravity water waves.

Computes regular and near-extreme waves over finite depth on the conformal
image of the fluid domain, reconstructs velocity and pressure fields, and
certifies the sign structure of the pressure gradient numerically.
"""

from .domain import (
    AmplitudeTarget,
    CheckResult,
    ConformalGrid,
    FieldGrid,
    SolverState,
    VerificationReport,
    WaveParameters,
    flat_water_state,
    linear_wave_speed,
    load_state,
    make_grid,
    save_state,
)
from .solver import (
    BasisOverflowError,
    ContinuationSchedule,
    ModeDoublingRule,
    NonConvergenceError,
    SingularJacobianError,
    SolverError,
    StagnationError,
    bernoulli_residual,
    continue_to_target,
    crest_speed_ratio,
    gauge_residuals,
    harmonic_extend,
    newton_solve,
    wave_height,
)

__version__ = "0.1.0"
