"""Independent low-tech cross-checks: linear wave theory, finite differences,
and periodic quadrature.

These deliberately avoid the spectral machinery under test: the Laplacian
check is a plain 5-point stencil, the quadrature a trapezoid mean, and the
linear-theory state is written down in closed form.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .domain import SolverState, WaveParameters, flat_water_state

__all__ = [
    "airy_state",
    "fd_laplacian",
    "periodic_quadrature",
    "mirror_half_period",
]


def airy_state(a: float, params: WaveParameters, n_modes: int = 1) -> SolverState:
    """First-order (linear) wave of amplitude a as a SolverState.

    The surface elevation is a cos(x) to O(a^2): the flat state plus a single
    fundamental mode with b_1 = a / sinh(d), keeping c, m, Q at their
    zero-amplitude values.  Useful as an independent anchor for the solver at
    small amplitude; warns when a/d is large enough that second-order effects
    are no longer negligible.
    """
    if a < 0:
        raise ValueError("amplitude must be >= 0")
    if n_modes < 1:
        raise ValueError("need at least one mode to carry the linear wave")
    if a / params.d > 0.05:
        warnings.warn(
            f"airy_state amplitude a/d = {a / params.d:.3f} > 0.05; "
            "first-order theory is a poor approximation here",
            stacklevel=2,
        )
    flat = flat_water_state(params, n_modes=n_modes)
    b = flat.b.copy()
    # m/c = d for the flat base state, so sinh(m/c) = sinh(d)
    b[1] = a / math.sinh(params.d)
    return SolverState(b=b, c=flat.c, m=flat.m, Q=flat.Q)


def fd_laplacian(values: np.ndarray, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """5-point Laplacian estimates on the interior of a uniform grid.

    values is indexed [p-level, q-node] like every field array in this
    package; q and p must each be uniformly spaced (the two spacings may
    differ).  Returns the (M-1, N-1) interior estimate with O(spacing^2)
    error.  Rejects non-uniform spacing.
    """
    values = np.asarray(values, dtype=float)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if values.shape != (p.size, q.size):
        raise ValueError("values must have shape (len(p), len(q))")
    if q.size < 3 or p.size < 3:
        raise ValueError("need at least 3 nodes per axis for an interior stencil")
    dq = np.diff(q)
    dp = np.diff(p)
    for name, dx in (("q", dq), ("p", dp)):
        scale = np.max(np.abs(dx))
        if scale == 0.0 or np.max(np.abs(dx - dx[0])) > 1.0e-9 * scale:
            raise ValueError(f"{name} spacing is not uniform")
    hq = dq[0]
    hp = dp[0]
    return (
        (values[1:-1, 2:] - 2.0 * values[1:-1, 1:-1] + values[1:-1, :-2]) / hq**2
        + (values[2:, 1:-1] - 2.0 * values[1:-1, 1:-1] + values[:-2, 1:-1]) / hp**2
    )


def periodic_quadrature(samples: np.ndarray) -> float:
    """Trapezoidal mean of equispaced samples of a periodic function.

    Samples cover exactly one period without repeating the endpoint, so the
    trapezoid rule collapses to the plain mean and is spectrally accurate for
    smooth integrands.  Fewer than 8 samples are rejected.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise ValueError("samples must be a 1-D array")
    if samples.size < 8:
        raise ValueError("need at least 8 samples over the period")
    return float(np.mean(samples))


def mirror_half_period(half: np.ndarray, odd: bool = False) -> np.ndarray:
    """Extend half-period samples at theta_k = k pi/N to the full period.

    half holds N+1 values on [0, pi]; the result holds 2N values on [0, 2pi)
    (endpoint not repeated), even or odd about both theta = 0 and theta = pi.
    """
    half = np.asarray(half, dtype=float)
    N = half.size - 1
    tail = half[-2:0:-1]
    if odd:
        return np.concatenate([half, -tail])
    return np.concatenate([half, tail])
