"""Newton-Fourier solver for steady periodic gravity waves on a conformal strip.

The free-surface problem is posed on the fixed rectangle [-c pi, c pi] x
[-m, 0]: the height field h(q, p) = y + d is harmonic, vanishes on the bed
image p = -m, and the dynamic surface condition closes the system through

    (Q - 2 g h) (h_q^2 + h_p^2) = 1   on p = 0.

Symmetric waves are represented by a cosine series with sinh vertical growth
anchored at the bed,

    h(q, p) = b0 (p + m) + sum_n b_n sinh(n (p + m)/c) cos(n q/c),

so the bed condition and crest symmetry hold termwise and the unknowns reduce
to surface data.  The discrete unknowns are (b0, b1..bN, c, m, Q); collocating
the surface condition at the N+1 nodes theta_k = k pi/N plus three gauges
(mean physical depth equals d, zero mean bed current, amplitude) gives a
square system solved by Newton iteration with an analytic Jacobian.

Internally the Newton vector carries the scaled coefficients
B_n = b_n sinh(n m/c), which are the surface cosine coefficients of h.  The
raw b_n span hundreds of orders of magnitude (sinh(n m/c) grows like
e^{n m/c}), so iterating on them directly would wreck the Jacobian
conditioning; the scaled basis keeps every column O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .domain import (
    AmplitudeTarget,
    ConformalGrid,
    SolverState,
    WaveParameters,
    flat_water_state,
    make_grid,
)

__all__ = [
    "SolverError",
    "BasisOverflowError",
    "StagnationError",
    "SingularJacobianError",
    "NonConvergenceError",
    "ContinuationSchedule",
    "ModeDoublingRule",
    "harmonic_extend",
    "bernoulli_residual",
    "gauge_residuals",
    "newton_solve",
    "continue_to_target",
    "crest_speed_ratio",
    "wave_height",
    "coefficient_tail_fraction",
]

# sinh argument beyond which the vertical basis overflows double precision
MAX_SINH_ARGUMENT = 700.0

# the solver refuses to evaluate residuals where h_q^2 + h_p^2 < this ratio
# times c^2 (the conformal map is degenerating: discrete stagnation guard)
STAGNATION_RATIO = 1.0e-12


class SolverError(Exception):
    """Base class for solver failures."""


class BasisOverflowError(SolverError):
    """sinh arguments exceed the safe exponent bound.

    Signals m/c badly scaled or N too large for the depth; n m / c must stay
    below MAX_SINH_ARGUMENT for every mode n.
    """


class StagnationError(SolverError):
    """h_q^2 + h_p^2 collapsed below the crest-regularity guard at some node."""


class SingularJacobianError(SolverError):
    """Newton matrix is singular; usually a fold point, so reduce the step or
    switch the amplitude parameterization."""


class NonConvergenceError(SolverError):
    """Newton ran out of iterations.  Carries the last iterate and, when raised
    from a continuation run, every state converged so far."""

    def __init__(self, message, last_state=None, residual_norms=None, states=None):
        super().__init__(message)
        self.last_state = last_state
        self.residual_norms = list(residual_norms or [])
        self.states = list(states or [])


# ---------------------------------------------------------------------------
# basis tables


def _grid_trig(n_modes: int, N: int):
    """cos/sin tables for modes 1..n_modes at the nodes theta_k = k pi / N.

    Angles are reduced modulo 2 pi through exact integer arithmetic before
    evaluation, and sin entries whose reduced angle is a multiple of pi are
    forced to literal zero.  The crest and trough columns then keep their
    structural symmetry (h_q = 0, v = 0) bit-exactly.
    """
    n = np.arange(1, n_modes + 1)[:, None]
    k = np.arange(N + 1)[None, :]
    r = (n * k) % (2 * N)
    ang = (math.pi / N) * r
    cos_t = np.cos(ang)
    sin_t = np.sin(ang)
    sin_t[r % N == 0] = 0.0
    return cos_t, sin_t


def _vertical_profiles(n_modes: int, alpha: float, sigma: np.ndarray):
    """Bounded vertical factors of the sinh/cosh basis.

    rho[n-1, j] = sinh(n alpha sigma_j)/sinh(n alpha) and
    gam[n-1, j] = cosh(n alpha sigma_j)/sinh(n alpha) for sigma in [0, 1].
    Both are evaluated through decaying exponentials so they never overflow;
    rho is exactly 0 on the bed (sigma = 0) and exactly 1 on the surface.
    """
    a = np.arange(1, n_modes + 1, dtype=float)[:, None] * alpha
    s = np.asarray(sigma, dtype=float)[None, :]
    e = np.exp(a * (s - 1.0))
    em = np.exp(-2.0 * a * s)
    den = 1.0 - np.exp(-2.0 * a)
    rho = e * (1.0 - em) / den
    gam = e * (1.0 + em) / den
    return rho, gam


def _coth_csch(a: np.ndarray):
    """coth(a) and csch(a) for a > 0 without overflow."""
    em = np.exp(-2.0 * a)
    den = 1.0 - em
    coth = (1.0 + em) / den
    csch = 2.0 * np.exp(-a) / den
    return coth, csch


def _check_overflow(n_modes: int, alpha: float):
    if n_modes >= 1 and n_modes * alpha > MAX_SINH_ARGUMENT:
        raise BasisOverflowError(
            f"sinh argument N*m/c = {n_modes * alpha:.1f} exceeds the safe bound "
            f"{MAX_SINH_ARGUMENT:.0f}; m/c is badly scaled or N is too large for this depth"
        )


def _field_tables(state: SolverState, grid: ConformalGrid, order: int = 1):
    """Evaluate h and its conformal derivatives on every grid node.

    Returns a namespace with (M+1, N+1) arrays h, hq, hp (and hqq, hqp, hpp
    when order >= 2) plus the harmonic-conjugate abscissa x normalized so that
    x = 0 on the crest line.  All derivatives are termwise (spectral).
    """
    if grid.N < state.n_modes:
        raise ValueError("grid has fewer collocation nodes than the state has modes")
    if abs(grid.m - state.m) > 1.0e-12 * max(1.0, state.m):
        raise ValueError("grid was built for a different state (mass flux mismatch)")
    P = state.n_modes
    c, m = state.c, state.m
    alpha = m / c
    _check_overflow(P, alpha)
    sigma = 1.0 + grid.p / m
    theta = grid.theta

    b0 = state.b[0]
    out = SimpleNamespace()
    out.sigma = sigma
    lin = b0 * m * sigma[:, None]
    if P == 0:
        shape = (grid.M + 1, grid.N + 1)
        out.h = lin * np.ones((1, grid.N + 1))
        out.hq = np.zeros(shape)
        out.hp = np.full(shape, b0)
        out.x = np.broadcast_to(b0 * c * theta[None, :], shape).copy()
        if order >= 2:
            out.hqq = np.zeros(shape)
            out.hqp = np.zeros(shape)
            out.hpp = np.zeros(shape)
        return out

    n = np.arange(1, P + 1, dtype=float)
    B = state.b[1:] * np.sinh(n * alpha)
    rho, gam = _vertical_profiles(P, alpha, sigma)
    cos_t, sin_t = _grid_trig(P, grid.N)

    out.h = lin + (B[:, None] * rho).T @ cos_t
    out.hq = -(((B * n)[:, None] * rho).T @ sin_t) / c
    out.hp = b0 + (((B * n)[:, None] * gam).T @ cos_t) / c
    out.x = b0 * c * theta[None, :] + (B[:, None] * gam).T @ sin_t
    if order >= 2:
        c2 = c * c
        out.hqq = -(((B * n * n)[:, None] * rho).T @ cos_t) / c2
        out.hqp = -(((B * n * n)[:, None] * gam).T @ sin_t) / c2
        out.hpp = -out.hqq
    return out


def harmonic_extend(state: SolverState, grid: ConformalGrid):
    """Harmonic extension of the stored coefficients over the grid.

    Returns (h, h_q, h_p) as (M+1, N+1) arrays with termwise-exact
    derivatives; h(q, -m) = 0 holds exactly by the basis structure.
    """
    if not np.all(np.isfinite(state.b)):
        raise ValueError("state coefficients must be finite")
    tabs = _field_tables(state, grid, order=1)
    return tabs.h, tabs.hq, tabs.hp


# ---------------------------------------------------------------------------
# collocation workspace (scaled unknowns)


class _Workspace:
    """Precomputed tables and residual/Jacobian assembly for one problem size.

    The Newton vector is Y = [b0, B_1..B_N, c, m, Q] with B_n the surface
    cosine coefficients (B_n = b_n sinh(n m/c)).
    """

    def __init__(self, N: int, theta: np.ndarray, g: float, d: float):
        if theta.size != N + 1:
            raise ValueError("theta must hold N+1 nodes")
        ref = np.linspace(0.0, math.pi, N + 1)
        if not np.allclose(theta, ref, rtol=0.0, atol=1.0e-15):
            raise ValueError("collocation nodes must be the uniform grid k*pi/N")
        self.N = N
        self.g = g
        self.d = d
        self.n = np.arange(1, N + 1, dtype=float)
        self.cos_t, self.sin_t = _grid_trig(N, N)
        w = np.full(N + 1, math.pi / N)
        w[0] *= 0.5
        w[-1] *= 0.5
        self.w = w  # trapezoid weights over the half period in theta

    # -- vector packing ----------------------------------------------------

    def split(self, Y):
        N = self.N
        return Y[0], Y[1 : N + 1], Y[N + 1], Y[N + 2], Y[N + 3]

    def state_to_vec(self, state: SolverState) -> np.ndarray:
        if state.n_modes != self.N:
            raise ValueError("state mode count does not match the workspace")
        alpha = state.m / state.c
        _check_overflow(self.N, alpha)
        Y = np.empty(self.N + 4)
        Y[0] = state.b[0]
        Y[1 : self.N + 1] = state.b[1:] * np.sinh(self.n * alpha)
        Y[self.N + 1] = state.c
        Y[self.N + 2] = state.m
        Y[self.N + 3] = state.Q
        return Y

    def vec_to_state(self, Y) -> SolverState:
        b0, B, c, m, Q = self.split(Y)
        alpha = m / c
        _check_overflow(self.N, alpha)
        b = np.empty(self.N + 1)
        b[0] = b0
        b[1:] = B / np.sinh(self.n * alpha)
        return SolverState(b=b, c=c, m=m, Q=Q)

    # -- evaluation ---------------------------------------------------------

    def edges(self, Y):
        """Surface and bed rows of h, h_q, h_p plus Jacobian helper sums."""
        b0, B, c, m, Q = self.split(Y)
        if c <= 0.0 or m <= 0.0:
            raise SolverError("iterate left the physical region (c, m must stay positive)")
        alpha = m / c
        _check_overflow(self.N, alpha)
        coth, csch = _coth_csch(self.n * alpha)
        e = SimpleNamespace(b0=b0, B=B, c=c, m=m, Q=Q, alpha=alpha, coth=coth, csch=csch)
        nB = self.n * B
        e.hs = b0 * m + B @ self.cos_t
        e.hqs = -(nB @ self.sin_t) / c
        e.hps = b0 + ((nB * coth) @ self.cos_t) / c
        e.T2s = ((self.n * nB * csch * csch) @ self.cos_t)
        e.hpb = b0 + ((nB * csch) @ self.cos_t) / c
        e.V2b = ((self.n * nB * csch * coth) @ self.cos_t)
        e.S = e.hqs * e.hqs + e.hps * e.hps
        if np.min(e.S) < STAGNATION_RATIO * c * c:
            raise StagnationError(
                "h_q^2 + h_p^2 fell below the crest-regularity guard; "
                "the discrete conformal map is degenerating"
            )
        return e

    def residual(self, Y, target: AmplitudeTarget, edges=None):
        e = self.edges(Y) if edges is None else edges
        g, d = self.g, self.d
        N = self.N
        F = np.empty(N + 4)
        F[: N + 1] = (e.Q - 2.0 * g * e.hs) * e.S - 1.0
        F[N + 1] = (e.c / math.pi) * (self.w @ (e.hs * e.hps)) - d
        F[N + 2] = (e.c * e.c / math.pi) * (self.w @ e.hpb) - e.c
        if target.kind == "height":
            F[N + 3] = (e.hs[0] - e.hs[-1]) - target.value
        else:
            F[N + 3] = 1.0 / e.hps[0] - target.value * e.c
        return F, e

    def jacobian(self, Y, target: AmplitudeTarget, e):
        g = self.g
        N = self.N
        b0, B, c, m, Q = e.b0, e.B, e.c, e.m, e.Q
        n = self.n
        J = np.zeros((N + 4, N + 4))

        D = Q - 2.0 * g * e.hs
        # partials of the surface rows with respect to each unknown
        dhq_dB = -(n[:, None] / c) * self.sin_t
        dhp_dB = (n * e.coth)[:, None] / c * self.cos_t
        dhq_dc = -e.hqs / c
        dhp_dc = -(e.hps - b0) / c + m * e.T2s / c**3
        dhp_dm = -e.T2s / c**2

        # Bernoulli collocation rows
        rows = slice(0, N + 1)
        J[rows, 0] = -2.0 * g * m * e.S + 2.0 * D * e.hps
        block = (-2.0 * g) * self.cos_t * e.S[None, :] + 2.0 * D[None, :] * (
            e.hqs[None, :] * dhq_dB + e.hps[None, :] * dhp_dB
        )
        J[rows, 1 : N + 1] = block.T
        J[rows, N + 1] = 2.0 * D * (e.hqs * dhq_dc + e.hps * dhp_dc)
        J[rows, N + 2] = -2.0 * g * b0 * e.S + 2.0 * D * e.hps * dhp_dm
        J[rows, N + 3] = e.S

        # mean-depth gauge
        r = N + 1
        J[r, 0] = (c / math.pi) * (self.w @ (m * e.hps + e.hs))
        depth_block = self.cos_t * e.hps[None, :] + e.hs[None, :] * dhp_dB
        J[r, 1 : N + 1] = (c / math.pi) * (depth_block @ self.w)
        J[r, N + 1] = (1.0 / math.pi) * (self.w @ (e.hs * e.hps)) + (c / math.pi) * (
            self.w @ (e.hs * dhp_dc)
        )
        J[r, N + 2] = (c / math.pi) * (self.w @ (b0 * e.hps + e.hs * dhp_dm))

        # zero-mean bed current gauge
        r = N + 2
        J[r, 0] = c * c / math.pi * (self.w @ np.ones(N + 1))
        bed_block = (n * e.csch)[:, None] / c * self.cos_t
        J[r, 1 : N + 1] = (c * c / math.pi) * (bed_block @ self.w)
        dhpb_dc = -(e.hpb - b0) / c + m * e.V2b / c**3
        J[r, N + 1] = (2.0 * c / math.pi) * (self.w @ e.hpb) - 1.0 + (
            c * c / math.pi
        ) * (self.w @ dhpb_dc)
        J[r, N + 2] = (c * c / math.pi) * (self.w @ (-e.V2b / c**2))

        # amplitude gauge
        r = N + 3
        if target.kind == "height":
            J[r, 1 : N + 1] = self.cos_t[:, 0] - self.cos_t[:, -1]
        else:
            hp0 = e.hps[0]
            inv2 = -1.0 / (hp0 * hp0)
            J[r, 0] = inv2
            J[r, 1 : N + 1] = inv2 * dhp_dB[:, 0]
            J[r, N + 1] = inv2 * dhp_dc[0] - target.value
            J[r, N + 2] = inv2 * dhp_dm[0]
        return J


# ---------------------------------------------------------------------------
# public residual/gauge evaluation


def _padded_vec(state: SolverState, ws: _Workspace) -> np.ndarray:
    if state.n_modes > ws.N:
        raise ValueError("grid has fewer collocation nodes than the state has modes")
    if state.n_modes < ws.N:
        state = state.with_modes(ws.N)
    return ws.state_to_vec(state)


def bernoulli_residual(state: SolverState, grid: ConformalGrid, g: float = 1.0) -> np.ndarray:
    """Surface residual (Q - 2 g h)(h_q^2 + h_p^2) - 1 at the N+1 collocation nodes.

    Raises StagnationError if h_q^2 + h_p^2 collapses at any node (the discrete
    image of the conformal map failing at the crest).
    """
    ws = _Workspace(grid.N, grid.theta, g=g, d=float("nan"))
    Y = _padded_vec(state, ws)
    e = ws.edges(Y)
    return (e.Q - 2.0 * g * e.hs) * e.S - 1.0


def gauge_residuals(
    state: SolverState,
    grid: ConformalGrid,
    params: WaveParameters,
    target: AmplitudeTarget,
):
    """The three scalar gauge residuals (R_depth, R_flux, R_amp).

    R_depth: mean physical surface height over one wavelength minus d, using
    dx = h_p dq on p = 0.  R_flux: mean horizontal current on the bed (must be
    0 in the chosen gauge), by trapezoid quadrature.  R_amp: measured amplitude
    minus the target (crest-to-trough height, or crest speed ratio via
    (c - u)_crest = 1/h_p(0,0)).
    """
    if grid.N < 8:
        raise ValueError("quadrature needs at least N = 8 nodes")
    ws = _Workspace(grid.N, grid.theta, g=params.g, d=params.d)
    Y = _padded_vec(state, ws)
    F, _ = ws.residual(Y, target)
    return F[grid.N + 1], F[grid.N + 2], F[grid.N + 3]


# ---------------------------------------------------------------------------
# Newton iteration


def _newton_iterate(ws: _Workspace, Y0, target, tol, max_iters):
    """Damped Newton on the combined residual; returns (Y, iters, history)."""
    Y = Y0.copy()
    F, e = ws.residual(Y, target)
    rnorm = float(np.max(np.abs(F)))
    history = [rnorm]
    for it in range(max_iters):
        if rnorm < tol:
            return Y, it, history
        J = ws.jacobian(Y, target, e)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(
                "Newton matrix is singular (fold point?); reduce the continuation "
                "step or switch the amplitude parameterization"
            ) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobianError("Newton step is not finite")
        accepted = False
        t = 1.0
        for _ in range(8):
            Yt = Y + t * step
            if Yt[ws.N + 1] <= 0.0 or Yt[ws.N + 2] <= 0.0:
                t *= 0.5
                continue
            try:
                Ft, et = ws.residual(Yt, target)
            except SolverError:
                t *= 0.5
                continue
            rt = float(np.max(np.abs(Ft)))
            if rt < rnorm or rt < tol:
                Y, F, e, rnorm = Yt, Ft, et, rt
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise NonConvergenceError(
                "Newton stalled (no descent along the Newton direction)",
                last_state=ws.vec_to_state(Y),
                residual_norms=history,
            )
        history.append(rnorm)
    if rnorm < tol:
        return Y, max_iters, history
    raise NonConvergenceError(
        f"no convergence after {max_iters} Newton iterations "
        f"(residual max-norm {rnorm:.3e}, tol {tol:.1e}); shrink the continuation step",
        last_state=ws.vec_to_state(Y),
        residual_norms=history,
    )


def newton_solve(
    state0: SolverState,
    grid: ConformalGrid,
    params: WaveParameters,
    target: AmplitudeTarget,
    tol: float = 1.0e-12,
    max_iters: int = 30,
) -> SolverState:
    """Solve the collocation system for one amplitude target.

    state0 must lie in the Newton basin (guaranteed along a continuation
    schedule with small steps).  The converged state satisfies
    max-norm(bernoulli_residual ++ gauge_residuals) < tol.  Raises
    NonConvergenceError or SingularJacobianError on failure.
    """
    ws = _Workspace(grid.N, grid.theta, g=params.g, d=params.d)
    padded = state0 if state0.n_modes == grid.N else state0.with_modes(grid.N)
    Y0 = ws.state_to_vec(padded)
    Y, iters, _ = _newton_iterate(ws, Y0, target, tol, max_iters)
    if iters == 0:
        return state0  # already a root: hand back the input unchanged
    return ws.vec_to_state(Y)


# ---------------------------------------------------------------------------
# measurements


def crest_speed_ratio(state: SolverState, grid: ConformalGrid | None = None) -> float:
    """s = (c - u(crest))/c evaluated at (q, p) = (0, 0).

    Equals 1 for flat water and decreases toward 0 as the extreme wave is
    approached.  The grid argument is accepted for symmetry with the other
    operations; the value depends only on the state.
    """
    del grid
    P = state.n_modes
    c, m = state.c, state.m
    alpha = m / c
    _check_overflow(P, alpha)
    n = np.arange(1, P + 1, dtype=float)
    hp00 = state.b[0] + np.sum(n * state.b[1:] * np.cosh(n * alpha)) / c
    return 1.0 / (c * hp00)


def wave_height(state: SolverState) -> float:
    """Crest-to-trough height h(0, 0) - h(c pi, 0)."""
    P = state.n_modes
    alpha = state.m / state.c
    _check_overflow(P, alpha)
    n = np.arange(1, P + 1, dtype=float)
    B = state.b[1:] * np.sinh(n * alpha)
    signs = 1.0 - np.cos(np.pi * n)  # 2 for odd modes, 0 for even
    return float(np.sum(B * signs))


def coefficient_tail_fraction(state: SolverState) -> float:
    """Energy fraction of the surface coefficients above mode N/2.

    tail = sum_{n > N/2} b_n^2 sinh^2(n m/c) / sum_n b_n^2 sinh^2(n m/c),
    i.e. the scaled (surface) coefficients; 0 for flat water.
    """
    P = state.n_modes
    if P == 0:
        return 0.0
    alpha = state.m / state.c
    _check_overflow(P, alpha)
    n = np.arange(1, P + 1, dtype=float)
    E = (state.b[1:] * np.sinh(n * alpha)) ** 2
    total = float(np.sum(E))
    if total == 0.0:
        return 0.0
    return float(np.sum(E[P // 2 :]) / total)


# ---------------------------------------------------------------------------
# continuation


@dataclass(frozen=True)
class ModeDoublingRule:
    """Double N whenever the coefficient tail energy fraction exceeds the
    threshold, up to max_modes."""

    tail_fraction: float = 1.0e-14
    max_modes: int = 512

    def __post_init__(self):
        if self.tail_fraction <= 0.0:
            raise ValueError("tail_fraction must be positive")
        if self.max_modes < 8:
            raise ValueError("max_modes must be at least 8")


@dataclass(frozen=True)
class ContinuationSchedule:
    """Ordered amplitude targets walked by continue_to_target.

    Targets must move strictly toward the extreme wave: heights increasing, or
    crest speed ratios decreasing.  Intermediate steps are inserted
    automatically when Newton fails, so the schedule only lists the states the
    caller wants back.
    """

    targets: tuple[float, ...]
    kind: str = "height"
    max_newton_iters: int = 30
    newton_tol: float = 1.0e-12
    mode_doubling: ModeDoublingRule | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))
        if self.kind not in ("height", "crest_speed_ratio"):
            raise ValueError(f"unknown target kind: {self.kind!r}")
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")
        for t in self.targets:
            AmplitudeTarget(self.kind, t)  # range validation
        diffs = np.diff(self.targets)
        if self.kind == "height" and np.any(diffs <= 0.0):
            raise ValueError("height targets must be strictly increasing")
        if self.kind == "crest_speed_ratio" and np.any(diffs >= 0.0):
            raise ValueError("crest speed ratio targets must be strictly decreasing")


def _measure(state: SolverState, kind: str) -> float:
    return wave_height(state) if kind == "height" else crest_speed_ratio(state)


def _advance_to(state, value, schedule, params, N, M):
    """Newton toward one reported target, bisecting the step on failure."""
    kind = schedule.kind
    stack = [value]
    attempts = 0
    iters_last = 0
    while stack:
        attempts += 1
        if attempts > 400:
            raise NonConvergenceError(
                "continuation step refinement exhausted",
                last_state=state,
            )
        t = stack[-1]
        grid = make_grid(N, M, state)
        ws = _Workspace(grid.N, grid.theta, g=params.g, d=params.d)
        try:
            padded = state if state.n_modes == N else state.with_modes(N)
            Y, iters, _ = _newton_iterate(
                ws,
                ws.state_to_vec(padded),
                AmplitudeTarget(kind, t),
                schedule.newton_tol,
                schedule.max_newton_iters,
            )
            new_state = padded if iters == 0 else ws.vec_to_state(Y)
        except (NonConvergenceError, SingularJacobianError, StagnationError):
            cur = _measure(state, kind)
            mid = 0.5 * (cur + t)
            if abs(mid - t) < 1.0e-9 * max(1.0, abs(t)) or abs(mid - cur) < 1.0e-12:
                raise
            stack.append(mid)
            continue
        state = new_state
        iters_last = iters
        stack.pop()
    return state, iters_last


def continue_to_target(
    params: WaveParameters,
    schedule: ContinuationSchedule,
    *,
    N: int = 64,
    M: int | None = None,
    start: SolverState | None = None,
    log: list | None = None,
) -> list[SolverState]:
    """Walk the schedule and return one converged state per reported target.

    The family has monotonically increasing steepness.  An empty target list
    returns [flat_water_state].  When a target is unreachable even after step
    bisection, NonConvergenceError is raised with the completed states attached
    (progress is never discarded).  If `log` is a list, one record per
    converged state is appended: {target, s, c, m, Q, residual_norm, N, iters}.
    """
    if M is None:
        M = max(4, N // 4)
    if not schedule.targets:
        return [flat_water_state(params, n_modes=N)]
    state = start if start is not None else flat_water_state(params, n_modes=N)
    states: list[SolverState] = []
    rule = schedule.mode_doubling
    for value in schedule.targets:
        try:
            state, iters = _advance_to(state, value, schedule, params, N, M)
            while (
                rule is not None
                and N < rule.max_modes
                and coefficient_tail_fraction(state) > rule.tail_fraction
            ):
                N = min(2 * N, rule.max_modes)
                M = max(4, N // 4)
                state, iters = _advance_to(state, value, schedule, params, N, M)
        except NonConvergenceError as exc:
            exc.states = states
            raise
        except SingularJacobianError:
            raise
        states.append(state)
        if log is not None:
            grid = make_grid(N, M, state)
            res = bernoulli_residual(state, grid, g=params.g)
            gr = gauge_residuals(state, grid, params, AmplitudeTarget(schedule.kind, value))
            rnorm = max(float(np.max(np.abs(res))), max(abs(x) for x in gr))
            log.append(
                {
                    "target": value,
                    "s": crest_speed_ratio(state),
                    "c": state.c,
                    "m": state.m,
                    "Q": state.Q,
                    "residual_norm": rnorm,
                    "N": N,
                    "iters": iters,
                }
            )
    return states
