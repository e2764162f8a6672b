"""Physical-field reconstruction on the conformal grid.

Every quantity is produced by termwise (spectral) differentiation of the
height-function basis and the chain rule of the hodograph transform,

    d/dx = (c - u) d/dq + v d/dp,      d/dy = -v d/dq + (c - u) d/dp,

with c - u = h_p/(h_q^2 + h_p^2) and v = -h_q/(h_q^2 + h_p^2).  Pressure
comes from the Bernoulli law P = P0 + Q/2 - ((c-u)^2 + v^2)/2 - g h, so the
Euler equations hold identically for any coefficient vector; what ties the
fields to an actual wave is the dynamic surface condition, which only a
converged state satisfies.
"""

from __future__ import annotations

import io

import numpy as np

from .domain import ConformalGrid, FieldGrid, SolverState, WaveParameters
from .solver import STAGNATION_RATIO, StagnationError, _field_tables

__all__ = [
    "physical_map",
    "mean_depth",
    "velocity_field",
    "pressure_field",
    "f_field",
    "physical_derivatives",
    "compute_field_grid",
    "field_csv",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "q", "p", "x", "y", "u", "v", "P", "psi", "phi", "f",
    "u_x", "u_y", "v_x", "v_y", "P_x", "P_y",
)


def _speed_split(state, tabs):
    """(c - u, v, S) with the stagnation guard applied."""
    S = tabs.hq * tabs.hq + tabs.hp * tabs.hp
    if np.min(S) < STAGNATION_RATIO * state.c * state.c:
        raise StagnationError(
            "h_q^2 + h_p^2 fell below the crest-regularity guard on the field grid"
        )
    return tabs.hp / S, -tabs.hq / S, S


def physical_map(state: SolverState, grid: ConformalGrid, d: float | None = None):
    """Physical coordinates (x, y) of every grid node.

    y = h - d; x is the harmonic conjugate, normalized so the crest line maps
    to x = 0.  One period in q spans exactly one wavelength in x once the
    zero-mean-current gauge holds.  When d is omitted it is recovered from the
    mean-depth gauge (the mean physical surface height over one wavelength),
    which reproduces the depth the state was solved for.
    """
    tabs = _field_tables(state, grid, order=1)
    y = tabs.h - (mean_depth(state) if d is None else d)
    return tabs.x, y


def mean_depth(state: SolverState) -> float:
    """Mean physical surface height (1/2pi) int h(q,0) h_p(q,0) dq, closed form.

    Equals the depth d used by the solver for any converged state (the depth
    gauge pins it); exact for flat water.
    """
    b0 = state.b[0]
    base = b0 * b0 * state.m * state.c
    if state.n_modes == 0:
        return base
    n = np.arange(1, state.n_modes + 1, dtype=float)
    alpha = state.m / state.c
    B = state.b[1:] * np.sinh(n * alpha)
    return base + 0.5 * float(np.sum(n * B * B / np.tanh(n * alpha)))


def velocity_field(state: SolverState, grid: ConformalGrid):
    """Velocity components (u, v) in the moving frame at every node.

    u is even and v odd in q; v vanishes identically on the bed row and on the
    crest and trough lines (structural zeros of the basis).
    """
    tabs = _field_tables(state, grid, order=1)
    cmu, v, _ = _speed_split(state, tabs)
    return state.c - cmu, v


def pressure_field(state: SolverState, grid: ConformalGrid, params: WaveParameters):
    """Pressure P = P0 + Q/2 - ((c-u)^2 + v^2)/2 - g h at every node."""
    tabs = _field_tables(state, grid, order=1)
    cmu, v, _ = _speed_split(state, tabs)
    return params.P0 + 0.5 * state.Q - 0.5 * (cmu * cmu + v * v) - params.g * tabs.h


def f_field(state: SolverState, grid: ConformalGrid, params: WaveParameters):
    """The comparison function f = (c - u) v - g x at every node.

    f vanishes identically on the crest line and equals -g pi on the trough
    line (up to the zero-mean-current gauge residual).
    """
    tabs = _field_tables(state, grid, order=1)
    cmu, v, _ = _speed_split(state, tabs)
    return cmu * v - params.g * tabs.x


def physical_derivatives(state: SolverState, grid: ConformalGrid, g: float = 1.0):
    """Cartesian first derivatives (u_x, u_y, v_x, v_y, P_x, P_y) at every node.

    All conformal derivatives are termwise-exact; the Cartesian components are
    chain-rule images, so incompressibility and irrotationality hold to
    rounding, and on the bed row P_y = -g up to rounding.
    """
    tabs = _field_tables(state, grid, order=2)
    parts = _derivative_parts(state, tabs, g)
    return (
        parts["u_x"], parts["u_y"], parts["v_x"], parts["v_y"],
        parts["P_x"], parts["P_y"],
    )


def _derivative_parts(state, tabs, g):
    cmu, v, S = _speed_split(state, tabs)
    S_q = 2.0 * (tabs.hq * tabs.hqq + tabs.hp * tabs.hqp)
    S_p = 2.0 * (tabs.hq * tabs.hqp + tabs.hp * tabs.hpp)
    S2 = S * S
    # u = c - h_p/S, v = -h_q/S
    u_q = -tabs.hqp / S + tabs.hp * S_q / S2
    u_p = -tabs.hpp / S + tabs.hp * S_p / S2
    v_q = -tabs.hqq / S + tabs.hq * S_q / S2
    v_p = -tabs.hqp / S + tabs.hq * S_p / S2
    # P = P0 + Q/2 - ((c-u)^2 + v^2)/2 - g h
    P_q = cmu * u_q - v * v_q - g * tabs.hq
    P_p = cmu * u_p - v * v_p - g * tabs.hp
    out = {
        "u_x": cmu * u_q + v * u_p,
        "u_y": -v * u_q + cmu * u_p,
        "v_x": cmu * v_q + v * v_p,
        "v_y": -v * v_q + cmu * v_p,
        "P_x": cmu * P_q + v * P_p,
        "P_y": -v * P_q + cmu * P_p,
        "u_q": u_q, "v_q": v_q, "cmu": cmu, "v": v, "S": S,
    }
    return out


def compute_field_grid(
    state: SolverState, grid: ConformalGrid, params: WaveParameters
) -> FieldGrid:
    """Assemble every reconstructed field into one immutable FieldGrid."""
    tabs = _field_tables(state, grid, order=2)
    cmu, v, S = _speed_split(state, tabs)
    parts = _derivative_parts(state, tabs, params.g)
    q = state.c * grid.theta
    y = tabs.h - params.d
    P = params.P0 + 0.5 * state.Q - 0.5 * (cmu * cmu + v * v) - params.g * tabs.h
    f = cmu * v - params.g * tabs.x
    # f_q = d/dq[(c-u) v] - g x_q with x_q = h_p
    f_q = -parts["u_q"] * v + cmu * parts["v_q"] - params.g * tabs.hp
    shape = tabs.h.shape
    return FieldGrid(
        theta=grid.theta,
        p=grid.p,
        q=q,
        x=tabs.x,
        y=y,
        u=state.c - cmu,
        v=v,
        P=P,
        psi=np.broadcast_to(-grid.p[:, None], shape),
        phi=np.broadcast_to(-q[None, :], shape),
        f=f,
        u_x=parts["u_x"],
        u_y=parts["u_y"],
        v_x=parts["v_x"],
        v_y=parts["v_y"],
        P_x=parts["P_x"],
        P_y=parts["P_y"],
        h=tabs.h,
        h_q=tabs.hq,
        h_p=tabs.hp,
        f_q=f_q,
        c=state.c,
        m=state.m,
        Q=state.Q,
        g=params.g,
        P0=params.P0,
        d=params.d,
        state=state,
    )


def field_csv(fields: FieldGrid) -> str:
    """CSV dump of the field grid, one row per node, row-major over (p, q).

    Full-precision decimal (round-trips exactly through float parsing).
    """
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    cols = [
        np.broadcast_to(fields.q[None, :], fields.h.shape),
        np.broadcast_to(fields.p[:, None], fields.h.shape),
        fields.x, fields.y, fields.u, fields.v, fields.P,
        fields.psi, fields.phi, fields.f,
        fields.u_x, fields.u_y, fields.v_x, fields.v_y,
        fields.P_x, fields.P_y,
    ]
    M1, N1 = fields.h.shape
    for j in range(M1):
        for k in range(N1):
            buf.write(",".join(repr(float(col[j, k])) for col in cols))
            buf.write("\n")
    return buf.getvalue()
