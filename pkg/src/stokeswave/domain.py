"""Value types, nondimensional conventions, grids, and the flat-water baseline.

Conventions used throughout the package: gravity defaults to 1, the spatial
period is fixed at 2*pi, and the mean depth d stays a free input.  All fields
live in the frame travelling with the wave, where the flow is steady; the wave
moves with speed c > 0.  Waves are symmetric about the crest, so only the half
period theta = q/c in [0, pi] is ever stored.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

__all__ = [
    "WAVELENGTH",
    "AmplitudeTarget",
    "WaveParameters",
    "SolverState",
    "ConformalGrid",
    "FieldGrid",
    "CheckResult",
    "VerificationReport",
    "linear_wave_speed",
    "flat_water_state",
    "make_grid",
    "save_state",
    "load_state",
    "atomic_write_text",
]

WAVELENGTH = 2.0 * math.pi

TargetKind = Literal["height", "crest_speed_ratio"]


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AmplitudeTarget:
    """Continuation target: total wave height H, or crest speed ratio s.

    Exactly one scalar describes how nonlinear the wave should be.  H is the
    crest-to-trough height (H = 0 is flat water); s = (c - u_crest)/c equals 1
    for flat water and tends to 0 as the wave of greatest height is approached.
    """

    kind: TargetKind
    value: float

    def __post_init__(self):
        if self.kind not in ("height", "crest_speed_ratio"):
            raise ValueError(f"unknown amplitude target kind: {self.kind!r}")
        v = float(self.value)
        object.__setattr__(self, "value", v)
        if self.kind == "height" and v < 0.0:
            raise ValueError("wave height target must be >= 0")
        if self.kind == "crest_speed_ratio" and not 0.0 < v <= 1.0:
            raise ValueError("crest speed ratio target must lie in (0, 1]")

    def to_json(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_json(cls, data: dict) -> "AmplitudeTarget":
        return cls(kind=data["kind"], value=float(data["value"]))


@dataclass(frozen=True)
class WaveParameters:
    """Physical constants and gauge choices for one wave problem.

    The wavelength is fixed at 2*pi and is not a field.  g and d must be
    positive; P0 is the constant pressure applied along the free surface.
    """

    d: float
    g: float = 1.0
    P0: float = 0.0
    target: AmplitudeTarget = field(
        default_factory=lambda: AmplitudeTarget("height", 0.0)
    )

    def __post_init__(self):
        if not self.g > 0.0:
            raise ValueError("gravitational acceleration g must be positive")
        if not self.d > 0.0:
            raise ValueError("mean depth d must be positive")
        if not isinstance(self.target, AmplitudeTarget):
            raise ValueError("target must be an AmplitudeTarget")

    @property
    def wavelength(self) -> float:
        return WAVELENGTH

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "d": self.d,
            "P0": self.P0,
            "target": self.target.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "WaveParameters":
        return cls(
            d=float(data["d"]),
            g=float(data.get("g", 1.0)),
            P0=float(data.get("P0", 0.0)),
            target=AmplitudeTarget.from_json(data["target"]),
        )


@dataclass(frozen=True, eq=False)
class SolverState:
    """Unknowns of the fixed-boundary problem.

    b[0] multiplies the term linear in p + m; b[n] for n >= 1 multiplies the
    sinh(n (p+m)/c) cos(n q/c) mode, so the bed condition h(q, -m) = 0 and the
    crest symmetry hold termwise.  c is the wave speed, m the relative mass
    flux (stream-function value spanning bed to surface) and Q the hydraulic
    head.  Only cosine modes are stored; the missing half period is implied by
    symmetry (u, P, h even in q, v odd).
    """

    b: np.ndarray
    c: float
    m: float
    Q: float

    def __post_init__(self):
        b = _readonly(self.b)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "Q", float(self.Q))
        if b.ndim != 1 or b.size < 1:
            raise ValueError("b must be a 1-D vector holding at least b0")
        if not np.all(np.isfinite(b)):
            raise ValueError("coefficient vector b must be finite")
        if not (self.c > 0.0 and self.m > 0.0):
            raise ValueError("wave speed c and mass flux m must be positive")

    @property
    def n_modes(self) -> int:
        return self.b.size - 1

    def with_modes(self, n_modes: int) -> "SolverState":
        """Zero-padded (or truncated, if the tail is zero) copy with n_modes modes."""
        if n_modes < 0:
            raise ValueError("n_modes must be >= 0")
        b = np.zeros(n_modes + 1)
        k = min(n_modes, self.n_modes) + 1
        b[:k] = self.b[:k]
        if k <= self.n_modes and np.any(self.b[k:] != 0.0):
            raise ValueError("cannot truncate nonzero coefficients")
        return SolverState(b=b, c=self.c, m=self.m, Q=self.Q)

    def to_json(self) -> dict:
        return {
            "b": [float(x) for x in self.b],
            "c": self.c,
            "m": self.m,
            "Q": self.Q,
            "N": self.n_modes,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SolverState":
        b = np.asarray(data["b"], dtype=float)
        if "N" in data and int(data["N"]) != b.size - 1:
            raise ValueError("inconsistent state file: N does not match len(b) - 1")
        return cls(b=b, c=float(data["c"]), m=float(data["m"]), Q=float(data["Q"]))


@dataclass(frozen=True, eq=False)
class ConformalGrid:
    """Collocation nodes on the conformal rectangle.

    theta holds the N+1 surface nodes k*pi/N of the normalized angle
    theta = q/c over the half period [0, pi]; p holds the M+1 levels from 0
    down to -m.  Both endpoints of both axes are included bit-exactly.
    """

    N: int
    M: int
    theta: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly(self.theta))
        object.__setattr__(self, "p", _readonly(self.p))

    @property
    def m(self) -> float:
        """Mass flux the p levels were built for (p spans [-m, 0])."""
        return -float(self.p[-1])

    @property
    def sigma(self) -> np.ndarray:
        """Scaled vertical coordinate (p + m)/m: 1 at the surface, 0 on the bed."""
        return 1.0 + self.p / self.m


def make_grid(N: int, M: int, state: SolverState) -> ConformalGrid:
    """Build the (N+1) x (M+1) collocation grid for a state.

    Parameters
    ----------
    N : number of Fourier modes; N >= 8.
    M : number of vertical levels; M >= 4.
    state : the wave the grid is for; only its mass flux m enters (the p levels
        span [-m, 0]).
    """
    if N < 8:
        raise ValueError("need at least N = 8 Fourier modes")
    if M < 4:
        raise ValueError("need at least M = 4 vertical levels")
    theta = np.linspace(0.0, math.pi, N + 1)
    p = np.linspace(0.0, -state.m, M + 1)
    return ConformalGrid(N=N, M=M, theta=theta, p=p)


def linear_wave_speed(d: float, g: float = 1.0) -> float:
    """Phase speed of infinitesimal waves of unit wavenumber: sqrt(g tanh d)."""
    return math.sqrt(g * math.tanh(d))


def flat_water_state(params: WaveParameters, n_modes: int = 0) -> SolverState:
    """Analytic zero-amplitude state: uniform stream at the linear wave speed.

    h(q, p) = (p + m)/c with m = c d and Q = c^2 + 2 g d; the speed comes from
    the dispersion relation c^2 = g tanh(d) (the zero-amplitude limit of the
    branch).  The zero mean current gauge pins b0 = 1/c.
    """
    c = linear_wave_speed(params.d, params.g)
    b = np.zeros(n_modes + 1)
    b[0] = 1.0 / c
    return SolverState(
        b=b,
        c=c,
        m=c * params.d,
        Q=c * c + 2.0 * params.g * params.d,
    )


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Per-node physical samples on the conformal grid.

    2-D arrays are indexed [level, node]: row 0 is the free surface p = 0,
    row M the bed p = -m; column 0 the crest line theta = 0, column N the
    trough line theta = pi.  psi = -p and phi = -q hold by definition of the
    transform; y = h - d at every node.  h_q, h_p and f_q are carried along
    for the verifier (spectral values, not finite differences).
    """

    theta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    P: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    u_x: np.ndarray
    u_y: np.ndarray
    v_x: np.ndarray
    v_y: np.ndarray
    P_x: np.ndarray
    P_y: np.ndarray
    h: np.ndarray
    h_q: np.ndarray
    h_p: np.ndarray
    f_q: np.ndarray
    c: float
    m: float
    Q: float
    g: float
    P0: float
    d: float
    state: "SolverState | None" = None

    def __post_init__(self):
        for name in (
            "theta", "p", "q", "x", "y", "u", "v", "P", "psi", "phi", "f",
            "u_x", "u_y", "v_x", "v_y", "P_x", "P_y", "h", "h_q", "h_p", "f_q",
        ):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def n_levels(self) -> int:
        return self.p.size - 1

    @property
    def n_nodes(self) -> int:
        return self.theta.size - 1


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verifier check with the worst observed margin."""

    name: str
    passed: bool
    worst_margin: float | None = None
    worst_location: tuple[float, float] | None = None
    tolerance: float | None = None
    epsilon: float | None = None
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        loc = None
        if self.worst_location is not None:
            loc = {"q": self.worst_location[0], "p": self.worst_location[1]}
        out = {
            "name": self.name,
            "pass": self.passed,
            "worst_margin": self.worst_margin,
            "worst_location": loc,
            "tolerance": self.tolerance,
            "epsilon": self.epsilon,
        }
        if self.flags:
            out["flags"] = list(self.flags)
        return out


@dataclass(frozen=True)
class VerificationReport:
    """Structured pass/fail outcomes for every verifier check."""

    checks: tuple[CheckResult, ...]

    def __post_init__(self):
        names = [c.name for c in self.checks]
        if len(names) != len(set(names)):
            raise ValueError("duplicate check names in report")

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "checks": [c.to_json() for c in self.checks],
            "overall_pass": self.overall_pass,
        }


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file and rename, so readers never see partial files."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_state(state: SolverState, path) -> None:
    atomic_write_text(path, json.dumps(state.to_json()) + "\n")


def load_state(path) -> SolverState:
    with open(path) as fh:
        return SolverState.from_json(json.load(fh))
