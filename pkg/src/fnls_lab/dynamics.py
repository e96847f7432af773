"""Equation forms, their Fourier-side nonlinearities and time stepping.

The three forms evolve Fourier coefficients through

    i d/dt c(n) = |xi_n|^alpha c(n) + g * term(n),      g = sign * coupling,

with ``term`` the cubic ``|u|^2 u`` (original), ``(|v|^2 - 2 <|v|^2>) v``
(renormalized) or ``N_2(w) - R_2(w)`` (gauged).  Everything is a Galerkin
truncation: state and nonlinear terms live on ``|n| <= grid.cutoff`` and
the cubic convolution is computed alias-free by zero padding, so the
truncated system keeps every algebraic identity of the untruncated one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from fnls_lab.spectral import GridSpec, NormSpec, SpectralField, fractional_symbol, japanese, sobolev_norm

log = logging.getLogger(__name__)

FORMS = ("original", "renormalized", "gauged")
SIGNS = {"defocusing": 1, "focusing": -1, 1: 1, -1: -1}
BLOWUP_LIMIT = 1e12


class IntegrationError(RuntimeError):
    """Raised when a step produces non-finite or runaway coefficients.

    ``time`` is the start time of the failing step; ``trajectory`` holds
    whatever was stored before the failure (set by :func:`run`).
    """

    def __init__(self, message: str, time: float, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial data family.

    kind:
        ``'explicit'``: ``coefficients`` maps signed frequency to value.
        ``'profile'``: smooth profile (``'gaussian'``, ``'modes'``).
        ``'random'``: ``amplitude * g_n / <xi_n>^gamma`` at wavenumber
        ``xi_n``, with i.i.d. standard complex Gaussians ``g_n`` drawn from
        ``seed`` (``modulus='gaussian'``) or unimodular ``g_n`` with uniform
        random phases (``modulus='fixed'``).
    """

    kind: str = "profile"
    amplitude: float = 1.0
    profile: str = "gaussian"
    width: Optional[float] = None
    carrier: int = 1
    coefficients: Optional[tuple] = None
    gamma: float = 0.5
    seed: int = 0
    modulus: str = "gaussian"

    def __post_init__(self):
        if self.kind not in ("explicit", "profile", "random"):
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if self.kind == "explicit" and self.coefficients is None:
            raise ValueError("explicit initial data needs coefficients")
        if self.kind == "profile" and self.profile not in ("gaussian", "modes"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.modulus not in ("gaussian", "fixed"):
            raise ValueError(f"unknown modulus {self.modulus!r}")
        if self.coefficients is not None and isinstance(self.coefficients, dict):
            object.__setattr__(self, "coefficients", tuple(sorted(self.coefficients.items())))

    def build(self, grid: GridSpec) -> SpectralField:
        A = self.amplitude
        if self.kind == "explicit":
            f = SpectralField.from_modes(grid, {int(n): complex(a) for n, a in self.coefficients})
            return (f * A).truncate()
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            if self.modulus == "fixed":
                g = np.exp(2j * math.pi * rng.random(grid.modes))
            else:
                g = (rng.standard_normal(grid.modes) + 1j * rng.standard_normal(grid.modes)) / math.sqrt(2.0)
            c = A * g / japanese(grid.wavenumbers) ** self.gamma
            return SpectralField(grid, c).truncate()
        if self.profile == "gaussian":
            L = grid.period
            w = L / 8.0 if self.width is None else self.width
            x = grid.x
            u = A * np.exp(-(((x - L / 2) / w) ** 2)) * np.exp(1j * self.carrier * grid.scale * x)
            return SpectralField.from_physical(grid, u).truncate()
        # 'modes': a fixed low-frequency trigonometric polynomial
        modes = {0: 0.6, 1: 0.5 + 0.3j, -1: 0.25, 2: -0.2j, -3: 0.1}
        return (SpectralField.from_modes(grid, modes) * A).truncate()


@dataclass(frozen=True, eq=False)
class EquationSpec:
    """Dynamics: dispersion order, sign, form, grid and initial data.

    ``coupling`` scales the nonlinearity (``coupling=0`` is the free flow);
    the cubic fNLS itself has ``coupling=1``.
    """

    grid: GridSpec
    alpha: float
    sign: int = 1
    form: str = "original"
    initial_data: InitialDataSpec = field(default_factory=InitialDataSpec)
    reference_data: Optional[np.ndarray] = None
    coupling: float = 1.0

    def __post_init__(self):
        if not self.alpha > 2:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be defocusing or focusing, got {self.sign!r}")
        object.__setattr__(self, "sign", SIGNS[self.sign])
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.form == "gauged":
            if self.reference_data is None:
                raise ValueError("gauged form requires reference_data")
            ref = np.array(self.reference_data, dtype=np.complex128)
            if ref.shape != (self.grid.modes,):
                raise ValueError("reference_data does not match the grid")
            ref.setflags(write=False)
            object.__setattr__(self, "reference_data", ref)

    @property
    def g(self) -> float:
        return self.sign * self.coupling

    def initial_field(self) -> SpectralField:
        return self.initial_data.build(self.grid)

    def symbol(self) -> np.ndarray:
        return fractional_symbol(self.grid.freqs, self.alpha, self.grid.period)


@dataclass(frozen=True)
class IntegratorSpec:
    scheme: str = "irk4"
    dt: float = 1e-3
    t_end: float = 1.0
    store_every: int = 10

    def __post_init__(self):
        if self.scheme not in ("irk4", "split-step"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if int(self.store_every) != self.store_every or self.store_every < 1:
            raise ValueError("store_every must be a positive integer")
        if abs(self.n_steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(f"dt={self.dt} does not divide t_end={self.t_end}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


# -- nonlinear terms ----------------------------------------------------------


def trilinear(a: np.ndarray, b: np.ndarray, c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``sum_{n1 - n2 + n3 = n} a(n1) conj(b(n2)) c(n3)`` for every grid ``n``.

    Computed exactly (no aliasing) by zero padding to twice the grid.
    """
    K = grid.modes
    P = 2 * K
    pos = np.mod(grid.freqs, P)

    def phys(v):
        big = np.zeros(P, dtype=np.complex128)
        big[pos] = v
        return np.fft.ifft(big) * P

    ua = phys(a)
    ub = ua if b is a else phys(b)
    uc = ua if c is a else phys(c)
    prod = np.fft.fft(ua * np.conj(ub) * uc) / P
    return prod[pos]


def cubic(u: SpectralField) -> SpectralField:
    """Coefficients of ``|u|^2 u`` projected on the retained band."""
    c = u.coeffs
    out = trilinear(c, c, c, u.grid)
    return u.with_coeffs(np.where(u.grid.band_mask, out, 0.0))


def reference_phase(reference: np.ndarray) -> np.ndarray:
    """``|reference(n)|^2``, the per-mode frequency shift of the second gauge."""
    return np.abs(reference) ** 2


def nonresonant(u: SpectralField) -> np.ndarray:
    """``N_1(u)``: the cubic sum restricted to ``n1 != n2, n2 != n3``."""
    c = u.coeffs
    full = trilinear(c, c, c, u.grid)
    out = full - 2.0 * u.mass() * c + np.abs(c) ** 2 * c
    return np.where(u.grid.band_mask, out, 0.0)


def resonant(u: SpectralField) -> np.ndarray:
    """``R_1(u)``: ``|c(n)|^2 c(n)``."""
    return np.abs(u.coeffs) ** 2 * u.coeffs


def nonlinearity(u: SpectralField, spec: EquationSpec) -> SpectralField:
    """Fourier coefficients of the nonlinear term (before the factor ``g``).

    For the gauged form ``u.time`` is the physical time entering the
    phase ``e^{i g t Psi}``.
    """
    if u.grid != spec.grid:
        raise ValueError("field grid does not match the equation grid")
    if spec.form == "original":
        return cubic(u)
    if spec.form == "renormalized":
        return cubic(u) - u.truncate() * (2.0 * u.mass())
    if spec.reference_data is None:
        raise ValueError("gauged form requires reference_data")
    a = reference_phase(spec.reference_data)
    ph = np.exp(1j * spec.g * u.time * a)
    v = u.with_coeffs(ph * u.coeffs)
    n2 = np.conj(ph) * nonresonant(v)
    r2 = (np.abs(u.coeffs) ** 2 - a) * u.coeffs
    return u.with_coeffs(np.where(u.grid.band_mask, n2 - r2, 0.0))


def rhs_nonlinear(u: SpectralField, spec: EquationSpec) -> np.ndarray:
    """``-i g term(u)``: the nonlinear part of ``d/dt c``."""
    if spec.g == 0.0:
        return np.zeros_like(u.coeffs)
    return -1j * spec.g * nonlinearity(u, spec).coeffs


# -- time stepping -------------------------------------------------------------


def free_evolve(f: SpectralField, t: float, alpha: float) -> SpectralField:
    """Apply ``S(t) = exp(-i t D^alpha)``; advances ``f.time`` by ``t``."""
    sym = fractional_symbol(f.grid.freqs, alpha, f.grid.period)
    return SpectralField(f.grid, f.coeffs * np.exp(-1j * t * sym), f.time + t)


def _irk4(u: SpectralField, spec: EquationSpec, dt: float) -> np.ndarray:
    # Runge-Kutta 4 on the interaction-picture variable exp(i t L) c.
    E = np.exp(-0.5j * dt * spec.symbol())
    t0 = u.time
    g = u.grid

    def F(t, c):
        return rhs_nonlinear(SpectralField(g, c, t), spec)

    c0 = u.coeffs
    cI = E * c0
    k1 = E * F(t0, c0)
    k2 = F(t0 + dt / 2, cI + (dt / 2) * k1)
    k3 = F(t0 + dt / 2, cI + (dt / 2) * k2)
    k4 = F(t0 + dt, E * (cI + dt * k3))
    return E * (cI + (dt / 6) * (k1 + 2 * k2 + 2 * k3)) + (dt / 6) * k4


def _split_step(u: SpectralField, spec: EquationSpec, dt: float) -> np.ndarray:
    # Strang splitting; the nonlinear substep is one classical RK4 step.
    E = np.exp(-0.5j * dt * spec.symbol())
    g = u.grid
    t0 = u.time

    def F(t, c):
        return rhs_nonlinear(SpectralField(g, c, t), spec)

    c = E * u.coeffs
    tm = t0 + dt / 2
    k1 = F(tm, c)
    k2 = F(tm, c + dt / 2 * k1)
    k3 = F(tm, c + dt / 2 * k2)
    k4 = F(tm, c + dt * k3)
    c = c + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return E * c


def step(u: SpectralField, spec: EquationSpec, dt: float, scheme: str = "irk4") -> SpectralField:
    """Advance one step of size ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme == "irk4":
        c = _irk4(u, spec, dt)
    elif scheme == "split-step":
        c = _split_step(u, spec, dt)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(c)):
        raise IntegrationError(f"non-finite coefficients in step from t={u.time:.6g}", u.time)
    peak = float(np.max(np.abs(c)))
    if peak > BLOWUP_LIMIT:
        raise IntegrationError(f"coefficient modulus {peak:.3e} exceeds blow-up guard at t={u.time:.6g}", u.time)
    return SpectralField(u.grid, c, u.time + dt)


# -- trajectories -------------------------------------------------------------

DIAGNOSTICS = ("mass", "h_s_norm", "modified_mass", "corrected_mass", "lambda4_residual_imag")


@dataclass
class Trajectory:
    """Stored snapshots plus diagnostic series sampled at the same times."""

    spec: EquationSpec
    integrator: IntegratorSpec
    snapshots: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def coefficients(self) -> np.ndarray:
        return np.stack([s.coeffs for s in self.snapshots])


def diagnostic_values(u: SpectralField, spec: EquationSpec, names: Sequence[str], i_operator=None, norm: Optional[NormSpec] = None) -> dict:
    from fnls_lab import imethod

    out = {}
    need_i = {"modified_mass", "corrected_mass", "lambda4_residual_imag"} & set(names)
    if need_i and i_operator is None:
        raise ValueError(f"diagnostics {sorted(need_i)} need an I-operator")
    corr = None
    for name in names:
        if name == "mass":
            out[name] = u.mass()
        elif name == "h_s_norm":
            out[name] = sobolev_norm(u, norm or NormSpec(s=0.0))
        elif name == "modified_mass":
            out[name] = imethod.modified_mass(u, i_operator)
        elif name in ("corrected_mass", "lambda4_residual_imag"):
            if corr is None:
                corr = imethod.corrected_mass_parts(u, i_operator, spec.alpha, **_variant_args(spec, u))
            out[name] = corr[0] if name == "corrected_mass" else corr[1]
        else:
            raise ValueError(f"unknown diagnostic {name!r}; known: {DIAGNOSTICS}")
    return out


def _variant_args(spec: EquationSpec, u: SpectralField) -> dict:
    if spec.form == "gauged":
        return dict(variant="torus", reference=spec.reference_data, t=u.time, coupling=spec.g)
    return dict(variant="line", coupling=spec.g)


def run(
    spec: EquationSpec,
    integ: IntegratorSpec,
    diagnostics: Sequence[str] = ("mass",),
    i_operator=None,
    norm: Optional[NormSpec] = None,
    initial: Optional[SpectralField] = None,
    callback: Optional[Callable] = None,
) -> Trajectory:
    """Integrate from the initial data and record snapshots every ``store_every`` steps.

    On failure the :class:`IntegrationError` carries the partial trajectory.
    """
    u = spec.initial_field() if initial is None else initial
    if u.grid != spec.grid:
        raise ValueError("initial field grid does not match the equation grid")
    traj = Trajectory(spec, integ, diagnostics={name: [] for name in diagnostics})

    def record(v):
        traj.snapshots.append(v)
        for k, val in diagnostic_values(v, spec, diagnostics, i_operator, norm).items():
            traj.diagnostics[k].append(val)
        if callback is not None:
            callback(v)

    record(u)
    t0 = u.time
    try:
        for k in range(1, integ.n_steps + 1):
            u = step(u, spec, integ.dt, integ.scheme)
            # keep the clock on the grid t0 + k dt
            u = u.at_time(t0 + k * integ.dt)
            if k % integ.store_every == 0:
                record(u)
    except IntegrationError as exc:
        traj.diagnostics = {k: np.array(v) for k, v in traj.diagnostics.items()}
        exc.trajectory = traj
        log.error("integration failed: %s", exc)
        raise
    traj.diagnostics = {k: np.array(v) for k, v in traj.diagnostics.items()}
    return traj
