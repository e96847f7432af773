"""Grids, Fourier-coefficient fields, norms and projections.

Conventions
-----------
A field on the torus of period ``L`` is stored through its Fourier
coefficients,

    u(x) = sum_n c[n] exp(i n x 2 pi / L),

in standard FFT order ``(0, 1, ..., K/2-1, -K/2, ..., -1)``.  The mass
``sum_n |c[n]|^2`` equals the spatial average of ``|u|^2``; it is the
normalisation used for every average over the torus in this package.
Multipliers are evaluated at the physical wavenumber ``xi = 2 pi n / L``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.signal.windows import tukey

TWO_PI = 2.0 * math.pi

SNAPSHOT_MAGIC = b"FNLS"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIdd")


def japanese(x):
    """``<x> = (1 + |x|^2)^(1/2)``."""
    return np.sqrt(1.0 + np.abs(x) ** 2)


@dataclass(frozen=True)
class GridSpec:
    """Spatial discretisation of the torus ``[0, period)`` with ``modes`` points.

    ``cutoff`` is the largest retained |n|; coefficients beyond it are
    zero for every field produced by the solver (Galerkin truncation).
    """

    modes: int
    period: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 4 or self.modes % 2:
            raise ValueError(f"modes must be an even integer >= 4, got {self.modes}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )
        object.__setattr__(self, "modes", int(self.modes))
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "dealias_fraction", float(self.dealias_fraction))

    @property
    def cutoff(self) -> int:
        return int(math.floor(self.dealias_fraction * self.modes / 2 + 1e-12))

    @property
    def freqs(self) -> np.ndarray:
        """Signed integer frequencies in FFT order."""
        return np.fft.fftfreq(self.modes, d=1.0 / self.modes).round().astype(np.int64)

    @property
    def scale(self) -> float:
        return TWO_PI / self.period

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.freqs * self.scale

    @property
    def band_mask(self) -> np.ndarray:
        return np.abs(self.freqs) <= self.cutoff

    @property
    def band(self) -> np.ndarray:
        """Retained frequencies in increasing order."""
        return np.arange(-self.cutoff, self.cutoff + 1, dtype=np.int64)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.modes) * (self.period / self.modes)

    def index(self, n) -> np.ndarray:
        """FFT-order position of signed frequency ``n`` (no range check)."""
        return np.mod(n, self.modes)

    def contains(self, n) -> np.ndarray:
        n = np.asarray(n)
        return (n >= -self.modes // 2) & (n < self.modes // 2)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a periodic complex field at time ``time``."""

    grid: GridSpec
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.modes,):
            raise ValueError(
                f"coefficient array has shape {c.shape}, expected ({self.grid.modes},)"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def zeros(cls, grid: GridSpec, time: float = 0.0) -> "SpectralField":
        return cls(grid, np.zeros(grid.modes, dtype=np.complex128), time)

    @classmethod
    def from_modes(cls, grid: GridSpec, modes: dict, time: float = 0.0) -> "SpectralField":
        """Build a field from ``{n: coefficient}``."""
        c = np.zeros(grid.modes, dtype=np.complex128)
        for n, a in modes.items():
            if not grid.contains(n):
                raise ValueError(f"frequency {n} is not on a grid of {grid.modes} modes")
            c[grid.index(n)] = a
        return cls(grid, c, time)

    @classmethod
    def from_physical(cls, grid: GridSpec, values, time: float = 0.0) -> "SpectralField":
        values = np.asarray(values, dtype=np.complex128)
        return cls(grid, np.fft.fft(values) / grid.modes, time)

    def physical(self) -> np.ndarray:
        return np.fft.ifft(self.coeffs) * self.grid.modes

    def coeff(self, n) -> complex:
        return self.coeffs[self.grid.index(n)]

    def with_coeffs(self, coeffs, time: Optional[float] = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.time if time is None else time)

    def at_time(self, time: float) -> "SpectralField":
        return replace(self, time=time)

    def mass(self) -> float:
        """``sum_n |c[n]|^2`` (the spatial average of ``|u|^2``)."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def l2_norm(self) -> float:
        return math.sqrt(self.mass())

    def conj(self) -> "SpectralField":
        """Coefficients of the complex conjugate field: ``conj(c[-n])``."""
        g = self.grid
        n = g.freqs
        out = np.zeros_like(self.coeffs)
        ok = g.contains(-n)
        out[ok] = np.conj(self.coeffs[g.index(-n[ok])])
        return SpectralField(g, out, self.time)

    def truncate(self) -> "SpectralField":
        """Zero every coefficient outside the retained band."""
        return self.with_coeffs(np.where(self.grid.band_mask, self.coeffs, 0.0))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, a) -> "SpectralField":
        return self.with_coeffs(self.coeffs * a)

    __rmul__ = __mul__

    # binary snapshot format ------------------------------------------------

    def to_bytes(self) -> bytes:
        g = self.grid
        head = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.modes, g.period, self.time)
        return head + np.ascontiguousarray(self.coeffs, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, dealias_fraction: float = 2.0 / 3.0) -> "SpectralField":
        if len(data) < _HEADER.size:
            raise ValueError("snapshot too short for header")
        magic, version, modes, period, time = _HEADER.unpack_from(data)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        body = data[_HEADER.size:]
        if len(body) != 16 * modes:
            raise ValueError(f"snapshot body has {len(body)} bytes, expected {16 * modes}")
        coeffs = np.frombuffer(body, dtype="<c16").astype(np.complex128)
        return cls(GridSpec(modes, period, dealias_fraction), coeffs, time)


def _check_same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True)
class NormSpec:
    s: float = 0.0
    M: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self):
        if self.M is not None and self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")


def fractional_symbol(n, alpha: float, period: float = TWO_PI):
    """``|2 pi n / L|^alpha``, the symbol of ``D^alpha`` at grid frequency ``n``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return np.abs(np.asarray(n) * (TWO_PI / period)) ** alpha


def critical_index(alpha: float) -> float:
    """Scaling-critical Sobolev index ``(1 - alpha) / 2``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (1.0 - alpha) / 2.0


def lwp_threshold(alpha: float, domain: str) -> float:
    """Lowest Sobolev index of the local theory: ``(2-alpha)/4`` on the line, ``(2-alpha)/6`` on the circle."""
    if not alpha > 2:
        raise ValueError(f"the local theory needs alpha > 2, got {alpha}")
    if domain == "line":
        return (2.0 - alpha) / 4.0
    if domain == "circle":
        return (2.0 - alpha) / 6.0
    raise ValueError(f"domain must be 'line' or 'circle', got {domain!r}")


def sobolev_weight(xi, s: float, M: Optional[float] = None):
    M = 1.0 if M is None else M
    return (M * M + np.asarray(xi) ** 2) ** (s / 2.0)


def sobolev_norm(f: SpectralField, spec: NormSpec) -> float:
    """``H^s`` norm, or the ``H^s_M`` norm ``||(M^2 + xi^2)^(s/2) c||`` when ``spec.M`` is set."""
    w = sobolev_weight(f.grid.wavenumbers, spec.s, spec.M)
    return float(np.sqrt(np.sum((w * np.abs(f.coeffs)) ** 2)))


def dyadic_band_mask(grid: GridSpec, N: float, band: str) -> np.ndarray:
    if N < 1 or not float(math.log2(N)).is_integer():
        raise ValueError(f"N must be a dyadic number >= 1, got {N}")
    a = np.abs(grid.wavenumbers)
    if band == "dyadic":
        if N == 1:
            return a <= 1.0
        return (a > N / 2.0) & (a <= N)
    if band == "low":
        return a <= N
    if band == "high":
        return a > N
    raise ValueError(f"band must be 'dyadic', 'low' or 'high', got {band!r}")


def project(f: SpectralField, N: float, band: str = "dyadic") -> SpectralField:
    """Littlewood-Paley projection: ``pi_N`` (``band='dyadic'``), ``pi_{<=N}`` (``'low'``) or ``pi_{>N}`` (``'high'``)."""
    mask = dyadic_band_mask(f.grid, N, band)
    return f.with_coeffs(np.where(mask, f.coeffs, 0.0))


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Spatial Fourier coefficients sampled at ``t_j = j T / time_samples``.

    ``values[j, :]`` holds the coefficients (FFT order) at ``t_j``.
    ``taper`` is the cosine-taper fraction applied before any temporal
    transform (0 disables it).
    """

    grid: GridSpec
    T: float
    values: np.ndarray
    taper: float = 0.1

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.ndim != 2 or v.shape[1] != self.grid.modes:
            raise ValueError(
                f"values must have shape (time_samples, {self.grid.modes}), got {v.shape}"
            )
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 0.0 <= self.taper <= 1.0:
            raise ValueError(f"taper must lie in [0, 1], got {self.taper}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def time_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.time_samples

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.time_samples) * self.dt

    def window(self) -> np.ndarray:
        if self.taper == 0.0:
            return np.ones(self.time_samples)
        return tukey(self.time_samples, self.taper, sym=False)

    @classmethod
    def sample(cls, grid: GridSpec, T: float, time_samples: int, func, taper: float = 0.1):
        """Sample ``func(t) -> coefficient array`` on the uniform time grid."""
        t = np.arange(time_samples) * (T / time_samples)
        return cls(grid, T, np.stack([np.asarray(func(tj)) for tj in t]), taper)

    def physical(self, pad_to: Optional[int] = None) -> np.ndarray:
        """Physical values ``u(t_j, x_l)``, optionally on a finer spatial grid."""
        K = self.grid.modes
        P = K if pad_to is None else int(pad_to)
        if P < K:
            raise ValueError("pad_to must be at least the number of modes")
        big = np.zeros((self.time_samples, P), dtype=np.complex128)
        n = self.grid.freqs
        big[:, np.mod(n, P)] = self.values
        return np.fft.ifft(big, axis=1) * P


def xsb_norm(
    F: SpaceTimeField,
    spec: NormSpec,
    alpha: float,
    modulation: str = "standard",
    reference: Optional[np.ndarray] = None,
) -> float:
    """Discrete Fourier restriction norm of a sampled field.

    The field is moved to the interaction picture, ``e^{it mu(n)} c(t, n)``
    with ``mu(n) = |xi_n|^alpha`` (``modulation='standard'``) or
    ``mu(n) = |xi_n|^alpha - |reference(n)|^2`` (``'gauged'``), tapered,
    transformed in time over the periodised window ``[0, T)`` and weighted
    by ``<xi>^{2s} <sigma>^{2b}``.  Without weights the value is
    ``(int_0^T sum_n |window * c|^2 dt)^(1/2)``.
    """
    if F.time_samples & (F.time_samples - 1):
        raise ValueError(f"time_samples must be a power of two, got {F.time_samples}")
    b = 0.0 if spec.b is None else spec.b
    g = F.grid
    mu = fractional_symbol(g.freqs, alpha, g.period)
    if modulation == "gauged":
        if reference is None:
            raise ValueError("gauged modulation needs the reference spectrum")
        reference = np.asarray(reference)
        if reference.shape != (g.modes,):
            raise ValueError("reference spectrum does not match the grid")
        mu = mu - np.abs(reference) ** 2
    elif modulation != "standard":
        raise ValueError(f"unknown modulation {modulation!r}")
    t = F.times[:, None]
    demod = F.values * np.exp(1j * t * mu[None, :]) * F.window()[:, None]
    spec_t = np.fft.fft(demod, axis=0) * F.dt
    sigma = TWO_PI * np.fft.fftfreq(F.time_samples, d=F.dt)
    w = (japanese(sigma)[:, None] ** (2 * b)) * (
        sobolev_weight(g.wavenumbers, 2 * spec.s, spec.M)[None, :]
    )
    return float(np.sqrt(np.sum(w * np.abs(spec_t) ** 2) / F.T))


def lp_norm(F: SpaceTimeField, p: float) -> float:
    """Space-time ``L^p([0,T) x [0,L))`` norm by exact-in-space quadrature."""
    K = F.grid.modes
    pad = K * (int(math.ceil(p / 2.0)) + 1)
    u = F.physical(pad_to=pad)
    w = F.window()[:, None]
    cell = F.dt * F.grid.period / pad
    return float((np.sum(np.abs(w * u) ** p) * cell) ** (1.0 / p))
