"""Gauge transforms linking the original, renormalized and gauged forms.

``gauge_G`` multiplies the whole field by ``e^{2 i g t <|u|^2>}`` and
``gauge_J`` rotates each mode by ``e^{-i g t |u0(n)|^2}``; ``g`` is the
signed coupling (1 for the defocusing cubic equation).  Both act
diagonally on coefficients, so they preserve every ``|c(n)|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fnls_lab.spectral import GridSpec, SpectralField


def _direction_sign(direction: str) -> int:
    if direction == "forward":
        return 1
    if direction == "inverse":
        return -1
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def gauge_G(u: SpectralField, direction: str = "forward", coupling: float = 1.0) -> SpectralField:
    """``G[u](t) = exp(2 i t <|u(t)|^2>) u(t)``; the inverse flips the sign.

    The average ``<|u|^2>`` is the coefficient mass, which both directions
    read off the field they are given (it is the same for ``u`` and ``G[u]``).
    """
    phase = np.exp(2j * _direction_sign(direction) * coupling * u.time * u.mass())
    return u.with_coeffs(u.coeffs * phase)


@dataclass(frozen=True, eq=False)
class GaugeContext:
    """Frozen reference spectrum ``u0(n)`` used by the second gauge."""

    grid: GridSpec
    reference_spectrum: np.ndarray

    def __post_init__(self):
        ref = np.array(self.reference_spectrum, dtype=np.complex128)
        if ref.shape != (self.grid.modes,):
            raise ValueError("reference spectrum does not match the grid")
        ref.setflags(write=False)
        object.__setattr__(self, "reference_spectrum", ref)

    @classmethod
    def from_field(cls, u0: SpectralField) -> "GaugeContext":
        return cls(u0.grid, u0.coeffs)


def gauge_J(v: SpectralField, ctx: GaugeContext, direction: str = "forward", coupling: float = 1.0) -> SpectralField:
    """``J[v](t, n) = exp(-i t |u0(n)|^2) v(t, n)``; the inverse flips the sign."""
    if v.grid != ctx.grid:
        raise ValueError(f"grid mismatch: field {v.grid} vs context {ctx.grid}")
    s = _direction_sign(direction)
    a = np.abs(ctx.reference_spectrum) ** 2
    return v.with_coeffs(v.coeffs * np.exp(-1j * s * coupling * v.time * a))
