"""I-operators, multilinear forms and the modified masses built from them.

Multilinear forms use the zero-sum convention: a multiplier of order d
is a function of integer frequencies ``xi_1 + ... + xi_d = 0`` and

    Lambda_d(M; f_1, ..., f_d) = sum M(xi_1, ..., xi_d) prod_j c_j(xi_j),

with ``Lambda_d(M; f) = Lambda_d(M; f, conj f, f, conj f, ...)``.  The
coefficients of ``conj f`` at ``xi`` are ``conj(c(-xi))``.  Multipliers
receive integer frequencies; they convert to wavenumbers themselves.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from fnls_lab.spectral import GridSpec, SpectralField, japanese


class ResonanceConventionError(ArithmeticError):
    """Nonzero numerator over a vanishing resonance function."""


class ImaginaryResidueError(ArithmeticError):
    """A quantity that must be real came out with a sizeable imaginary part."""


@dataclass(frozen=True)
class IOperatorSpec:
    """Smoothing multiplier: ``m`` (``family='line'``) or ``m_M`` (``'torus'``)."""

    s: float
    N: float
    M: Optional[float] = None
    family: str = "line"

    def __post_init__(self):
        if not self.s < 0:
            raise ValueError(f"s must be negative, got {self.s}")
        if not self.N >= 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.family not in ("line", "torus"):
            raise ValueError(f"family must be 'line' or 'torus', got {self.family!r}")
        if self.family == "torus":
            if self.M is None:
                raise ValueError("torus family requires M")
            if not 1 <= self.M <= self.N ** 2:
                raise ValueError(f"torus family requires 1 <= M <= N^2, got M={self.M}, N={self.N}")


def i_multiplier(xi, spec: IOperatorSpec):
    """``m(xi)``: 1 for ``|xi| < N``, then ``(|xi|/N)^s`` (or ``((M+|xi|)/N)^s``) clipped at 1."""
    a = np.abs(np.asarray(xi, dtype=float))
    shift = spec.M if spec.family == "torus" else 0.0
    with np.errstate(divide="ignore"):
        tail = np.minimum(1.0, ((shift + a) / spec.N) ** spec.s)
    return np.where(a < spec.N, 1.0, tail)


def smoothing_constant(spec: IOperatorSpec, xi) -> float:
    """``max <xi>^s / m(xi)`` over the given frequencies (the ``C`` in ``<xi>^s <= C m(xi)``)."""
    xi = np.asarray(xi, dtype=float)
    return float(np.max(japanese(xi) ** spec.s / i_multiplier(xi, spec)))


def apply_I(u: SpectralField, spec: IOperatorSpec) -> SpectralField:
    return u.with_coeffs(i_multiplier(u.grid.wavenumbers, spec) * u.coeffs)


def modified_mass(u: SpectralField, spec: IOperatorSpec) -> float:
    """``M(Iu) = sum m(n)^2 |c(n)|^2``."""
    m = i_multiplier(u.grid.wavenumbers, spec)
    return float(np.sum((m * np.abs(u.coeffs)) ** 2))


# -- multipliers --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MultiplierOrderD:
    """A multiplier of even order ``d`` on the zero-sum hyperplane."""

    d: int
    func: Callable
    name: str = ""

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ValueError(f"order must be an even integer >= 2, got {self.d}")

    def __call__(self, *xi):
        if len(xi) != self.d:
            raise TypeError(f"{self.name or 'multiplier'} takes {self.d} frequencies, got {len(xi)}")
        return self.func(*xi)


def elongate(mult: MultiplierOrderD, j: int, k: int) -> MultiplierOrderD:
    """Order ``d+k`` multiplier evaluating ``mult`` with ``xi_j`` replaced by ``xi_j + ... + xi_{j+k}``."""
    d = mult.d
    if not 1 <= j <= d:
        raise ValueError(f"slot index must lie in 1..{d}, got {j}")
    if k < 0 or k % 2:
        raise ValueError(f"k must be a non-negative even integer, got {k}")
    if k == 0:
        return mult

    def func(*xi):
        collapsed = xi[j - 1]
        for x in xi[j: j + k]:
            collapsed = collapsed + x
        return mult.func(*xi[: j - 1], collapsed, *xi[j + k:])

    return MultiplierOrderD(d + k, func, f"X^{k}_{j}({mult.name})")


def _symbols(grid: GridSpec, spec: IOperatorSpec, alpha: float):
    h = grid.scale

    def m2(xi):
        return i_multiplier(h * xi, spec) ** 2

    def disp(xi):
        return np.abs(h * xi) ** alpha

    return m2, disp


def mass_multiplier(grid: GridSpec, spec: IOperatorSpec) -> MultiplierOrderD:
    """``m(xi_1) m(xi_2)``, so that ``Lambda_2`` of it is ``M(Iu)``."""
    h = grid.scale
    return MultiplierOrderD(2, lambda a, b: i_multiplier(h * a, spec) * i_multiplier(h * b, spec), "m m")


def M4_multiplier(grid: GridSpec, spec: IOperatorSpec) -> MultiplierOrderD:
    """``(i/2) (m1^2 - m2^2 + m3^2 - m4^2)``."""
    h = grid.scale

    def func(x1, x2, x3, x4):
        m = lambda x: i_multiplier(h * x, spec) ** 2
        return 0.5j * (m(x1) - m(x2) + m(x3) - m(x4))

    return MultiplierOrderD(4, func, "M4")


def resonance_function(x1, x2, x3, x4, alpha: float, scale: float = 1.0):
    """``|xi1|^alpha - |xi2|^alpha + |xi3|^alpha - |xi4|^alpha`` at wavenumbers ``scale * xi``."""
    d = lambda x: np.abs(scale * np.asarray(x)) ** alpha
    return d(x1) - d(x2) + d(x3) - d(x4)


def _sigma4_values(x1, x2, x3, x4, grid: GridSpec, spec: IOperatorSpec, alpha: float):
    m2, disp = _symbols(grid, spec, alpha)
    x1, x2, x3, x4 = np.broadcast_arrays(*(np.asarray(x) for x in (x1, x2, x3, x4)))
    a1, a2, a3, a4 = m2(x1), m2(x2), m2(x3), m2(x4)
    # grouped so that each resonant branch cancels exactly in floating point
    num = (a1 - a2) + (a3 - a4)
    num23 = (a1 - a4) + (a3 - a2)
    den = disp(x1) - disp(x2) + disp(x3) - disp(x4)
    res12 = (x1 + x2) == 0
    res23 = (x2 + x3) == 0
    resonant = res12 | res23
    if np.any((res12 & (num != 0.0)) | (res23 & (num23 != 0.0))):
        raise ResonanceConventionError("sigma4 numerator does not vanish on the resonant set")
    if np.any(~resonant & (den == 0.0)):
        raise ResonanceConventionError("resonance function vanishes off the resonant set")
    safe = np.where(resonant, 1.0, den)
    # -i M4 / phi with M4 = (i/2) num is real: num / (2 phi)
    return np.where(resonant, 0.0, 0.5 * num / safe)


def sigma4_multiplier(grid: GridSpec, spec: IOperatorSpec, alpha: float) -> MultiplierOrderD:
    """``sigma_4 = -i M4 / phi``, set to 0 on the resonant set ``xi1+xi2 = 0`` or ``xi2+xi3 = 0``."""
    return MultiplierOrderD(4, lambda a, b, c, d: _sigma4_values(a, b, c, d, grid, spec, alpha), "sigma4")


def sigma4(
    x1, x2, x3, x4,
    spec: IOperatorSpec,
    alpha: float,
    grid: Optional[GridSpec] = None,
    reference: Optional[np.ndarray] = None,
    t: float = 0.0,
    coupling: float = 1.0,
):
    """Correction multiplier at zero-sum frequencies ``(x1, ..., x4)``.

    With ``reference`` (a frozen spectrum on ``grid``) the phase
    ``e^{i g t Psi}`` of the torus correction is included and the result
    is complex.
    """
    grid = grid or GridSpec(max(4, 2 * (int(np.max(np.abs([x1, x2, x3, x4]))) + 1)))
    x = [np.asarray(v) for v in (x1, x2, x3, x4)]
    if np.any(x[0] + x[1] + x[2] + x[3] != 0):
        raise ValueError("frequencies must satisfy xi1 + xi2 + xi3 + xi4 = 0")
    val = _sigma4_values(*x, grid, spec, alpha)
    if reference is None:
        return val
    psi = phase_psi(x, grid, reference)
    return val * np.exp(1j * coupling * t * psi)


def phase_psi(xi: Sequence, grid: GridSpec, reference: np.ndarray):
    """``Psi`` in zero-sum frequencies: ``sum_j (-1)^(j+1) |u0(n_j)|^2`` with ``n_j = +-xi_j``."""
    a = np.abs(np.asarray(reference)) ** 2
    total = 0.0
    for j, x in enumerate(xi):
        n = x if j % 2 == 0 else -np.asarray(x)
        val = np.where(grid.contains(n), a[grid.index(n)], 0.0)
        total = total + (val if j % 2 == 0 else -val)
    return total


# -- multilinear forms ----------------------------------------------------------

LAMBDA6_MAX_MODES = 64


def lambda_d(mult: MultiplierOrderD, fields: Sequence[SpectralField]) -> complex:
    """Brute-force ``Lambda_d(M; f_1, ..., f_d)`` over the zero-sum hyperplane.

    Only frequencies where the slot's coefficient is nonzero are visited.
    Partial sums are reduced with ``math.fsum``, so the result does not
    depend on evaluation order.
    """
    d = mult.d
    if len(fields) != d:
        raise ValueError(f"order-{d} form needs {d} fields, got {len(fields)}")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("all fields must share a grid")
    if d >= 6 and grid.modes > LAMBDA6_MAX_MODES:
        raise ValueError(f"order-{d} forms are limited to grids of at most {LAMBDA6_MAX_MODES} modes")
    n = grid.freqs
    supports = [np.sort(n[f.coeffs != 0]) for f in fields]
    if any(len(s) == 0 for s in supports):
        return 0j
    vals = [f.coeffs for f in fields]

    def lookup(j, x):
        ok = grid.contains(x)
        return np.where(ok, vals[j][grid.index(np.where(ok, x, 0))], 0.0)

    re_parts, im_parts = [], []
    if d == 2:
        x1 = supports[0]
        x2 = -x1
        term = mult(x1, x2) * vals[0][grid.index(x1)] * lookup(1, x2)
        re_parts.append(float(np.sum(term.real)))
        im_parts.append(float(np.sum(term.imag)))
    else:
        outer = supports[: d - 3]
        a = supports[d - 3][:, None]
        b = supports[d - 2][None, :]
        ca = vals[d - 3][grid.index(a)]
        cb = vals[d - 2][grid.index(b)]
        for head in itertools.product(*outer):
            coef = 1.0 + 0j
            for j, x in enumerate(head):
                coef *= vals[j][grid.index(x)]
            hsum = sum(head)
            last = -(hsum + a + b)
            cl = lookup(d - 1, last)
            if not np.any(cl):
                continue
            xs = [np.full_like(last, x) for x in head] + [np.broadcast_to(a, last.shape), np.broadcast_to(b, last.shape), last]
            term = mult(*xs) * ca * cb * cl
            s = coef * np.sum(term)
            re_parts.append(float(s.real))
            im_parts.append(float(s.imag))
    return complex(math.fsum(re_parts), math.fsum(im_parts))


def lambda_self(mult: MultiplierOrderD, f: SpectralField) -> complex:
    """``Lambda_d(M; f, conj f, f, conj f, ...)``."""
    fb = f.conj()
    return lambda_d(mult, [f if j % 2 == 0 else fb for j in range(mult.d)])


# -- modified masses -----------------------------------------------------------


def _gauge_back(u: SpectralField, variant: str, reference, t, coupling) -> SpectralField:
    # e^{i g t Psi} factorises over slots, so the phased form is the plain
    # form evaluated on J^{-1} w.
    if variant == "line":
        return u
    if variant != "torus":
        raise ValueError(f"variant must be 'line' or 'torus', got {variant!r}")
    if reference is None:
        raise ValueError("torus variant needs the reference spectrum")
    if t is None:
        t = u.time
    a = np.abs(np.asarray(reference)) ** 2
    if a.shape != (u.grid.modes,):
        raise ValueError("reference spectrum does not match the grid")
    return u.with_coeffs(u.coeffs * np.exp(1j * coupling * t * a))


def corrected_mass_parts(
    u: SpectralField,
    spec: IOperatorSpec,
    alpha: float,
    variant: str = "line",
    reference=None,
    t: Optional[float] = None,
    coupling: float = 1.0,
):
    """``(M^4, imaginary residue of the quartic correction)``."""
    base = modified_mass(u, spec)
    if coupling == 0.0:
        return base, 0.0
    v = _gauge_back(u, variant, reference, t, coupling)
    lam = lambda_self(sigma4_multiplier(u.grid, spec, alpha), v)
    return base + coupling * lam.real, coupling * lam.imag


def corrected_mass(
    u: SpectralField,
    spec: IOperatorSpec,
    alpha: float,
    variant: str = "line",
    reference=None,
    t: Optional[float] = None,
    coupling: float = 1.0,
    tol: float = 1e-12,
) -> float:
    """Modified mass plus the quartic correction ``g Lambda_4(sigma_4; u)``.

    ``variant='torus'`` includes the phase ``e^{i g t Psi}`` built from the
    frozen ``reference`` spectrum.  ``coupling`` is the signed nonlinearity
    strength of the dynamics the correction is tuned to.
    """
    value, residue = corrected_mass_parts(u, spec, alpha, variant, reference, t, coupling)
    if abs(residue) > tol * max(1.0, abs(value)):
        raise ImaginaryResidueError(f"quartic correction has imaginary part {residue:.3e}")
    return value


def sextic_multiplier(grid: GridSpec, spec: IOperatorSpec, alpha: float, resonant_inner: bool) -> MultiplierOrderD:
    """``sigma_4(xi1, xi2, xi3, xi456)`` restricted to a retained collapsed frequency.

    ``resonant_inner=False`` additionally drops inner triples with
    ``xi4 + xi5 = 0`` or ``xi5 + xi6 = 0`` (the non-resonant cubic).
    """
    base = elongate(sigma4_multiplier(grid, spec, alpha), 4, 2)
    cut = grid.cutoff

    def func(x1, x2, x3, x4, x5, x6):
        keep = np.abs(x4 + x5 + x6) <= cut
        if not resonant_inner:
            keep &= ((x4 + x5) != 0) & ((x5 + x6) != 0)
        return np.where(keep, base.func(x1, x2, x3, x4, x5, x6), 0.0)

    return MultiplierOrderD(6, func, "sigma4(xi1,xi2,xi3,xi456)")


SEXTIC_MAX_MODES = 32


def mass_derivative_rhs(
    u: SpectralField,
    spec: IOperatorSpec,
    alpha: float,
    order: int = 4,
    variant: str = "line",
    reference=None,
    t: Optional[float] = None,
    coupling: float = 1.0,
) -> float:
    """Time derivative of ``M(Iu)`` (order 4) or of ``M^4(Iu)`` (order 6) predicted by the multilinear identities.

    ``variant='line'`` is the original cubic equation; ``'torus'`` is the
    gauged equation with frozen ``reference`` spectrum (use a zero
    reference for the renormalized equation).
    """
    g = coupling
    if g == 0.0:
        return 0.0
    v = _gauge_back(u, variant, reference, t, g)
    if order == 4:
        lam = lambda_self(M4_multiplier(u.grid, spec), v)
        return g * lam.real
    if order != 6:
        raise ValueError(f"order must be 4 or 6, got {order}")
    if u.grid.modes > SEXTIC_MAX_MODES:
        raise ValueError(f"order-6 identity is limited to grids of at most {SEXTIC_MAX_MODES} modes")
    six = sextic_multiplier(u.grid, spec, alpha, resonant_inner=(variant == "line"))
    total = 4.0 * (1j * lambda_self(six, v)).real
    if variant == "torus":
        vb = v.conj()
        r = v.with_coeffs(np.abs(v.coeffs) ** 2 * v.coeffs)
        quartic = lambda_d(sigma4_multiplier(u.grid, spec, alpha), [r, vb, v, vb])
        total += 4.0 * (1j * quartic).real
    return g * g * total


# -- fast quartic correction -----------------------------------------------------


def quartic_corrections(
    u: SpectralField,
    specs: Sequence[IOperatorSpec],
    alpha: float,
    variant: str = "line",
    reference=None,
    t: Optional[float] = None,
    coupling: float = 1.0,
) -> np.ndarray:
    """``Lambda_4(sigma_4; v)`` for several I-operators in one pass over the band.

    Same sum as :func:`lambda_self` with :func:`sigma4_multiplier`, but the
    products and resonance function are shared between ``specs``.  Needs
    a band-limited field.  Returns complex values, one per spec.
    """
    grid = u.grid
    if np.any(u.coeffs[~grid.band_mask]):
        raise ValueError("fast quartic form needs a band-limited field")
    v = _gauge_back(u, variant, reference, t, coupling)
    cut = grid.cutoff
    band = grid.band
    B = len(band)
    c = v.coeffs[grid.index(band)]
    cb = np.conj(c[::-1])  # conj f at xi is conj(c(-xi))
    h = grid.scale
    disp = np.abs(h * band) ** alpha
    m2 = np.array([i_multiplier(h * band, sp) ** 2 for sp in specs])
    # For fixed xi1 (offset i) the offset of xi4 is 4 cut - i - (j + k), so
    # slot-4 tables are Hankel matrices H[j, k] = y[j + k].
    anti = np.add.outer(np.arange(B), np.arange(B)).ravel()
    re_parts = [[] for _ in specs]
    im_parts = [[] for _ in specs]
    for i in range(B):
        c1 = c[i]
        if c1 == 0:
            continue
        m = np.arange(2 * B - 1)
        i4 = 4 * cut - i - m
        ok = (i4 >= 0) & (i4 < B)
        i4 = np.where(ok, i4, 0)
        y_c = np.where(ok, cb[i4], 0.0)
        y_c[2 * cut] = 0.0  # xi2 + xi3 = 0
        y_d = np.where(ok, disp[i4], 0.0)
        Hc = np.lib.stride_tricks.sliding_window_view(y_c, B)[:B]
        Hd = np.lib.stride_tricks.sliding_window_view(y_d, B)[:B]
        prod = (c1 * cb)[:, None] * c[None, :] * Hc
        prod[2 * cut - i, :] = 0.0  # xi1 + xi2 = 0
        phi = (disp[i] - disp)[:, None] + disp[None, :] - Hd
        w = np.divide(prod, phi, out=np.zeros_like(prod), where=(phi != 0.0))
        rows = w.sum(axis=1)
        cols = w.sum(axis=0)
        diag = np.bincount(anti, weights=w.real.ravel(), minlength=2 * B - 1) + 1j * np.bincount(
            anti, weights=w.imag.ravel(), minlength=2 * B - 1
        )
        total = w.sum()
        y_m = np.where(ok[None, :], m2[:, i4], 0.0)
        for q in range(len(specs)):
            tab = m2[q]
            s = tab[i] * total - tab @ rows + tab @ cols - y_m[q] @ diag
            re_parts[q].append(float(s.real))
            im_parts[q].append(float(s.imag))
    return np.array([0.5 * complex(math.fsum(re), math.fsum(im)) for re, im in zip(re_parts, im_parts)])
