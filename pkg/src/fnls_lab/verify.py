"""Brute-force lemma checkers, estimate probes and identity checks.

Probes measure constants on finite grids; they are evidence, not proofs.
Every report carries the grid, taper and seed it was computed with.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from fnls_lab import dynamics, gauges, imethod
from fnls_lab.dynamics import EquationSpec, InitialDataSpec, IntegratorSpec
from fnls_lab.imethod import IOperatorSpec
from fnls_lab.reports import BoundReport, CheckResult, ScalingReport, fit_line
from fnls_lab.spectral import (
    GridSpec,
    NormSpec,
    SpaceTimeField,
    SpectralField,
    fractional_symbol,
    lp_norm,
    lwp_threshold,
    xsb_norm,
)

log = logging.getLogger(__name__)


# -- resonance lower bound -------------------------------------------------------


def resonance_ratio(alpha: float, x1, x2, x3):
    """``|phi| / (|xi1+xi2| |xi2+xi3| |xi_max|^(alpha-2))`` with ``xi4 = -(xi1+xi2+xi3)``."""
    x1, x2, x3 = (np.asarray(v, dtype=np.int64) for v in (x1, x2, x3))
    x4 = -(x1 + x2 + x3)
    a = [np.abs(v).astype(float) for v in (x1, x2, x3, x4)]
    phi = np.abs(a[0] ** alpha - a[1] ** alpha + a[2] ** alpha - a[3] ** alpha)
    big = np.maximum(np.maximum(a[0], a[1]), np.maximum(a[2], a[3]))
    rhs = np.abs(x1 + x2).astype(float) * np.abs(x2 + x3).astype(float) * big ** (alpha - 2.0)
    return phi / rhs


def check_resonance_bound(alpha: float, R: int) -> BoundReport:
    """Exhaustive minimum of :func:`resonance_ratio` over non-resonant quadruples in ``[-R, R]``."""
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if not 1 <= R <= 128:
        raise ValueError(f"R must lie in 1..128, got {R}")
    r = np.arange(-R, R + 1)
    x2 = r[:, None]
    x3 = r[None, :]
    best = math.inf
    witness = None
    samples = 0
    for x1 in r:
        x4 = -(x1 + x2 + x3)
        ok = (np.abs(x4) <= R) & ((x1 + x2) != 0) & ((x2 + x3) != 0)
        if not np.any(ok):
            continue
        samples += int(ok.sum())
        b2, b3 = np.broadcast_arrays(x2, x3)
        ratio = resonance_ratio(alpha, np.full(int(ok.sum()), x1), b2[ok], b3[ok])
        k = int(np.argmin(ratio))
        if ratio[k] < best:
            best = float(ratio[k])
            w2, w3 = int(b2[ok][k]), int(b3[ok][k])
            witness = (int(x1), w2, w3, -(int(x1) + w2 + w3))
    return BoundReport(
        description="resonance function lower bound",
        samples=samples,
        worst_ratio=best,
        worst_witness=witness,
        parameters={"alpha": alpha, "R": R},
        passed=best > 0.0,
    )


# -- counting lemma ----------------------------------------------------------------


def check_counting_lemma(
    g: Callable,
    I: tuple,
    J: tuple,
    gprime: Optional[Callable] = None,
    window: int = 10 ** 6,
    fine: int = 20001,
) -> BoundReport:
    """Compare ``#{k in J : g(k) in I}`` with ``|I| / inf_J |g'| + 1``.

    Infinite ends of ``J`` are clipped to ``[-window, window]``.  Without
    ``gprime`` the derivative is taken numerically on a fine grid.
    """
    lo = max(J[0], -window)
    hi = min(J[1], window)
    length = I[1] - I[0]
    if length < 0:
        raise ValueError("I must be an interval with I[0] <= I[1]")
    if lo > hi:
        count = 0
        inf_d = math.inf
    else:
        xs = np.linspace(lo, hi, fine) if hi > lo else np.array([lo])
        if gprime is not None:
            d = np.abs(gprime(xs))
        elif len(xs) > 1:
            d = np.abs(np.gradient(g(xs), xs))
        else:
            d = np.array([math.inf])
        inf_d = float(np.min(d))
        ks = np.arange(math.ceil(lo), math.floor(hi) + 1)
        vals = g(ks.astype(float)) if len(ks) else np.array([])
        count = int(np.sum((vals >= I[0]) & (vals <= I[1])))
    if inf_d <= 1e-300:
        raise ValueError("inf |g'| vanishes on J; the counting bound is vacuous")
    bound = length / inf_d + 1.0
    return BoundReport(
        description="counting lemma",
        samples=1,
        worst_ratio=count / bound,
        worst_witness=(count, bound),
        parameters={"I": tuple(I), "J": (lo, hi), "inf_gprime": inf_d},
        passed=count <= bound * (1 + 1e-12),
    )


def phase_function(tau: float, n: int, alpha: float):
    """``g(x) = tau - |x|^alpha + |n-x|^alpha`` and ``g'`` on ``x >= n - x >= 0``."""

    def g(x):
        x = np.asarray(x, dtype=float)
        return tau - np.abs(x) ** alpha + np.abs(n - x) ** alpha

    def gp(x):
        x = np.asarray(x, dtype=float)
        return -alpha * (np.abs(x) ** (alpha - 1) + np.abs(n - x) ** (alpha - 1))

    return g, gp


def sample_counting_lemma(count: int = 1000, seed: int = 0, n_max: int = 200) -> BoundReport:
    """Counting lemma on random instances of :func:`phase_function` over ``J = [n/2, n]``."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    witness = None
    violations = 0
    for _ in range(count):
        alpha = float(rng.uniform(2.05, 5.0))
        n = int(rng.integers(1, n_max + 1))
        tau = float(rng.uniform(-1.0, 1.0) * n ** alpha)
        g, gp = phase_function(tau, n, alpha)
        J = (n / 2.0, float(n))
        lo, hi = sorted((float(g(J[0])), float(g(J[1]))))
        # an interval inside the range of g, with random position and width
        a = float(rng.uniform(lo, hi))
        width = float(rng.uniform(0.0, (hi - lo) * rng.choice([1e-3, 1e-2, 0.1, 1.0])))
        rep = check_counting_lemma(g, (a, a + width), J, gprime=gp)
        violations += not rep.passed
        if rep.worst_ratio > worst:
            worst = rep.worst_ratio
            witness = (tau, n, alpha, a, a + width)
    return BoundReport(
        description="counting lemma on the phase function tau - |x|^alpha + |n-x|^alpha",
        samples=count,
        worst_ratio=worst,
        worst_witness=witness,
        parameters={"seed": seed, "n_max": n_max},
        passed=violations == 0,
        extra={"violations": violations},
    )


# -- estimate probes ----------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleSpec:
    """Random space-time fields: near-free waves with a few temporal harmonics."""

    size: int = 100
    modes: int = 32
    support: Optional[int] = None
    T: float = 1.0
    time_samples: int = 256
    gamma: float = 0.5
    harmonics: int = 2
    taper: float = 0.1
    seed: int = 0


def _random_profile(rng, support: int, harmonics: int, gamma: float):
    n = np.arange(-support, support + 1)
    k = np.arange(-harmonics, harmonics + 1)
    shape = (len(n), len(k))
    r = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    r *= (1.0 + np.abs(n)[:, None]) ** (-gamma) * (1.0 + np.abs(k)[None, :]) ** (-2.0)
    return n, k, r


def _sample_profile(profile, grid: GridSpec, T: float, samples: int, alpha: float, taper: float) -> SpaceTimeField:
    """``c(t, n) = e^{-it|xi_n|^alpha} sum_k r(n, k) e^{2 pi i k t / T}`` on ``grid``."""
    n, k, r = profile
    t = np.arange(samples) * (T / samples)
    mu = fractional_symbol(n, alpha, grid.period)
    slow = np.exp(2j * math.pi * np.outer(t, k) / T) @ r.T
    vals = np.zeros((samples, grid.modes), dtype=np.complex128)
    vals[:, grid.index(n)] = slow * np.exp(-1j * np.outer(t, mu))
    return SpaceTimeField(grid, T, vals, taper)


def probe_strichartz(
    alpha: float,
    b: Optional[float] = None,
    exponent: int = 4,
    ensemble: EnsembleSpec = EnsembleSpec(),
    eps: float = 0.01,
    eta: float = 0.01,
    doubling: bool = True,
) -> BoundReport:
    """Largest ``||u||_{L^p} / ||u||_{X^{s,b}}`` over a random ensemble.

    ``exponent=4`` uses ``X^{0,b}`` with ``b = (alpha+1)/(4 alpha)`` by
    default; ``exponent=6`` uses ``X^{eps, 1/2 - eta}``.  With
    ``doubling`` the worst fields are re-evaluated on a grid with twice
    the modes and time samples and the largest relative change is reported.
    """
    if ensemble.size < 100:
        raise ValueError("the ensemble needs at least 100 fields")
    if exponent == 4:
        b = (alpha + 1) / (4 * alpha) if b is None else b
        norm = NormSpec(s=0.0, b=b)
    elif exponent == 6:
        b = 0.5 - eta if b is None else b
        norm = NormSpec(s=eps, b=b)
    else:
        raise ValueError(f"exponent must be 4 or 6, got {exponent}")
    grid = GridSpec(ensemble.modes)
    support = ensemble.support or grid.modes // 4
    rng = np.random.default_rng(ensemble.seed)
    ratios = []
    profiles = []
    for _ in range(ensemble.size):
        prof = _random_profile(rng, support, ensemble.harmonics, ensemble.gamma)
        F = _sample_profile(prof, grid, ensemble.T, ensemble.time_samples, alpha, ensemble.taper)
        den = xsb_norm(F, norm, alpha)
        if den <= 0:
            raise ValueError("degenerate denominator")
        ratios.append(lp_norm(F, exponent) / den)
        profiles.append(prof)
    ratios = np.array(ratios)
    k = int(np.argmax(ratios))
    extra = {"mean_ratio": float(ratios.mean())}
    passed = True
    if doubling:
        big = GridSpec(2 * ensemble.modes)
        change = 0.0
        for j in np.argsort(ratios)[-5:]:
            F2 = _sample_profile(profiles[j], big, ensemble.T, 2 * ensemble.time_samples, alpha, ensemble.taper)
            r2 = lp_norm(F2, exponent) / xsb_norm(F2, norm, alpha)
            change = max(change, abs(r2 - ratios[j]) / ratios[j])
        extra["doubling_change"] = change
        passed = change <= 0.2
    return BoundReport(
        description=f"L^{exponent} Strichartz probe",
        samples=ensemble.size,
        worst_ratio=float(ratios[k]),
        worst_witness=(k, ensemble.seed),
        parameters={"alpha": alpha, "s": norm.s, "b": b, "modes": ensemble.modes, "support": support,
                    "T": ensemble.T, "time_samples": ensemble.time_samples, "taper": ensemble.taper,
                    "seed": ensemble.seed},
        passed=passed,
        extra=extra,
    )


def _nonresonant_trilinear(a, b, c, grid: GridSpec):
    full = dynamics.trilinear(a, b, c, grid)
    return full - np.vdot(b, a) * c - a * np.vdot(b, c) + a * np.conj(b) * c


def _product_field(F1, F2, F3, form: str) -> SpaceTimeField:
    g = F1.grid
    op = dynamics.trilinear if form == "line" else _nonresonant_trilinear
    vals = np.stack([op(a, b, c, g) for a, b, c in zip(F1.values, F2.values, F3.values)])
    return SpaceTimeField(g, F1.T, vals, F1.taper)


def trilinear_ratio(fields, alpha: float, s: float, form: str, eps: float) -> float:
    """``||N(u1,u2,u3)||_{X^{s,-1/2+2eps}} / prod ||u_j||_{X^{s,1/2+eps}}``."""
    P = _product_field(*fields, form)
    num = xsb_norm(P, NormSpec(s=s, b=-0.5 + 2 * eps), alpha)
    den = 1.0
    for F in fields:
        den *= xsb_norm(F, NormSpec(s=s, b=0.5 + eps), alpha)
    if den <= 0:
        raise ValueError("degenerate denominator")
    return num / den


def _packet(center: int, grid: GridSpec, T: float, samples: int, alpha: float, taper: float) -> SpaceTimeField:
    n = np.array([center - 1, center, center + 1])
    prof = (n, np.array([0]), np.ones((3, 1), dtype=np.complex128))
    return _sample_profile(prof, grid, T, samples, alpha, taper)


def probe_trilinear(
    alpha: float,
    s: float,
    form: str = "line",
    ensemble: EnsembleSpec = EnsembleSpec(modes=64, support=10),
    eps: float = 0.01,
    below: float = 0.25,
    ks: Sequence[int] = (3, 4, 5, 6),
    concentration_samples: int = 1024,
) -> BoundReport:
    """Trilinear estimate probe for the full cubic (``'line'``) or its non-resonant part (``'circle'``).

    Besides the ensemble maximum at ``s``, evaluates three-mode packets
    centred at ``2^k`` at ``s_below = threshold - below`` and records
    whether the ratio grows with ``k``.
    """
    if form not in ("line", "circle"):
        raise ValueError(f"form must be 'line' or 'circle', got {form!r}")
    threshold = lwp_threshold(alpha, form)
    if s < threshold - 1e-12:
        raise ValueError(f"s={s} is below the threshold {threshold}")
    grid = GridSpec(ensemble.modes)
    support = ensemble.support or grid.modes // 6
    if 6 * support >= grid.modes:
        raise ValueError("support too wide for an alias-free product on this grid")
    rng = np.random.default_rng(ensemble.seed)
    ratios = []
    for _ in range(ensemble.size):
        fields = [
            _sample_profile(_random_profile(rng, support, ensemble.harmonics, ensemble.gamma), grid,
                            ensemble.T, ensemble.time_samples, alpha, ensemble.taper)
            for _ in range(3)
        ]
        ratios.append(trilinear_ratio(fields, alpha, s, form, eps))
    ratios = np.array(ratios)
    k_worst = int(np.argmax(ratios))

    s_below = threshold - below
    cmodes = 1 << int(math.ceil(math.log2(6 * ((1 << max(ks)) + 2))))
    cgrid = GridSpec(cmodes)
    conc = []
    for k in ks:
        F = _packet(1 << k, cgrid, ensemble.T, concentration_samples, alpha, ensemble.taper)
        conc.append(trilinear_ratio([F, F, F], alpha, s_below, form, eps))
    growing = bool(np.all(np.diff(conc) > 0))
    return BoundReport(
        description=f"trilinear probe ({form})",
        samples=ensemble.size,
        worst_ratio=float(ratios[k_worst]),
        worst_witness=(k_worst, ensemble.seed),
        parameters={"alpha": alpha, "s": s, "eps": eps, "threshold": threshold, "modes": ensemble.modes,
                    "support": support, "T": ensemble.T, "time_samples": ensemble.time_samples,
                    "taper": ensemble.taper, "seed": ensemble.seed},
        passed=growing,
        extra={"s_below": s_below, "ks": list(ks), "concentration_ratios": conc, "growing": growing,
               "concentration_modes": cmodes},
    )


# -- almost conservation sweep ----------------------------------------------------------


def theory_exponents(variant: str, alpha: float, s: float):
    """``(exponent, candidates)`` of the decrement bound ``N^exponent``."""
    if variant == "line":
        e = -2.0 * alpha + 2.0
        return e, [e]
    if variant == "torus":
        c = [-1.5 * alpha + 2.0 - 6.0 * s, -alpha - 6.0 * s]
        return max(c), c
    raise ValueError(f"variant must be 'line' or 'torus', got {variant!r}")


def i_operators(Ns, s: float, variant: str, M_rule: str = "N"):
    ops = []
    for N in Ns:
        if variant == "line":
            ops.append(IOperatorSpec(s=s, N=N))
        else:
            M = {"N": N, "N2": N * N, "1": 1.0}[M_rule]
            ops.append(IOperatorSpec(s=s, N=N, M=M, family="torus"))
    return ops


def corrected_masses(traj: dynamics.Trajectory, ops, alpha: float, variant: str) -> np.ndarray:
    """``M^4`` for each stored snapshot (rows) and I-operator (columns)."""
    spec = traj.spec
    g = spec.g
    ref = spec.reference_data if variant == "torus" else None
    rows = []
    for v in traj.snapshots:
        base = np.array([imethod.modified_mass(v, op) for op in ops])
        if g != 0.0:
            q = imethod.quartic_corrections(v, ops, alpha, variant, ref, v.time, g)
            base = base + g * q.real
        rows.append(base)
    return np.array(rows)


def sweep_almost_conservation(
    spec: EquationSpec,
    integ: IntegratorSpec,
    Ns: Sequence[float],
    s: float,
    variant: str = "line",
    M_rule: str = "N",
    margin: float = 1.0,
    free_flow: bool = True,
    noise_floor: float = 1e-14,
    manifest_ref: str = "",
) -> ScalingReport:
    """``sup_t |M^4(t) - M^4(0)|`` along one trajectory for each threshold ``N``, with a log-log fit.

    The supremum is sampled at the stored snapshots.  ``variant='torus'``
    needs the gauged form and uses ``m_M`` with ``M`` from ``M_rule``.
    """
    Ns = [float(N) for N in Ns]
    if len(Ns) < 4:
        raise ValueError("need at least four thresholds")
    if any(not math.log2(N).is_integer() for N in Ns):
        raise ValueError("thresholds must be dyadic")
    want = "gauged" if variant == "torus" else "original"
    if spec.form != want:
        raise ValueError(f"variant {variant!r} needs the {want!r} form, got {spec.form!r}")
    ops = i_operators(Ns, s, variant, M_rule)
    traj = dynamics.run(spec, integ)
    vals = corrected_masses(traj, ops, spec.alpha, variant)
    dec = np.max(np.abs(vals - vals[0]), axis=0)
    slope, icpt = fit_line(Ns, dec)
    if math.isfinite(slope):
        resid = np.log2(dec) - (slope * np.log2(Ns) + icpt)
        residual = float(np.sqrt(np.mean(resid ** 2)))
    else:
        residual = float("nan")
    monotone = bool(np.all(dec[1:] <= dec[:-1] * (1 + 1e-9) + noise_floor))
    if not monotone:
        log.warning("decrement not monotone in N: %s", dec)
    free = None
    if free_flow:
        ftraj = dynamics.run(replace(spec, coupling=0.0), integ)
        fv = corrected_masses(ftraj, ops, spec.alpha, variant)
        free = np.max(np.abs(fv - fv[0]), axis=0).tolist()
    exponent, cands = theory_exponents(variant, spec.alpha, s)
    return ScalingReport(
        Ns=Ns,
        decrements=dec.tolist(),
        fitted_slope=slope,
        theory_exponent=exponent,
        residual=residual,
        manifest_ref=manifest_ref,
        variant=variant,
        alpha=spec.alpha,
        s=s,
        theory_candidates=cands,
        margin=margin,
        monotone=monotone,
        snapshot_interval=integ.dt * integ.store_every,
        noise_floor=noise_floor,
        free_flow_decrements=free,
        parameters={"modes": spec.grid.modes, "period": spec.grid.period, "dt": integ.dt, "t_end": integ.t_end,
                    "M_rule": M_rule if variant == "torus" else None, "coupling": spec.coupling},
    )


def k_refinement(spec: EquationSpec, integ: IntegratorSpec, Ks: Sequence[int], compare_modes: Optional[int] = None) -> BoundReport:
    """Sensitivity of the final state to the number of modes.

    The initial data are built once on the finest grid and restricted to
    each coarser band, so every run starts from the same low modes.  For
    consecutive ``Ks`` the report lists the relative difference of the final
    coefficients with ``|n| <= compare_modes`` (default: half the coarsest
    cutoff).  This is a sensitivity measure, not a convergence claim.
    """
    Ks = sorted(int(K) for K in Ks)
    if len(Ks) < 2:
        raise ValueError("need at least two grid sizes")
    fine_grid = replace(spec.grid, modes=Ks[-1])
    fine = spec.initial_data.build(fine_grid)
    keep = compare_modes if compare_modes is not None else GridSpec(Ks[0], spec.grid.period, spec.grid.dealias_fraction).cutoff // 2
    n = np.arange(-keep, keep + 1)
    finals = []
    for K in Ks:
        grid = replace(spec.grid, modes=K)
        band = grid.band
        c = np.zeros(K, dtype=np.complex128)
        c[grid.index(band)] = fine.coeffs[fine_grid.index(band)]
        u0 = SpectralField(grid, c)
        ref = u0.coeffs if spec.form == "gauged" else None
        s = replace(spec, grid=grid, reference_data=ref)
        last = dynamics.run(s, integ, initial=u0).snapshots[-1]
        finals.append(last.coeffs[grid.index(n)])
    diffs = [float(np.linalg.norm(finals[i + 1] - finals[i]) / np.linalg.norm(finals[i + 1])) for i in range(len(Ks) - 1)]
    k = int(np.argmax(diffs))
    return BoundReport(
        description="K-refinement sensitivity of the final low modes",
        samples=len(Ks),
        worst_ratio=diffs[k],
        worst_witness=(Ks[k], Ks[k + 1]),
        parameters={"Ks": Ks, "compare_modes": keep, "alpha": spec.alpha, "form": spec.form,
                    "dt": integ.dt, "t_end": integ.t_end},
        passed=True,
        extra={"relative_differences": diffs},
    )


# -- identity checks --------------------------------------------------------------------


def gamma_sum(c1, c2, c3, grid: GridSpec, weights: Optional[Callable] = None) -> np.ndarray:
    """Brute-force ``sum_{n1-n2+n3=n, n1!=n2, n2!=n3} c1(n1) conj c2(n2) c3(n3)`` on the band.

    ``c_j`` may carry a leading batch axis (e.g. time).  ``weights(n1, n2,
    n3, n)`` multiplies each term (broadcast over the batch axis).
    """
    band = grid.band
    idx = grid.index(band)
    a1 = np.asarray(c1)[..., idx]
    a2 = np.conj(np.asarray(c2)[..., idx])
    a3 = np.asarray(c3)[..., idx]
    cut = grid.cutoff
    out = np.zeros(a1.shape[:-1] + (len(band),), dtype=np.complex128)
    n1 = band[:, None]
    n3 = band[None, :]
    for q, n in enumerate(band):
        n2 = n1 + n3 - n
        ok = (np.abs(n2) <= cut) & (n1 != n2) & (n2 != n3)
        i1, i3 = np.nonzero(ok)
        i2 = n2[i1, i3] + cut
        term = a1[..., i1] * a2[..., i2] * a3[..., i3]
        if weights is not None:
            term = term * weights(band[i1], band[i2], band[i3], n)
        out[..., q] = term.sum(axis=-1)
    full = np.zeros(a1.shape[:-1] + (grid.modes,), dtype=np.complex128)
    full[..., idx] = out
    return full


def check_renormalization_identity(Ks=(32, 128), samples: int = 100, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """Full cubic (FFT) against brute-force non-resonant sum minus resonant plus ``2 mass v``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for K in Ks:
        grid = GridSpec(K)
        for _ in range(samples):
            c = rng.standard_normal(K) + 1j * rng.standard_normal(K)
            v = SpectralField(grid, c).truncate()
            full = dynamics.cubic(v).coeffs
            rhs = gamma_sum(v.coeffs, v.coeffs, v.coeffs, grid) - dynamics.resonant(v) + 2.0 * v.mass() * v.coeffs
            err = np.linalg.norm(full - rhs) / np.linalg.norm(full)
            worst = max(worst, float(err))
    return CheckResult("renormalization identity", worst, tol, worst <= tol, {"Ks": list(Ks), "samples": samples})


SMOOTH_DATA = InitialDataSpec(kind="profile", profile="modes", amplitude=1.0)


def check_mass_conservation(alpha: float, K: int = 128, dt: float = 1e-3, t_end: float = 1.0,
                            data: InitialDataSpec = SMOOTH_DATA, tol: float = 1e-8) -> CheckResult:
    spec = EquationSpec(GridSpec(K), alpha, initial_data=data)
    traj = dynamics.run(spec, IntegratorSpec(dt=dt, t_end=t_end, store_every=10))
    m = traj.diagnostics["mass"]
    drift = float(np.max(np.abs(m - m[0])) / m[0])
    return CheckResult(f"mass conservation alpha={alpha}", drift, tol, drift <= tol, {"K": K, "dt": dt})


def check_gauge_G(alpha: float = 3.0, K: int = 64, dt: float = 1e-3, t_end: float = 1.0,
                  data: InitialDataSpec = SMOOTH_DATA, tol: float = 1e-6) -> CheckResult:
    """``||G[u](t) - v(t)||_{L^2}`` for paired original/renormalized runs."""
    grid = GridSpec(K)
    integ = IntegratorSpec(dt=dt, t_end=t_end, store_every=10)
    u = dynamics.run(EquationSpec(grid, alpha, initial_data=data), integ)
    v = dynamics.run(EquationSpec(grid, alpha, form="renormalized", initial_data=data), integ)
    worst = 0.0
    for a, b in zip(u.snapshots, v.snapshots):
        d = gauges.gauge_G(a, "forward", u.spec.g) - b
        worst = max(worst, math.sqrt(grid.period) * d.l2_norm())
    return CheckResult("gauge G equivalence", worst, tol, worst <= tol, {"alpha": alpha, "K": K})


def _fd4(values: np.ndarray, h: float) -> np.ndarray:
    """Centered 4th-order first derivative at interior points (axis 0)."""
    v = values
    return (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)


def check_gauge_J(alpha: float = 3.0, K: int = 32, dt: float = 2.5e-4, t_end: float = 1.0,
                  data: InitialDataSpec = SMOOTH_DATA, tol: float = 1e-6) -> CheckResult:
    """Residual of ``J[v]`` in the gauged equation, ``v`` from a renormalized run.

    The time derivative is taken in the interaction picture ``e^{itD}w``,
    where the field is slowly varying, by centered 4th-order differences.
    """
    grid = GridSpec(K)
    spec2 = EquationSpec(grid, alpha, form="renormalized", initial_data=data)
    traj = dynamics.run(spec2, IntegratorSpec(dt=dt, t_end=t_end, store_every=1))
    u0 = traj.snapshots[0]
    ctx = gauges.GaugeContext.from_field(u0)
    spec3 = EquationSpec(grid, alpha, form="gauged", initial_data=data, reference_data=u0.coeffs)
    ws = [gauges.gauge_J(v, ctx, "forward", spec2.g) for v in traj.snapshots]
    t = traj.times
    mu = spec3.symbol()
    z = np.stack([np.exp(1j * w.time * mu) * w.coeffs for w in ws])
    dz = _fd4(z, dt)
    rhs = np.stack([np.exp(1j * w.time * mu) * dynamics.rhs_nonlinear(w, spec3) for w in ws[2:-2]])
    worst = float(np.max(np.abs(dz - rhs)))
    return CheckResult("gauge J residual", worst, tol, worst <= tol, {"alpha": alpha, "K": K, "points": len(t) - 4})


def check_mass_derivative(order: int = 4, variant: str = "line", alpha: float = 3.0, K: int = 32,
                          dt: float = 1e-3, t_end: float = 0.2, ispec: IOperatorSpec = IOperatorSpec(s=-0.4, N=2.0),
                          data: InitialDataSpec = SMOOTH_DATA, stride: int = 10, tol: float = 1e-4) -> CheckResult:
    """Finite differences of ``M(Iu)`` (order 4) or ``M^4`` (order 6) against the multilinear identities."""
    grid = GridSpec(K)
    u0 = data.build(grid)
    form = "original" if variant == "line" else "gauged"
    ref = u0.coeffs if variant == "torus" else None
    spec = EquationSpec(grid, alpha, form=form, initial_data=data, reference_data=ref)
    traj = dynamics.run(spec, IntegratorSpec(dt=dt, t_end=t_end, store_every=1))
    kw = dict(variant=variant, reference=ref, coupling=spec.g)
    if order == 4:
        vals = np.array([imethod.modified_mass(v, ispec) for v in traj.snapshots])
    else:
        vals = np.array([imethod.corrected_mass(v, ispec, alpha, t=v.time, **kw) for v in traj.snapshots])
    fd = _fd4(vals, dt)
    worst = 0.0
    for k in range(0, len(fd), stride):
        v = traj.snapshots[k + 2]
        pred = imethod.mass_derivative_rhs(v, ispec, alpha, order, t=v.time, **kw)
        worst = max(worst, abs(fd[k] - pred))
    name = f"d/dt {'M(Iu)' if order == 4 else 'M4(Iu)'} identity ({variant})"
    return CheckResult(name, worst, tol, worst <= tol, {"K": K, "dt": dt, "alpha": alpha})


def check_enn_identity(alpha: float = 3.0, K: int = 16, dt: float = 1e-4, t_end: float = 1.0,
                       data: InitialDataSpec = SMOOTH_DATA, tol: float = 1e-5) -> CheckResult:
    """``|w(t,n)|^2 - |u0(n)|^2`` against ``2 g Im int_0^t conj w(n) Gamma(n)-sum`` (brute force, Simpson)."""
    grid = GridSpec(K)
    u0 = data.build(grid)
    spec = EquationSpec(grid, alpha, form="gauged", initial_data=data, reference_data=u0.coeffs)
    traj = dynamics.run(spec, IntegratorSpec(dt=dt, t_end=t_end, store_every=1))
    t = traj.times
    W = traj.coefficients()
    a = np.abs(u0.coeffs) ** 2
    g = spec.g

    def phase(n1, n2, n3, n):
        psi = a[grid.index(n1)] - a[grid.index(n2)] + a[grid.index(n3)] - a[grid.index(n)]
        return np.exp(1j * g * t[:, None] * psi[None, :])

    G = gamma_sum(W, W, W, grid, weights=phase)
    integrand = (np.conj(W) * G).imag
    integral = cumulative_simpson(integrand, x=t, axis=0, initial=0.0)
    lhs = np.abs(W) ** 2 - a[None, :]
    rhs = 2.0 * g * integral
    worst = float(np.max(np.abs(lhs - rhs)))
    return CheckResult("EnN identity", worst, tol, worst <= tol, {"K": K, "alpha": alpha, "dt": dt})


def check_convergence_order(alpha: float = 3.0, K: int = 128, dts=(4e-3, 2e-3, 1e-3), t_end: float = 1.0,
                            data: InitialDataSpec = SMOOTH_DATA, window=(12.0, 20.0)) -> CheckResult:
    """Self-convergence ``||u_dt - u_dt/2|| / ||u_dt/2 - u_dt/4||`` at ``t_end``."""
    spec = EquationSpec(GridSpec(K), alpha, initial_data=data)
    finals = []
    for dt in list(dts) + [dts[-1] / 2]:
        integ = IntegratorSpec(dt=dt, t_end=t_end, store_every=int(round(t_end / dt)))
        finals.append(dynamics.run(spec, integ).snapshots[-1].coeffs)
    diffs = [np.linalg.norm(finals[i] - finals[i + 1]) for i in range(len(finals) - 1)]
    ratios = [diffs[i] / diffs[i + 1] for i in range(len(diffs) - 1)]
    ok = all(window[0] <= r <= window[1] for r in ratios)
    return CheckResult("self-convergence ratio", min(ratios), window[0], ok,
                       {"ratios": ratios, "differences": diffs, "dts": list(dts)})


def run_suite(quick: bool = True) -> list:
    """The identity and lemma checks; ``quick`` shrinks the sizes for interactive use."""
    out = [check_renormalization_identity(Ks=(32,) if quick else (32, 128), samples=10 if quick else 100)]
    for alpha in (2.5, 3.0, 4.0):
        out.append(check_mass_conservation(alpha, K=64 if quick else 128))
    out.append(check_gauge_G(K=32 if quick else 64, t_end=0.5 if quick else 1.0))
    out.append(check_gauge_J(K=32, t_end=0.2 if quick else 1.0))
    for alpha in (2.5, 3.0, 4.0):
        rep = check_resonance_bound(alpha, 16 if quick else 64)
        out.append(CheckResult(f"resonance bound alpha={alpha}", rep.worst_ratio, 0.0, rep.passed,
                               {"witness": rep.worst_witness}))
    rep = check_resonance_bound(2.0, 16 if quick else 64)
    err = abs(rep.worst_ratio - 2.0)
    out.append(CheckResult("resonance bound alpha=2 equals 2", err, 1e-12, err <= 1e-12))
    rep = sample_counting_lemma(100 if quick else 1000)
    out.append(CheckResult("counting lemma violations", rep.extra["violations"], 0.0, rep.passed))
    out.append(check_mass_derivative(4, "line", t_end=0.05 if quick else 0.2))
    for variant in ("line", "torus"):
        out.append(check_mass_derivative(6, variant, K=16, dt=1e-4, t_end=0.005 if quick else 0.02,
                                         stride=10, tol=1e-3))
    out.append(check_enn_identity(t_end=0.1 if quick else 1.0))
    out.append(check_convergence_order(K=64 if quick else 128))
    return out
