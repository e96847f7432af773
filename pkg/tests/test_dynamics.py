import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fnls_lab import dynamics
from fnls_lab.dynamics import (
    EquationSpec,
    InitialDataSpec,
    IntegrationError,
    IntegratorSpec,
    free_evolve,
    run,
    step,
)
from fnls_lab.spectral import GridSpec, SpectralField, fractional_symbol

from conftest import random_field


def brute_trilinear(a, b, c, grid):
    out = np.zeros(grid.modes, dtype=complex)
    n = grid.freqs
    for i1, i2, i3 in itertools.product(range(grid.modes), repeat=3):
        m = n[i1] - n[i2] + n[i3]
        if grid.contains(m):
            out[grid.index(m)] += a[i1] * np.conj(b[i2]) * c[i3]
    return out


def test_trilinear_matches_brute_force(rng):
    g = GridSpec(8)
    a, b, c = (rng.standard_normal(8) + 1j * rng.standard_normal(8) for _ in range(3))
    np.testing.assert_allclose(dynamics.trilinear(a, b, c, g), brute_trilinear(a, b, c, g), atol=1e-12)


def test_cubic_of_plane_wave():
    g = GridSpec(16)
    u = SpectralField.from_modes(g, {3: 0.5 - 0.2j})
    expect = SpectralField.from_modes(g, {3: abs(0.5 - 0.2j) ** 2 * (0.5 - 0.2j)})
    np.testing.assert_allclose(dynamics.cubic(u).coeffs, expect.coeffs, atol=1e-15)


def test_cubic_is_band_limited(rng):
    g = GridSpec(32)
    u = random_field(g, rng)
    assert np.all(dynamics.cubic(u).coeffs[~g.band_mask] == 0)


def test_plane_wave_exact_solution():
    # i c' = |xi|^alpha c + |c|^2 c has c(t) = a exp(-i(|xi|^alpha + |a|^2) t)
    g = GridSpec(16)
    a = 0.8 + 0.1j
    spec = EquationSpec(g, 3.0, initial_data=InitialDataSpec(kind="explicit", coefficients={2: a}))
    traj = run(spec, IntegratorSpec(dt=1e-3, t_end=0.5, store_every=100))
    for s in traj.snapshots:
        expect = a * np.exp(-1j * (8.0 + abs(a) ** 2) * s.time)
        assert s.coeff(2) == pytest.approx(expect, abs=1e-12)


def test_focusing_sign_flips_the_nonlinear_phase():
    g = GridSpec(16)
    a = 0.8
    data = InitialDataSpec(kind="explicit", coefficients={1: a})
    spec = EquationSpec(g, 2.5, sign="focusing", initial_data=data)
    u = step(spec.initial_field(), spec, 1e-3)
    assert u.coeff(1) == pytest.approx(a * np.exp(-1j * (1.0 - a * a) * 1e-3), abs=1e-14)


def test_free_flow_is_exact(rng):
    g = GridSpec(32)
    data = InitialDataSpec(kind="random", seed=3, gamma=1.0)
    spec = EquationSpec(g, 3.0, initial_data=data, coupling=0.0)
    traj = run(spec, IntegratorSpec(dt=1e-2, t_end=1.0, store_every=50))
    u0 = spec.initial_field()
    for s in traj.snapshots:
        np.testing.assert_allclose(s.coeffs, free_evolve(u0, s.time, 3.0).coeffs, atol=1e-13)


def test_free_evolve_group_property(rng):
    u = random_field(GridSpec(16), rng)
    a = free_evolve(free_evolve(u, 0.3, 3.5), 0.4, 3.5)
    np.testing.assert_allclose(a.coeffs, free_evolve(u, 0.7, 3.5).coeffs, atol=1e-13)
    assert a.time == pytest.approx(0.7)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([2.5, 3.0, 4.0]), st.sampled_from(["original", "renormalized"]))
def test_mass_is_conserved(seed, alpha, form):
    g = GridSpec(16)
    data = InitialDataSpec(kind="random", seed=seed, gamma=1.0, amplitude=0.5)
    spec = EquationSpec(g, alpha, form=form, initial_data=data)
    traj = run(spec, IntegratorSpec(dt=1e-3, t_end=0.05, store_every=50))
    m = traj.diagnostics["mass"]
    # RK4 is not symplectic: mass drifts at O(dt^4), well below the 1e-8 budget
    assert abs(m[-1] - m[0]) <= 1e-8 * m[0]


def test_renormalized_rhs_drops_the_mass_term(rng):
    g = GridSpec(16)
    u = random_field(g, rng)
    orig = dynamics.nonlinearity(u, EquationSpec(g, 3.0)).coeffs
    ren = dynamics.nonlinearity(u, EquationSpec(g, 3.0, form="renormalized")).coeffs
    np.testing.assert_allclose(orig - ren, 2 * u.mass() * u.coeffs, atol=1e-12)


def test_resonant_split(rng):
    g = GridSpec(16)
    u = random_field(g, rng)
    total = dynamics.nonresonant(u) - dynamics.resonant(u) + 2 * u.mass() * u.coeffs
    np.testing.assert_allclose(total, dynamics.cubic(u).coeffs, atol=1e-12)


def test_gauged_form_at_time_zero(rng):
    # at t = 0 with reference = u the gauged term is N_1(u) - 0
    g = GridSpec(16)
    u = random_field(g, rng)
    spec = EquationSpec(g, 3.0, form="gauged", reference_data=u.coeffs)
    np.testing.assert_allclose(dynamics.nonlinearity(u, spec).coeffs, dynamics.nonresonant(u), atol=1e-12)


def test_split_step_agrees_with_irk4():
    g = GridSpec(32)
    spec = EquationSpec(g, 3.0, initial_data=InitialDataSpec(profile="modes"))
    a = run(spec, IntegratorSpec("irk4", 1e-3, 0.2, 200)).snapshots[-1]
    b = run(spec, IntegratorSpec("split-step", 1e-4, 0.2, 2000)).snapshots[-1]
    assert np.linalg.norm(a.coeffs - b.coeffs) < 1e-6


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_guard_keeps_partial_trajectory():
    g = GridSpec(16)
    spec = EquationSpec(g, 3.0, initial_data=InitialDataSpec(profile="modes", amplitude=1e6))
    with pytest.raises(IntegrationError) as info:
        run(spec, IntegratorSpec(dt=1e-2, t_end=1.0, store_every=1))
    traj = info.value.trajectory
    assert traj is not None and len(traj.snapshots) >= 1
    assert len(traj.diagnostics["mass"]) == len(traj.snapshots)


def test_initial_data_families():
    g = GridSpec(32)
    a = InitialDataSpec(kind="random", seed=7).build(g)
    b = InitialDataSpec(kind="random", seed=7).build(g)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert np.all(a.coeffs[~g.band_mask] == 0)
    fixed = InitialDataSpec(kind="random", seed=7, modulus="fixed", gamma=1.0, amplitude=0.3).build(g)
    xi = g.wavenumbers[g.band_mask]
    np.testing.assert_allclose(np.abs(fixed.coeffs[g.band_mask]), 0.3 / np.sqrt(1 + xi ** 2))
    gauss = InitialDataSpec(profile="gaussian").build(g)
    assert gauss.mass() > 0
    ex = InitialDataSpec(kind="explicit", coefficients={1: 2.0}, amplitude=0.5).build(g)
    assert ex.coeff(1) == 1.0


@pytest.mark.parametrize("kw", [
    dict(kind="other"), dict(kind="explicit"), dict(profile="square"), dict(modulus="uniform"),
])
def test_initial_data_validation(kw):
    with pytest.raises(ValueError):
        InitialDataSpec(**kw)


def test_spec_validation():
    g = GridSpec(8)
    with pytest.raises(ValueError):
        EquationSpec(g, 2.0)
    with pytest.raises(ValueError):
        EquationSpec(g, 3.0, sign=0)
    with pytest.raises(ValueError):
        EquationSpec(g, 3.0, form="gauged")
    with pytest.raises(ValueError):
        EquationSpec(g, 3.0, form="gauged", reference_data=np.zeros(4))
    with pytest.raises(ValueError):
        IntegratorSpec(dt=0.3, t_end=1.0)
    with pytest.raises(ValueError):
        IntegratorSpec(scheme="euler")
    with pytest.raises(ValueError):
        step(SpectralField.zeros(g), EquationSpec(g, 3.0), -1.0)


def test_unknown_diagnostic_and_missing_operator():
    g = GridSpec(8)
    spec = EquationSpec(g, 3.0)
    with pytest.raises(ValueError):
        run(spec, IntegratorSpec(dt=0.1, t_end=0.1, store_every=1), ("energy",))
    with pytest.raises(ValueError):
        run(spec, IntegratorSpec(dt=0.1, t_end=0.1, store_every=1), ("modified_mass",))


def test_run_stores_on_the_time_grid():
    spec = EquationSpec(GridSpec(8), 3.0)
    traj = run(spec, IntegratorSpec(dt=0.01, t_end=0.1, store_every=3))
    np.testing.assert_allclose(traj.times, [0.0, 0.03, 0.06, 0.09])
    assert traj.coefficients().shape == (4, 8)
