import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fnls_lab.spectral import (
    GridSpec,
    NormSpec,
    SpaceTimeField,
    SpectralField,
    critical_index,
    fractional_symbol,
    lp_norm,
    lwp_threshold,
    project,
    sobolev_norm,
    xsb_norm,
)

from conftest import random_field


def test_grid_basics():
    g = GridSpec(32)
    assert g.cutoff == 10
    assert list(g.freqs[:3]) == [0, 1, 2] and g.freqs[-1] == -1
    assert g.band_mask.sum() == 21
    assert list(g.band[[0, -1]]) == [-10, 10]
    assert g.scale == pytest.approx(1.0)
    assert GridSpec(32, 4 * math.pi).scale == pytest.approx(0.5)


@pytest.mark.parametrize("kw", [dict(modes=7), dict(modes=2), dict(modes=8, period=-1.0), dict(modes=8, dealias_fraction=0.0)])
def test_grid_rejects_bad_input(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_from_modes_and_physical_round_trip():
    g = GridSpec(16)
    f = SpectralField.from_modes(g, {0: 1.0, 3: 0.5j, -2: 2.0})
    x = g.x
    expect = 1.0 + 0.5j * np.exp(3j * x) + 2.0 * np.exp(-2j * x)
    np.testing.assert_allclose(f.physical(), expect, atol=1e-14)
    np.testing.assert_allclose(SpectralField.from_physical(g, expect).coeffs, f.coeffs, atol=1e-14)
    with pytest.raises(ValueError):
        SpectralField.from_modes(g, {8: 1.0})


def test_mass_is_spatial_average(rng):
    g = GridSpec(32)
    f = random_field(g, rng)
    # band-limited |u|^2 has frequencies below K, so the grid mean is exact
    assert f.mass() == pytest.approx(np.mean(np.abs(f.physical()) ** 2), rel=1e-13)
    assert f.l2_norm() == pytest.approx(math.sqrt(f.mass()))


def test_conj_matches_physical_conjugate(rng):
    g = GridSpec(16)
    f = random_field(g, rng)
    np.testing.assert_allclose(f.conj().physical(), np.conj(f.physical()), atol=1e-12)


def test_truncate_zeroes_outside_band(rng):
    g = GridSpec(16)
    c = rng.standard_normal(16) + 0j
    f = SpectralField(g, c).truncate()
    assert np.all(f.coeffs[~g.band_mask] == 0)
    np.testing.assert_array_equal(f.coeffs[g.band_mask], c[g.band_mask])


def test_snapshot_bytes_round_trip(rng):
    g = GridSpec(16, 3.0)
    f = random_field(g, rng).at_time(0.25)
    h = SpectralField.from_bytes(f.to_bytes())
    np.testing.assert_array_equal(h.coeffs, f.coeffs)
    assert h.time == 0.25 and h.grid == g
    with pytest.raises(ValueError):
        SpectralField.from_bytes(b"XXXX" + f.to_bytes()[4:])
    with pytest.raises(ValueError):
        SpectralField.from_bytes(f.to_bytes()[:-1])


def test_fields_are_immutable(rng):
    f = random_field(GridSpec(8), rng)
    with pytest.raises(ValueError):
        f.coeffs[0] = 1.0


def test_fractional_symbol():
    n = np.array([-3, 0, 2])
    np.testing.assert_allclose(fractional_symbol(n, 2.0), [9.0, 0.0, 4.0])
    np.testing.assert_allclose(fractional_symbol(n, 3.0, 4 * math.pi), np.abs(n / 2.0) ** 3)
    with pytest.raises(ValueError):
        fractional_symbol(n, 0.0)


def test_indices():
    assert critical_index(3.0) == -1.0
    assert lwp_threshold(3.0, "line") == -0.25
    assert lwp_threshold(4.0, "circle") == pytest.approx(-1.0 / 3.0)
    with pytest.raises(ValueError):
        lwp_threshold(2.0, "line")
    with pytest.raises(ValueError):
        lwp_threshold(3.0, "plane")


def test_sobolev_norm(rng):
    g = GridSpec(16)
    f = random_field(g, rng)
    assert sobolev_norm(f, NormSpec(0.0)) == pytest.approx(f.l2_norm())
    xi = g.wavenumbers
    expect = math.sqrt(np.sum((4.0 + xi ** 2) ** 0.5 * np.abs(f.coeffs) ** 2))
    assert sobolev_norm(f, NormSpec(0.5, M=2.0)) == pytest.approx(expect)
    with pytest.raises(ValueError):
        NormSpec(0.0, M=0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([16, 32, 64]))
def test_dyadic_projections_partition_the_band(seed, K):
    g = GridSpec(K)
    f = random_field(g, np.random.default_rng(seed))
    total = f * 0.0
    N = 1
    while N / 2 <= g.cutoff:
        total = total + project(f, N)
        N *= 2
    np.testing.assert_allclose(total.coeffs, f.coeffs)
    low, high = project(f, 4, "low"), project(f, 4, "high")
    np.testing.assert_allclose((low + high).coeffs, f.coeffs)
    with pytest.raises(ValueError):
        project(f, 3)


def _free_wave(grid, c0, alpha, T, samples, taper):
    mu = fractional_symbol(grid.freqs, alpha, grid.period)
    return SpaceTimeField.sample(grid, T, samples, lambda t: c0 * np.exp(-1j * t * mu), taper)


def test_xsb_plain_norm_is_space_time_l2(rng):
    g = GridSpec(16)
    vals = rng.standard_normal((64, 16)) + 1j * rng.standard_normal((64, 16))
    F = SpaceTimeField(g, 2.0, vals, taper=0.0)
    expect = math.sqrt(np.sum(np.abs(vals) ** 2) * F.dt)
    assert xsb_norm(F, NormSpec(0.0, b=0.0), 3.0) == pytest.approx(expect, rel=1e-12)


def test_xsb_norm_of_free_wave_is_independent_of_b(rng):
    g = GridSpec(16)
    c0 = random_field(g, rng).coeffs
    F = _free_wave(g, c0, 3.0, 1.0, 64, taper=0.0)
    a = xsb_norm(F, NormSpec(-0.3, b=0.0), 3.0)
    b = xsb_norm(F, NormSpec(-0.3, b=0.7), 3.0)
    assert a == pytest.approx(b, rel=1e-10)
    hs = sobolev_norm(SpectralField(g, c0), NormSpec(-0.3))
    assert a == pytest.approx(hs, rel=1e-10)  # T = 1


def test_xsb_gauged_modulation_and_validation(rng):
    g = GridSpec(16)
    c0 = random_field(g, rng).coeffs
    ref = 0.3 * c0
    mu = fractional_symbol(g.freqs, 3.0) - np.abs(ref) ** 2
    F = SpaceTimeField.sample(g, 1.0, 64, lambda t: c0 * np.exp(-1j * t * mu), 0.0)
    a = xsb_norm(F, NormSpec(0.0, b=0.0), 3.0, "gauged", ref)
    b = xsb_norm(F, NormSpec(0.0, b=1.0), 3.0, "gauged", ref)
    assert a == pytest.approx(b, rel=1e-10)
    with pytest.raises(ValueError):
        xsb_norm(F, NormSpec(), 3.0, "gauged")
    with pytest.raises(ValueError):
        xsb_norm(SpaceTimeField(g, 1.0, np.zeros((60, 16))), NormSpec(), 3.0)


def test_lp_norms_against_closed_forms(rng):
    g = GridSpec(16, 3.0)
    vals = np.stack([random_field(g, rng).coeffs for _ in range(32)])
    F = SpaceTimeField(g, 0.5, vals, taper=0.0)
    # Parseval: int |u|^2 dx = L sum |c|^2
    expect = math.sqrt(g.period * F.dt * np.sum(np.abs(vals) ** 2))
    assert lp_norm(F, 2) == pytest.approx(expect, rel=1e-12)
    # a single mode has constant modulus
    one = SpaceTimeField(g, 0.5, np.tile(SpectralField.from_modes(g, {2: 0.7}).coeffs, (32, 1)), taper=0.0)
    assert lp_norm(one, 4) == pytest.approx((0.5 * 3.0 * 0.7 ** 4) ** 0.25, rel=1e-12)


def test_space_time_validation():
    g = GridSpec(8)
    with pytest.raises(ValueError):
        SpaceTimeField(g, 1.0, np.zeros((4, 7)))
    with pytest.raises(ValueError):
        SpaceTimeField(g, 0.0, np.zeros((4, 8)))
    with pytest.raises(ValueError):
        SpaceTimeField(g, 1.0, np.zeros((4, 8)), taper=2.0)
    F = SpaceTimeField(g, 1.0, np.zeros((8, 8)), taper=0.5)
    w = F.window()
    assert w[0] == 0.0 and w.max() == 1.0


def test_xsb_constant_single_mode_sits_on_the_dispersion_weight():
    # constant in time at n = 2, alpha = 3: modulation |xi|^3 = 8; T = pi makes
    # 4 whole periods so the temporal spectrum is a single line
    g = GridSpec(16)
    c = SpectralField.from_modes(g, {2: 0.5}).coeffs
    F = SpaceTimeField(g, math.pi, np.tile(c, (64, 1)), taper=0.0)
    b = 0.4
    expect = 0.5 * math.sqrt(math.pi) * (1 + 64.0) ** (b / 2)
    assert xsb_norm(F, NormSpec(0.0, b=b), 3.0) == pytest.approx(expect, rel=1e-12)
