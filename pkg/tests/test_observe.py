import math

import numpy as np
import pytest

from heliosolve import radial
from heliosolve.observe import (DAY, YEAR, GreensDiagonal, ObservationSetup, ObserveError,
                                chi2_ratios, exact_diagonals, load_diagonal, save_diagonal,
                                segment_plan, simulate_power_spectrum)
from heliosolve.solar_model import (REFERENCE_ATMOSPHERE, BelowCutoffError, ModelError,
                                    free_potential, potential_from_model)

A = REFERENCE_ATMOSPHERE
W53 = 2 * math.pi * 5.3e-3
HEIGHTS = [105e3, 144e3]


@pytest.fixture(scope="module")
def setup():
    return ObservationSetup(HEIGHTS, [W53], ell_max=250, N_segments=974, seed=11)


@pytest.fixture(scope="module")
def exact(background, setup):
    return exact_diagonals(background, setup)


def test_free_field_l0_closed_form():
    k = 1.0
    p = free_potential(k, R_a=1.0)
    r = np.array([1.3, 2.0])
    G = radial.greens_diagonals([p], [0], r)[:, 0, 0]
    assert np.allclose(G.imag, np.sin(k * r) ** 2 / k, rtol=1e-9, atol=0)


def test_exact_shape_and_sign(exact):
    assert exact.values.shape == (2, 251, 1)
    assert np.all(np.isfinite(exact.values))
    assert np.all(exact.values > 0)
    assert not exact.is_noisy and exact.N_segments is None


def test_two_heights_carry_different_information(exact):
    a, b = exact.values[0], exact.values[1]
    assert np.max(np.abs(a - b) / np.abs(b)) > 1e-3


def test_exact_matches_radial_greens(background, exact):
    pot = potential_from_model(background, W53)
    for ell in (0, 125, 250):
        for ih, h in enumerate(HEIGHTS):
            r = A.R_sun + h
            g = radial.radial_greens(pot, ell, [r], resolution=8)
            assert abs(g(r, r).imag - exact.values[ih, ell, 0]) <= 1e-8 * exact.values[ih, ell, 0]


def test_below_cutoff_rejected(background):
    s = ObservationSetup(HEIGHTS, [2 * math.pi * 4.0e-3], ell_max=2)
    with pytest.raises(BelowCutoffError):
        exact_diagonals(background, s)


def test_setup_invariants():
    with pytest.raises(ObserveError) as e:
        ObservationSetup([105e3], [W53])
    assert e.value.code == "heights"
    with pytest.raises(ObserveError):
        ObservationSetup([144e3, 105e3], [W53])
    with pytest.raises(ObserveError):
        ObservationSetup(HEIGHTS, [W53], N_segments=0)
    with pytest.raises(ObserveError):
        ObservationSetup(HEIGHTS, [W53], Pi=0.0)


def test_large_N_law_of_large_numbers():
    r = chi2_ratios(5, 10 ** 6, 1)[0]
    assert abs(r - 1) < 5e-3


def test_N1_is_unit_exponential():
    r = chi2_ratios(1, 1, 10 ** 5)
    assert 0.99 <= r.mean() <= 1.01
    assert np.all(r >= 0)
    # Exp(1): P(X > 1) = 1/e
    assert abs(np.mean(r > 1) - math.exp(-1)) < 5e-3


def test_N974_variance():
    r = chi2_ratios(2, 974, 10 ** 4)
    assert abs(r.var() * 974 - 1) < 0.1
    assert abs(r.mean() - 1) < 1e-2


def test_gamma_branch_moments():
    r = chi2_ratios(3, 5000, 10 ** 4)
    assert abs(r.mean() - 1) < 1e-2
    assert abs(r.var() * 5000 - 1) < 0.1


def test_determinism_and_cell_contract(background, setup, exact):
    a = simulate_power_spectrum(background, setup, exact=exact)
    b = simulate_power_spectrum(background, setup, exact=exact)
    assert np.array_equal(a.values, b.values)
    assert a.is_noisy and a.N_segments == 974
    c = simulate_power_spectrum(
        background, ObservationSetup(HEIGHTS, [W53], 250, 974, seed=12), exact=exact)
    assert not np.array_equal(a.values, c.values)
    # documented rule: Philox key seed + 2^64 * ((i_h << 40) | (i_w << 20) | l)
    ih, ell, iw = 1, 37, 0
    rng = np.random.Generator(np.random.Philox(key=11 + (((ih << 40) | (iw << 20) | ell) << 64)))
    z = rng.standard_normal(2 * 974)
    expected = exact.values[ih, ell, iw] * (float(np.dot(z, z)) / (2 * 974))
    assert a.values[ih, ell, iw] == expected


def test_sqrt_N_law(background, exact):
    def err(N):
        s = ObservationSetup(HEIGHTS, [W53], 250, N, seed=4)
        d = simulate_power_spectrum(background, s, exact=exact)
        rel = (d.values - exact.values) / exact.values
        return np.max(np.abs(rel)), np.sqrt(np.mean(rel ** 2))
    m1, r1 = err(10)
    m2, r2 = err(1000)
    assert 8 <= r1 / r2 <= 12.5
    assert 6 <= m1 / m2 <= 16


def test_source_strength_cancels(background, exact):
    a = simulate_power_spectrum(background, ObservationSetup(HEIGHTS, [W53], 250, 5, 1.0, 9),
                                exact=exact)
    b = simulate_power_spectrum(background, ObservationSetup(HEIGHTS, [W53], 250, 5, 2.5, 9),
                                exact=exact)
    assert np.allclose(a.values, b.values, rtol=1e-15, atol=0)


def test_negative_diagonal_is_model_error(background, exact):
    bad = GreensDiagonal(exact.heights, exact.ells, exact.omegas, -exact.values)
    s = ObservationSetup(HEIGHTS, [W53], 250, 3)
    with pytest.raises(ModelError) as e:
        simulate_power_spectrum(background, s, exact=bad)
    assert e.value.code == "model-consistency"


def test_segment_plans():
    N, dnu, numax = segment_plan(8 * YEAR, 3 * DAY, 45.0)
    assert N == 974
    assert dnu == pytest.approx(3.858e-6, rel=1e-3)
    assert numax == pytest.approx(11.11e-3, rel=1e-3)
    assert segment_plan(1000.0, 1000.0, 1.0)[0] == 1
    N, dnu, numax = segment_plan(6 * DAY, 3 * DAY, 60.0)
    assert N == 2 and numax == pytest.approx(8.333e-3, rel=1e-3)


def test_segment_plan_errors():
    with pytest.raises(ObserveError):
        segment_plan(0.0, 1.0, 1.0)
    with pytest.raises(ObserveError):
        segment_plan(1.0, 2.0, 1.0)


def test_csv_round_trip(tmp_path, background, setup, exact):
    noisy = simulate_power_spectrum(background, setup, exact=exact)
    for d in (exact, noisy):
        p = tmp_path / "d.csv"
        save_diagonal(p, d)
        e = load_diagonal(p)
        assert np.array_equal(e.values, d.values)
        assert np.array_equal(e.heights, d.heights) and np.array_equal(e.omegas, d.omegas)
        assert e.is_noisy == d.is_noisy and e.N_segments == d.N_segments
    assert e.meta == {"rng": "philox4x64", "seed": 11}


def test_csv_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# heliosolve-diag v1\nheight_m,ell,omega_rad_s,im_G,is_noisy,N\n1.0,x,1,1,0,\n")
    with pytest.raises(ObserveError, match="line 3"):
        load_diagonal(p)
    p.write_text("# heliosolve-diag v1\nheight_m,ell,omega_rad_s,im_G,is_noisy,N\n"
                 "1.0,0,1.0,1.0,0,\n1.0,1,2.0,1.0,0,\n")
    with pytest.raises(ObserveError, match="incomplete"):
        load_diagonal(p)
