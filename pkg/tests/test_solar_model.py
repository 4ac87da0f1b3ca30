import math

import numpy as np
import pytest

from heliosolve.solar_model import (REFERENCE_ATMOSPHERE, Atmosphere, BelowCutoffError, ModelError,
                                    SolarModel, bump, compressed_model, from_internal,
                                    load_background, perturbed_model, potential_from_model,
                                    save_background, to_internal, unknowns_from_model,
                                    wavenumber)

from oracle_values import WAVENUMBER

A = REFERENCE_ATMOSPHERE
W53 = 2 * math.pi * 5.3e-3
INTERVAL = (0.9 * A.R_sun, 0.95 * A.R_sun)


def _write(path, rows, header="# heliosolve-model v1"):
    path.write_text(header + "\n" + "\n".join(" ".join(map(str, r)) for r in rows) + "\n")


def test_minimal_three_line_table(tmp_path):
    p = tmp_path / "m.txt"
    _write(p, [(1.0e8, 6855, 1.0, 0.0), (A.R_sun, 6855, 1e-3, 0.0), (A.R_a, 6855, A.rho0, 0.0)])
    m = load_background(p)
    assert m.grid_r.size == 3
    assert m.c0 == 6855.0


def test_interface_density_mismatch(tmp_path):
    p = tmp_path / "m.txt"
    _write(p, [(1.0e8, 6855, 1.0, 0.0), (A.R_sun, 6855, 1e-3, 0.0),
               (A.R_a, 6855, 1.05 * A.rho0, 0.0)])
    with pytest.raises(ModelError) as e:
        load_background(p)
    assert e.value.code == "interface-density"


def test_parse_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "m.txt"
    _write(p, [(1.0, 2.0, 3.0, 4.0), ("x", 1, 1, 1)])
    with pytest.raises(ModelError, match="line 3"):
        load_background(p)
    _write(p, [(1.0, 2.0, 3.0)])
    with pytest.raises(ModelError, match="line 2"):
        load_background(p)
    _write(p, [(1.0, 2.0, 3.0, 4.0)], header="# something else")
    with pytest.raises(ModelError, match="line 1"):
        load_background(p)


def test_invariant_violations():
    r = np.array([1e8, A.R_sun, A.R_a])
    with pytest.raises(ModelError) as e:
        SolarModel(r, [6855, 6855, 6855], [1.0, -1.0, A.rho0], [0, 0, 0])
    assert e.value.code == "non-positive-density"
    with pytest.raises(ModelError) as e:
        SolarModel(r, [6855, 0.0, 6855], [1.0, 1.0, A.rho0], [0, 0, 0])
    assert e.value.code == "non-positive-sound-speed"
    with pytest.raises(ModelError) as e:
        SolarModel(r[:2], [1, 1], [1, 1], [0, 0])
    assert e.value.code in ("shape", "grid")


def test_save_load_bit_identical(tmp_path, background):
    p = tmp_path / "bg.txt"
    save_background(background, p)
    m = load_background(p)
    for name in ("grid_r", "c", "rho", "gamma"):
        assert np.array_equal(getattr(m, name), getattr(background, name))
    assert (m.c0, m.rho0, m.H, m.h_a, m.R_sun) == (6855.0, 2.886e-6, 1.25e5, 5.0e5, 6.957e8)


def test_atmosphere_enforced_above_R_a(background):
    top = background.grid_r >= background.R_a
    r = background.grid_r[top]
    assert np.all(background.c[top] == A.c0)
    assert np.all(background.gamma[top] == 0.0)
    assert np.allclose(background.rho[top], A.rho0 * np.exp(-(r - A.R_a) / A.H), rtol=1e-14)


def test_wavenumber_oracle(background):
    k53 = wavenumber(background, W53)
    k54 = wavenumber(background, 2 * math.pi * 5.4e-3)
    assert k53 == pytest.approx(WAVENUMBER[5.3e-3], rel=1e-14)
    assert k54 == pytest.approx(WAVENUMBER[5.4e-3], rel=1e-14)
    assert k54 > k53
    assert k53 == pytest.approx(2.757e-6, rel=1e-3)


def test_cutoff_boundary(background):
    with pytest.raises(BelowCutoffError) as e:
        wavenumber(background, A.c0 / (2 * A.H))
    assert e.value.code == "below-cutoff"
    # the formula gives 4.36 mHz, not the 5.2 mHz quoted in prose
    assert A.cutoff / (2 * math.pi) == pytest.approx(4.364e-3, rel=1e-3)


def test_pure_atmosphere_potential_is_coulomb():
    # rho = rho0 exp(-(r - R_a)/H) everywhere, c = c0, gamma = 0 -> v = 1/(H r)
    # exp() leaves double range about 700 H from R_a, so the table is truncated
    r = np.linspace(0.9 * A.R_a, A.R_a + 50 * A.H, 4001)
    m = SolarModel(r, np.full(r.size, A.c0), A.rho_atm(r), np.zeros(r.size))
    pot = potential_from_model(m, W53)
    x = np.linspace(0.91, 1.005, 300) * A.R_a / A.R_sun
    v = pot.v(x * A.R_sun)
    exact = 1.0 / (A.H * x * A.R_sun)
    assert np.max(np.abs(v.real - exact) / exact) < 1e-8
    assert np.max(np.abs(v.imag)) == 0.0
    assert pot.alpha == pytest.approx(8e-6, rel=1e-15)


def test_attenuation_shifts_imaginary_part(background):
    no_gamma = background.replace_profiles(gamma=np.zeros(background.grid_r.size))
    p1 = potential_from_model(background, W53)
    p0 = potential_from_model(no_gamma, W53)
    r = np.linspace(0.5, 0.99, 50) * A.R_sun
    dv = p1.v(r) - p0.v(r)
    c = background.sound_speed(r)
    gam = background.attenuation(r)
    assert np.max(np.abs(dv.real)) <= 1e-12 * np.max(np.abs(p0.v(r).real))
    assert np.allclose(dv.imag, -2 * W53 * gam / c ** 2, rtol=1e-8)
    assert np.all(p1.v(r).imag <= 0)


def test_tail_continuity(background):
    pot = potential_from_model(background, W53)
    r = np.linspace(background.R_a, 2 * background.R_a, 100)
    exact = pot.alpha / r
    assert np.max(np.abs(pot.v(r) - exact) / exact) < 1e-14


def test_internal_units_round_trip():
    r = np.array([1.0, 3.0e8, 7.0e8])
    v = np.array([1e-12, -3e-11, 2e-10])
    x, kap, vh = to_internal(r, 2.757e-6, v)
    r2, k2, v2 = from_internal(x, kap, vh)
    assert np.allclose(r2, r, rtol=1e-14, atol=0)
    assert k2 == pytest.approx(2.757e-6, rel=1e-14)
    assert np.allclose(v2, v, rtol=1e-14, atol=0)


def test_unknowns_zero_perturbation(background):
    u = unknowns_from_model(background, background, INTERVAL)
    u0 = unknowns_from_model(background, background, INTERVAL)
    d = u - u0
    assert not np.any(d.u1) and not np.any(d.u2) and not np.any(d.u3)


def test_sound_speed_perturbation_leaves_u2(background):
    # u2 depends on rho only; u3 = gamma/c^2 scales with 1/c^2 (see ledger)
    m = perturbed_model(background, dc=0.01)
    u = unknowns_from_model(m, background, INTERVAL)
    u0 = unknowns_from_model(background, background, INTERVAL)
    assert np.max(np.abs(u.u1 - u0.u1)) > 0
    assert np.array_equal(u.u2, u0.u2)
    ratio = (background.sound_speed(u.grid) / m.sound_speed(u.grid)) ** 2
    assert np.allclose(u.u3, u0.u3 * ratio, rtol=1e-10)


def test_gamma_bump_in_u3(background):
    dg = 2 * math.pi * 20e-6
    m = perturbed_model(background, dgamma=dg)
    u = unknowns_from_model(m, background, INTERVAL)
    u0 = unknowns_from_model(background, background, INTERVAL)
    c = background.sound_speed(u.grid)
    shape = dg * bump(u.grid, 0.925 * A.R_sun, 0.025 * A.R_sun) / c ** 2
    # off the knots the profile is a spline, hence 1e-4 rather than rounding
    assert np.max(np.abs((u.u3 - u0.u3) - shape)) < 1e-4 * np.max(shape)


def test_two_frequency_decomposition(background):
    m = perturbed_model(background, dc=0.02, drho=0.05, dgamma=2 * math.pi * 20e-6)
    u = unknowns_from_model(m, background, INTERVAL)
    for w in (W53, 2 * math.pi * 5.4e-3):
        pot = potential_from_model(m, w)
        # v - k^2 + omega^2/c0^2 - 1/(4H^2) = omega^2 u1 + u2 - 2i omega u3
        lhs = pot.v(u.grid) - pot.k ** 2 + w * w / A.c0 ** 2 - 1 / (4 * A.H ** 2)
        rhs = w * w * u.u1 + u.u2 - 2j * w * u.u3
        assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(rhs))


def test_support_violation(background):
    m = perturbed_model(background, dc=0.01, center=0.8 * A.R_sun, half_width=0.02 * A.R_sun)
    with pytest.raises(ModelError) as e:
        unknowns_from_model(m, background, INTERVAL)
    assert e.value.code == "support-violation"


def test_compressed_model_scales_radii(background):
    cm = compressed_model(background, 100.0)
    assert cm.R_sun == pytest.approx(A.R_sun / 100)
    assert cm.H == pytest.approx(A.H / 100)
    assert cm.c0 == A.c0
    assert Atmosphere().cutoff * 100 == pytest.approx(cm.atmosphere.cutoff)
