import math

import numpy as np
import pytest

from heliosolve import radial
from heliosolve.invert import (PARAMS, ForwardConfig, ForwardOperator, InversionError,
                               IrgnmConfig, JacobianWarning, forward, irgnm, jacobian,
                               recover_parameters, relative_l2_error)
from heliosolve.observe import ObservationSetup, exact_diagonals
from heliosolve.recover import extract_scattering
from heliosolve.solar_model import (REFERENCE_ATMOSPHERE, InversionUnknowns, SolarModel,
                                    perturbed_model, potential_from_model, unknowns_from_model)

A = REFERENCE_ATMOSPHERE
RS = A.R_sun
I = (0.9 * RS, 0.95 * RS)
OMEGAS = 2 * math.pi * np.array([5.3e-3, 5.4e-3])
DGAMMA = 2 * math.pi * 20e-6


@pytest.fixture(scope="module")
def small(background):
    cfg = ForwardConfig(I, 20, 60, OMEGAS, background)
    return cfg, unknowns_from_model(background, background, I, 20, check_support=False)


@pytest.fixture(scope="module")
def truth(background):
    return perturbed_model(background, dc=0.02, drho=0.05, dgamma=DGAMMA)


def _gauss_gamma(model):
    g = model.gamma + DGAMMA * np.exp(-0.5 * ((model.grid_r - 0.925 * RS) / (0.01 * RS)) ** 2)
    return model.replace_profiles(gamma=g)


# forward ---------------------------------------------------------------------

def test_forward_background_matches_direct_matching(background, small):
    cfg, u0 = small
    s = forward(u0, cfg).s
    pots = [potential_from_model(background, w) for w in OMEGAS]
    ref = radial.scattering_table(pots, np.arange(61), resolution=8)["s"]
    assert np.max(np.abs(s - ref) / np.abs(ref)) < 1e-7


def test_forward_cells_independent_of_ell_max(background, small):
    cfg, u0 = small
    s = forward(u0, cfg).s
    s2 = forward(u0, ForwardConfig(I, 20, 120, OMEGAS, background)).s
    assert np.max(np.abs(s2[:61] - s) / np.abs(s)) < 1e-12


def _bump_tables(model):
    cfg = ForwardConfig(I, 50, 20, OMEGAS, model)
    u0 = unknowns_from_model(model, model, I, 50, check_support=False)
    ut = unknowns_from_model(_gauss_gamma(model), model, I, 50, check_support=False)
    return np.abs(forward(u0, cfg).s), np.abs(forward(ut, cfg).s)


def test_gamma_bump_lowers_s_without_background_attenuation(background):
    b, a = _bump_tables(background.replace_profiles(gamma=np.zeros(background.grid_r.size)))
    assert np.all(np.abs(b - 1) < 1e-8)
    assert np.all(a < b)


def test_gamma_bump_raises_total_absorption(background):
    # per cell the sign alternates through interference with the attenuating
    # background; the absorbed fraction summed over cells grows (see ledger)
    b, a = _bump_tables(background)
    assert np.sum(1 - a ** 2) > np.sum(1 - b ** 2)


def test_forward_config_invariants(background):
    with pytest.raises(InversionError):
        ForwardConfig((0.9 * RS, 1.1 * RS), 20, 10, OMEGAS, background)
    with pytest.raises(InversionError):
        ForwardConfig(I, 3, 10, OMEGAS, background)
    with pytest.raises(InversionError):
        ForwardConfig(I, 20, 10, OMEGAS[:1], background)
    with pytest.raises(Exception) as e:
        ForwardConfig(I, 20, 10, 2 * math.pi * np.array([4.0e-3, 5.3e-3]), background)
    assert getattr(e.value, "code", "") == "below-cutoff"


def test_unknowns_off_grid_rejected(background, small):
    cfg, _ = small
    u = unknowns_from_model(background, background, I, 21, check_support=False)
    with pytest.raises(InversionError) as e:
        forward(u, cfg)
    assert e.value.code == "grid"


# Jacobian ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def operator(small):
    cfg, _ = small
    return ForwardOperator(cfg)


def _scale(op):
    return max(np.max(np.abs(p.vhat(op.gx))) for p in op.pots)


def test_taylor_remainder_is_second_order(operator):
    op, n = operator, operator.gx.size
    rng = np.random.default_rng(5)
    for _ in range(3):
        v = rng.standard_normal(3 * n) * 1e-2 * _scale(op)
        p0 = rng.standard_normal(3 * n) * 1e-3 * _scale(op)
        s0, J = op.jacobian_full(p0)
        Jv = (J.reshape(-1, 3 * n) @ v).reshape(s0.shape)
        ts = np.array([1e-2, 1e-3, 1e-4])
        rem = [np.linalg.norm(op.evaluate(p0 + t * v) - s0 - t * Jv) for t in ts]
        assert np.polyfit(np.log(ts), np.log(rem), 1)[0] >= 1.9


def test_directional_derivative_against_central_differences(small, operator):
    cfg, u0 = small
    op, n = operator, operator.gx.size
    Ja = jacobian(u0, cfg)
    Jf = jacobian(u0, cfg, method="fd")
    assert Ja.shape == Jf.shape == (2 * 61 * 2, 3 * n)
    rng = np.random.default_rng(9)
    h = 1e-5 * _scale(op)
    for _ in range(3):
        v = rng.standard_normal(3 * n)
        v /= np.linalg.norm(v)
        cd = (op.evaluate(h * v) - op.evaluate(-h * v)) / (2 * h)
        cd = np.concatenate([cd.real.ravel(), cd.imag.ravel()])
        for J in (Ja, Jf):
            assert np.linalg.norm(J @ v - cd) <= 1e-4 * np.linalg.norm(cd)


def test_jacobian_linearity(small):
    cfg, u0 = small
    J = jacobian(u0, cfg)
    v = np.random.default_rng(2).standard_normal(J.shape[1])
    assert np.allclose(J @ (3.7 * v), 3.7 * (J @ v), rtol=1e-13, atol=0)


def test_fd_cancellation_warns(small):
    cfg, u0 = small
    with pytest.warns(JacobianWarning):
        jacobian(u0, cfg, method="fd", fd_step=1e-17, free_params=("gamma",))


def test_deep_columns_vanish_at_high_degree(background):
    # l >= 200 turns near 0.9 R_sun at 5.3 mHz; nodes at 0.5 R_sun are not seen
    cfg = ForwardConfig((0.5 * RS, 0.95 * RS), 40, 250, OMEGAS, background)
    u0 = unknowns_from_model(background, background, cfg.interval, 40, check_support=False)
    J = jacobian(u0, cfg)
    cells = np.arange(251 * 2).reshape(251, 2)[200:].ravel()
    rows = np.concatenate([cells, cells + 251 * 2])
    norms = np.linalg.norm(J[rows], axis=0)
    for block in range(3):
        assert norms[block * 40] < 1e-10 * norms.max()


# IRGNM ---------------------------------------------------------------------------

def test_fixed_point_on_background_data(background):
    cfg = ForwardConfig(I, 200, 250, OMEGAS, background)
    d = exact_diagonals(background, ObservationSetup([105e3, 144e3], OMEGAS, 250))
    res = irgnm(extract_scattering(d, background), cfg)
    assert len(res.history) <= 3
    assert np.max(np.abs(res.params)) < 1e-6 * _scale(ForwardOperator(cfg))
    for name, get in (("c", "sound_speed"), ("rho", "density"), ("gamma", "attenuation")):
        g = cfg.grid
        a, b = getattr(res.model, get)(g), getattr(background, get)(g)
        assert np.max(np.abs(a - b)) <= 1e-6 * np.max(np.abs(b))


def test_fixed_point_recovers_generating_u(background, truth):
    # on a coarse grid the problem is well posed enough for alpha -> 0 to reach u
    n = 4
    cfg = ForwardConfig(I, n, 60, OMEGAS, background)
    ut = unknowns_from_model(truth, background, I, n)
    res = irgnm(forward(ut, cfg), cfg, IrgnmConfig(max_outer=100, rtol=0.0))
    u0 = unknowns_from_model(background, background, I, n, check_support=False)
    for k in ("u1", "u2", "u3"):
        d_rec = getattr(res.u, k) - getattr(u0, k)
        d_true = getattr(ut, k) - getattr(u0, k)
        assert relative_l2_error(d_rec, d_true, cfg.grid) <= 1e-6


def test_exact_single_gamma_and_monotone_residual(background):
    tr = perturbed_model(background, dgamma=DGAMMA)
    cfg = ForwardConfig(I, 200, 250, OMEGAS, background)
    d = exact_diagonals(tr, ObservationSetup([105e3, 144e3], OMEGAS, 250))
    res = irgnm(extract_scattering(d, background), cfg, IrgnmConfig(free_params=("gamma",)),
                truth=tr)
    assert res.errors["gamma"] <= 0.05
    assert res.errors["c"] is None and res.errors["rho"] is None
    h = np.array(res.history)
    assert np.all(np.diff(h[1:]) <= 0)
    assert np.all(np.diff(res.alphas) < 0)


def test_data_shape_mismatch(small, background):
    cfg, u0 = small
    data = forward(u0, ForwardConfig(I, 20, 10, OMEGAS, background))
    with pytest.raises(InversionError) as e:
        irgnm(data, cfg)
    assert e.value.code == "data"


def test_irgnm_config_invariants():
    for kw in ({"alpha0": 0.0}, {"q_factor": 1.0}, {"max_outer": 0}, {"tau_discrepancy": 1.0},
               {"weight_mode": "x"}, {"free_params": ("c", "p")}, {"free_params": ()}):
        with pytest.raises(InversionError):
            IrgnmConfig(**kw)
    assert IrgnmConfig().free_params == PARAMS


# parameters from u ---------------------------------------------------------------------

def test_round_trip_second_order(background, truth):
    def err(n):
        u = unknowns_from_model(truth, background, I, n)
        m = recover_parameters(u, background)
        g = u.grid
        return [np.max(np.abs(getattr(m, f)(g) / getattr(truth, f)(g) - 1))
                for f in ("sound_speed", "density", "attenuation")]
    e200, e400, e800 = err(200), err(400), err(800)
    # c and gamma are explicit formulas
    assert max(e200[0], e200[2]) < 1e-12
    assert 3.5 <= e200[1] / e400[1] <= 4.5
    assert 3.5 <= e400[1] / e800[1] <= 4.5
    assert e800[1] <= 1e-6


@pytest.mark.xfail(strict=True, reason="second-order differences leave 1e-5 at n_grid = 200 "
                   "from the background density curvature alone (see ledger)")
def test_round_trip_1e6_at_200(background, truth):
    u = unknowns_from_model(truth, background, I, 200)
    m = recover_parameters(u, background)
    g = u.grid
    assert np.max(np.abs(m.density(g) / truth.density(g) - 1)) <= 1e-6


def test_round_trip_patches_only_interval(background, truth):
    u = unknowns_from_model(truth, background, I, 200)
    m = recover_parameters(u, background)
    out = (m.grid_r < I[0]) | (m.grid_r > I[1])
    r = m.grid_r[out]
    assert np.array_equal(m.density(r), background.density(r))
    assert np.array_equal(m.sound_speed(r), background.sound_speed(r))


def _toy_model():
    r = np.linspace(0.0, 2.5, 26)
    one = np.ones(r.size)
    return SolarModel(r, one, one, 0 * one, c0=1.0, rho0=1.0, H=1.0, h_a=0.1, R_sun=2.0)


def test_harmonic_density_toy():
    bg = _toy_model()
    g = np.linspace(1.0, 2.0, 101)
    z = np.zeros(g.size)
    u = InversionUnknowns((1.0, 2.0), g, z, z - 0.25, z)
    # the plain boundary value problem; the toy's own spline density rings
    # near the atmosphere join, so it is not used as a reference here
    m = recover_parameters(u, bg, density_reference="none")
    assert np.allclose(m.density(g), 1.0, rtol=1e-12, atol=0)
    with pytest.raises(InversionError):
        recover_parameters(u, bg, density_reference="x")


def test_background_unknowns_return_background(background):
    u = unknowns_from_model(background, background, I, 200, check_support=False)
    g = u.grid
    m = recover_parameters(u, background)
    assert np.max(np.abs(m.density(g) / background.density(g) - 1)) < 1e-12
    plain = recover_parameters(u, background, density_reference="none")
    assert np.max(np.abs(plain.density(g) / background.density(g) - 1)) > 1e-7


def test_positivity_guard():
    bg = _toy_model()
    g = np.linspace(1.0, 2.0, 11)
    z = np.zeros(g.size)
    u1 = z.copy()
    u1[4] = 1.0
    with pytest.raises(InversionError) as e:
        recover_parameters(InversionUnknowns((1.0, 2.0), g, u1, z - 0.25, z), bg)
    assert e.value.code == "positivity" and "r=1.4" in str(e.value)
    # a strongly negative q drives w through zero
    with pytest.raises(InversionError) as e:
        recover_parameters(InversionUnknowns((1.0, 2.0), g, z, z - 60.0, z), bg)
    assert e.value.code in ("positivity", "bvp-singular")


def test_relative_l2_error():
    g = np.linspace(0.0, 1.0, 101)
    f = np.sin(3 * g) + 2
    assert relative_l2_error(f, f, g) == 0
    assert relative_l2_error(1.1 * f, f, g) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(InversionError) as e:
        relative_l2_error(f, 0 * f, g)
    assert e.value.code == "zero-denominator"
