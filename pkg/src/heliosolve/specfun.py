"""Coulomb wave functions, Coulomb phase shifts and Legendre polynomials.

The Coulomb functions follow the Steed/Barnett construction:

* ``F'/F`` from the minimal-solution recurrence in ``ell`` (evaluated
  backwards from an index beyond the turning point, which also fixes the
  sign of ``F``),
* ``H+'/H+ = p + iq`` from the complex continued fraction of the irregular
  confluent hypergeometric function,
* the Wronskian ``G F' - G' F = 1`` for the normalisation.

Deep in the classically forbidden region ``|G|`` and ``1/|F|`` exceed the
double range, so values carry a shared exponent ``log_scale``: the true
functions are ``G = Re(h) * exp(log_scale)`` and ``F = Im(h) * exp(-log_scale)``.
Both the Wronskian and the ``ell`` recurrences are invariant under this
scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import loggamma

__all__ = [
    "CoulombAccuracyError",
    "CoulombPair",
    "CoulombPhase",
    "coulomb_h",
    "coulomb_h_array",
    "coulomb_h_set",
    "coulomb_phase",
    "coulomb_sigma",
    "coulomb_theta",
    "legendre_p",
    "legendre_table",
    "gauss_legendre",
    "gauss_legendre_theta",
    "ELL_CAP",
]

ELL_CAP = 1024
_ETA_MAX = 100.0
_CF2_RATIO0 = 0.7  # l=0 CF2 normalisation is trusted for rho >= 0.7 * turning point
_SCALE_TRIGGER = 300.0  # |log G| above which values are returned scaled
_TINY = 1e-300


class CoulombAccuracyError(ArithmeticError):
    """Raised when an evaluation cannot meet its accuracy target."""


@dataclass(frozen=True)
class CoulombPair:
    """Values of ``H+-`` and their ``rho``-derivatives at one point.

    ``log_scale`` is zero unless the point lies so deep in the forbidden
    region that unscaled values would overflow (see module docstring).
    """

    h_plus: complex
    h_minus: complex
    dh_plus: complex
    dh_minus: complex
    log_scale: float = 0.0

    @property
    def wronskian(self) -> complex:
        """``H- dH+ - dH- H+`` (equals ``2i``)."""
        return self.h_minus * self.dh_plus - self.dh_minus * self.h_plus

    @property
    def F(self) -> float:
        return self.h_plus.imag

    @property
    def G(self) -> float:
        return self.h_plus.real


@dataclass(frozen=True)
class CoulombPhase:
    sigma_l: float
    theta: float
    vartheta: float


def _turning_point(ell, eta):
    return eta + math.sqrt(eta * eta + ell * (ell + 1.0))


def _check_args(ell, eta, rho, ell_cap):
    if rho <= 0 or not math.isfinite(rho):
        raise ValueError(f"rho must be positive and finite, got {rho!r}")
    if ell < 0 or int(ell) != ell:
        raise ValueError(f"ell must be a non-negative integer, got {ell!r}")
    if ell > ell_cap:
        raise ValueError(f"ell={ell} exceeds the configured cap {ell_cap}")
    if abs(eta) > _ETA_MAX:
        raise ValueError(f"|eta| must not exceed {_ETA_MAX}, got {eta!r}")


def _minimal_ratios(lmin, lmax, eta, rho):
    """Backward recurrence for ``x_j = R_{j+1} F_{j+1} / F_j``, j = lmin..lmax.

    Returns ``(x, sign)`` where ``sign[j - lmin]`` is the sign of ``F_j``
    (relative to the positive ``F`` at the starting index).
    """
    disc = rho * rho - 2.0 * eta * rho
    l_turn = math.sqrt(disc) if disc > 0 else 0.0
    margin = 40 + int((40.0 * math.sqrt(0.5 * rho + 1.0)) ** (2.0 / 3.0))
    start = max(int(l_turn) + 1, lmax + 1) + margin
    eta2 = eta * eta
    inv_rho = 1.0 / rho
    for _attempt in range(6):
        n = start - lmin
        x = [0.0] * (lmax - lmin + 1)
        sgn = [1.0] * (lmax - lmin + 1)
        xj = 0.0
        s = 1.0
        log_att = 0.0
        # S_j = j/rho + eta/j, T_j = S_j + S_{j+1}, R_j^2 = 1 + eta^2/j^2
        for j in range(start - 1, lmin - 1, -1):
            j1 = j + 1.0
            j2 = j + 2.0
            s1 = j1 * inv_rho + eta / j1
            s2 = j2 * inv_rho + eta / j2
            r2 = 1.0 + eta2 / (j1 * j1)
            den = s1 + s2 - xj
            if den == 0.0:
                den = _TINY
            xj = r2 / den
            if xj < 0.0:
                s = -s
            if j >= l_turn:
                log_att += 2.0 * math.log(abs(xj) / math.sqrt(r2) + _TINY)
            if j <= lmax:
                x[j - lmin] = xj
                sgn[j - lmin] = s
        del n
        if log_att < -40.0:
            break
        start += margin
    else:  # pragma: no cover - margin doubling always suffices in range
        raise CoulombAccuracyError("minimal-solution recurrence did not converge")
    # sgn[j] is the running product sign(x_j)...sign(x_{start-1}) = sign(F_j)
    signs = sgn
    return x, signs


def _s(j, eta, rho):
    return j / rho + eta / j


def _r(j, eta):
    return math.sqrt(1.0 + (eta / j) ** 2)


def _cf2(ell, eta, rho, tol=1e-16, maxit=200000):
    """``H+'/H+`` at ``ell`` by modified Lentz."""
    a = complex(1.0 + ell, eta)
    b = complex(-ell, eta)
    f = _TINY
    c = f
    d = 0.0
    for n in range(maxit):
        an = (a + n) * (b + n)
        bn = complex(2.0 * (rho - eta), 2.0 * (n + 1))
        d = bn + an * d
        if d == 0:
            d = _TINY
        c = bn + an / c
        if c == 0:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            break
    else:
        raise CoulombAccuracyError(
            f"CF2 failed to converge at ell={ell}, eta={eta}, rho={rho}")
    return complex(0.0, 1.0 - eta / rho) + complex(0.0, 1.0 / rho) * f


def _normalise(f, pq, sign):
    """(F, F', G, G') from F'/F, H+'/H+ and the sign of F."""
    p, q = pq.real, pq.imag
    if q <= 0:
        raise CoulombAccuracyError("non-positive q from CF2")
    gam = (f - p) / q
    F = sign / math.sqrt(q * (1.0 + gam * gam))
    G = gam * F
    return F, f * F, G, p * G - q * F


def _g0_by_integration(eta, rho, rho1, g1, dg1):
    """Integrate the l=0 Coulomb equation inward for G (dominant inward)."""

    def rhs(x, y):
        return [y[1], (2.0 * eta / x - 1.0) * y[0]]

    sol = solve_ivp(rhs, (rho1, rho), [g1, dg1], method="DOP853",
                    rtol=2.3e-14, atol=0.0)
    if not sol.success:  # pragma: no cover
        raise CoulombAccuracyError(sol.message)
    return sol.y[0, -1], sol.y[1, -1]


def _g_seed(lmax, eta, rho):
    """Normalised (G, G') at a seed index plus F'/F and signs for 0..lmax+1.

    Returns ``(lseed, G, dG, f)``, with ``f`` indexed from 0.
    """
    x, signs = _minimal_ratios(0, lmax + 1, eta, rho)
    f = [_s(j + 1.0, eta, rho) - x[j] for j in range(lmax + 2)]
    lseed = None
    # q = Im(H+'/H+) loses relative accuracy below the turning point
    for j in range(lmax + 1, -1, -1):
        if rho >= _turning_point(j, eta):
            lseed = j
            break
    if lseed is None and rho >= _CF2_RATIO0 * _turning_point(0, eta):
        lseed = 0
    if lseed is not None:
        F, dF, G, dG = _normalise(f[lseed], _cf2(lseed, eta, rho), signs[lseed])
        return lseed, G, dG, f
    # rho below the l=0 window: integrate G_0 inward from a safe radius
    rho1 = 2.0 * eta
    x1, s1 = _minimal_ratios(0, 0, eta, rho1)
    f1 = _s(1.0, eta, rho1) - x1[0]
    _, _, g1, dg1 = _normalise(f1, _cf2(0, eta, rho1), s1[0])
    G, dG = _g0_by_integration(eta, rho, rho1, g1, dg1)
    return 0, G, dG, f


def _g_walk(lseed, G, dG, targets, eta, rho):
    """Walk (G, G') from ``lseed`` to each index in ``targets``.

    Returns dict ell -> (G_mantissa, dG_mantissa, log_exponent).
    """
    out = {}
    lo, hi = min(targets), max(targets)
    e = 0.0
    g, dg = G, dG
    if lseed <= lo:
        cur = lseed
        if cur in targets:
            out[cur] = (g, dg, e)
        while cur < hi:
            j1 = cur + 1.0
            s1 = _s(j1, eta, rho)
            r1 = _r(j1, eta)
            gn = (s1 * g - dg) / r1
            dgn = r1 * g - s1 * gn
            g, dg = gn, dgn
            cur += 1
            m = abs(g) + abs(dg)
            if m > 1e100 or (m < 1e-100 and m > 0):
                k = math.log(m)
                g /= m
                dg /= m
                e += k
            if cur in targets:
                out[cur] = (g, dg, e)
        return out
    # downward walk (seed above the targets, oscillatory in ell)
    cur = lseed
    if cur in targets:
        out[cur] = (g, dg, e)
    while cur > lo:
        # u_{l-1} = (S_l u_l + u_l') / R_l ; u'_{l-1} = S_l u_{l-1} - R_l u_l
        j = float(cur)
        s = _s(j, eta, rho)
        r = _r(j, eta)
        gp = (s * g + dg) / r
        dgp = s * gp - r * g
        g, dg = gp, dgp
        cur -= 1
        if cur in targets:
            out[cur] = (g, dg, e)
    if hi > lseed:
        out.update(_g_walk(lseed, G, dG, [t for t in targets if t > lseed],
                           eta, rho))
    return out


def _assemble(gm, dgm, e, f, scale):
    """Build (F, F', G, G') mantissas relative to the exponent ``scale``."""
    shift = e - scale
    # G = gm * exp(e) = (gm*exp(e-scale)) * exp(scale)
    g = gm * math.exp(shift)
    dg = dgm * math.exp(shift)
    den = g * f - dg
    if den == 0.0 or not math.isfinite(den):
        raise CoulombAccuracyError("degenerate Wronskian normalisation")
    F = 1.0 / den
    return F, f * F, g, dg


def _pair(F, dF, G, dG, scale):
    h = complex(G, F)
    dh = complex(dG, dF)
    return CoulombPair(h, h.conjugate(), dh, dh.conjugate(), scale)


def coulomb_h(ell: int, eta: float, rho: float, *, scaled: bool = False,
              log_scale: float | None = None, ell_cap: int = ELL_CAP) -> CoulombPair:
    """Evaluate ``H+-_ell(eta, rho)`` and their ``rho``-derivatives.

    Parameters
    ----------
    ell, eta, rho
        Angular degree, Sommerfeld parameter and dimensionless radius.
    scaled
        Allow a non-zero exponent in the returned pair.  Without it, points
        whose values leave the double range raise
        :class:`CoulombAccuracyError`.
    log_scale
        Force a particular exponent (useful to compare neighbouring
        degrees on a common scale).  Implies ``scaled``.
    """
    _check_args(ell, eta, rho, ell_cap)
    lseed, G, dG, f = _g_seed(ell, eta, rho)
    gm, dgm, e = _g_walk(lseed, G, dG, [ell], eta, rho)[ell]
    loggabs = e + math.log(abs(gm) + abs(dgm))
    if log_scale is None:
        if abs(loggabs) > _SCALE_TRIGGER:
            if not scaled:
                raise CoulombAccuracyError(
                    f"H({ell}, {eta}, {rho}) outside double range; use scaled=True")
            log_scale = loggabs
        else:
            log_scale = 0.0
    F, dF, G, dG = _assemble(gm, dgm, e, f[ell], log_scale)
    return _pair(F, dF, G, dG, log_scale)


def coulomb_h_array(ell_max: int, eta: float, rho: float,
                    ell_cap: int = ELL_CAP):
    """``H+`` and ``dH+/drho`` for ``ell = 0..ell_max`` at one point.

    Returns two complex arrays.  Raises if any value leaves the double
    range (the array form is meant for the oscillatory regime).
    """
    _check_args(ell_max, eta, rho, ell_cap)
    lseed, G, dG, f = _g_seed(ell_max, eta, rho)
    walk = _g_walk(lseed, G, dG, list(range(ell_max + 1)), eta, rho)
    h = np.empty(ell_max + 1, complex)
    dh = np.empty(ell_max + 1, complex)
    for ell, (gm, dgm, e) in walk.items():
        if e != 0.0 or not (abs(gm) < 1e290):
            raise CoulombAccuracyError(
                f"H({ell}, {eta}, {rho}) outside double range")
        F, dF, Gv, dGv = _assemble(gm, dgm, 0.0, f[ell], 0.0)
        h[ell] = complex(Gv, F)
        dh[ell] = complex(dGv, dF)
    return h, dh


def coulomb_h_set(ells, eta: float, rho: float, *, shared_scale=None,
                  ell_cap: int = ELL_CAP) -> dict:
    """``H+-`` for several degrees at one point from a single seed.

    Returns ``{ell: CoulombPair}``.  Each pair carries its own exponent as
    with ``coulomb_h(..., scaled=True)``; ``shared_scale`` maps a degree to
    another degree of the set whose exponent it should use instead (for
    comparing neighbours, like ``coulomb_h(..., log_scale=...)``).
    """
    shared_scale = dict(shared_scale or {})
    ells = sorted({int(ell) for ell in ells} | {int(v) for v in shared_scale.values()})
    if not ells or ells[0] < 0:
        raise ValueError("ells must be non-empty and non-negative")
    _check_args(ells[-1], eta, rho, ell_cap)
    lseed, G, dG, f = _g_seed(ells[-1], eta, rho)
    walk = _g_walk(lseed, G, dG, ells, eta, rho)
    scales = {}
    for ell in ells:
        gm, dgm, e = walk[ell]
        loggabs = e + math.log(abs(gm) + abs(dgm))
        scales[ell] = loggabs if abs(loggabs) > _SCALE_TRIGGER else 0.0
    out = {}
    for ell in ells:
        gm, dgm, e = walk[ell]
        log_scale = scales[int(shared_scale.get(ell, ell))]
        out[ell] = _pair(*_assemble(gm, dgm, e, f[ell], log_scale), log_scale)
    return out


def coulomb_sigma(ell: int, eta: float) -> float:
    """Coulomb phase shift ``arg Gamma(ell + 1 + i eta)`` in (-pi, pi]."""
    if abs(eta) > _ETA_MAX:
        raise ValueError(f"|eta| must not exceed {_ETA_MAX}")
    # continuous branch: sigma_0 from log-gamma, then sigma_l = sigma_0 + sum atan(eta/j)
    sig = float(loggamma(complex(1.0, eta)).imag)
    for j in range(1, ell + 1):
        sig += math.atan2(eta, j)
    return _wrap(sig)


def _wrap(a):
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def coulomb_theta(ell: int, eta: float, rho: float) -> float:
    """Asymptotic Coulomb phase ``rho - eta ln 2rho - ell pi/2 + sigma``."""
    return rho - eta * math.log(2.0 * rho) - 0.5 * ell * math.pi + coulomb_sigma(ell, eta)


def coulomb_phase(ell: int, eta: float, rho: float) -> CoulombPhase:
    pair = coulomb_h(ell, eta, rho, scaled=True)
    F = pair.F * math.exp(-2.0 * pair.log_scale) if pair.log_scale else pair.F
    vartheta = 2.0 * math.atan2(F, pair.G)
    return CoulombPhase(coulomb_sigma(ell, eta), coulomb_theta(ell, eta, rho), vartheta)


def legendre_p(ell: int, s):
    """Legendre polynomial ``P_ell(s)`` by upward three-term recurrence."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(np.abs(s_arr) > 1.0):
        raise ValueError("legendre_p is defined here on [-1, 1] only")
    if ell < 0:
        raise ValueError("ell must be non-negative")
    p0 = np.ones_like(s_arr)
    if ell == 0:
        return p0 if p0.ndim else float(p0)
    p1 = s_arr.copy()
    for n in range(1, ell):
        p0, p1 = p1, ((2 * n + 1) * s_arr * p1 - n * p0) / (n + 1)
    return p1 if p1.ndim else float(p1)


def legendre_table(ell_max: int, s) -> np.ndarray:
    """Array ``P[ell, j] = P_ell(s_j)`` for ``ell = 0..ell_max``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(np.abs(s) > 1.0):
        raise ValueError("legendre_table is defined on [-1, 1] only")
    out = np.empty((ell_max + 1, s.size))
    out[0] = 1.0
    if ell_max >= 1:
        out[1] = s
    for n in range(1, ell_max):
        out[n + 1] = ((2 * n + 1) * s * out[n] - n * out[n - 1]) / (n + 1)
    return out


def _legendre_pair_theta(n, theta):
    """``P_n`` and ``P_{n-1}`` at ``cos(theta)`` for ``0 < theta <= pi/2``.

    The recurrence runs on ``D_k = P_k - P_{k-1}`` with ``u = 1 - cos(theta)``
    taken as ``2 sin^2(theta/2)``, which keeps full relative accuracy near
    ``x = 1`` where the plain recurrence loses digits to the rounding of ``x``.
    """
    u = 2.0 * np.sin(0.5 * theta) ** 2
    p_prev = np.ones_like(theta)
    p = 1.0 - u
    d = p - p_prev
    for k in range(1, n):
        d = (k * d - (2 * k + 1) * u * p) / (k + 1)
        p_prev, p = p, p + d
    return p, p_prev


def gauss_legendre_theta(n: int):
    """Gauss-Legendre rule as angles: ``theta`` (ascending), ``cos(theta)``, weights.

    Nodes are Newton-refined in ``theta`` and weights use
    ``2 sin^2(theta) / (n P_{n-1})^2``; near the ends this is several
    digits more accurate than the eigenvalue-based rule.
    """
    if n < 1:
        raise ValueError("n must be positive")
    x0, _ = np.polynomial.legendre.leggauss(n)
    half = x0[x0 > 0][::-1] if n > 1 else np.array([])
    th = np.arccos(half)
    for _ in range(3):
        p, q = _legendre_pair_theta(n, th)
        sn = np.sin(th)
        dp = -n * (q - np.cos(th) * p) / sn  # d P_n(cos theta) / d theta
        th = th - p / dp
    p, q = _legendre_pair_theta(n, th)
    sn = np.sin(th)
    w = 2.0 * sn * sn / (n * (q - np.cos(th) * p)) ** 2
    if n % 2:
        # middle node: P_n'(0) = n P_{n-1}(0)
        q0 = legendre_p(n - 1, 0.0)
        thetas = np.concatenate([th, [0.5 * math.pi], math.pi - th[::-1]])
        weights = np.concatenate([w, [2.0 / (n * q0) ** 2], w[::-1]])
    else:
        thetas = np.concatenate([th, math.pi - th[::-1]])
        weights = np.concatenate([w, w[::-1]])
    return thetas, np.cos(thetas), weights


def gauss_legendre(n: int):
    """Gauss-Legendre nodes (ascending) and weights on [-1, 1]."""
    _, x, w = gauss_legendre_theta(n)
    return x[::-1].copy(), w[::-1].copy()
