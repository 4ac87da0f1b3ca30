"""Radial Schroedinger equation: regular solutions, scattering, Green's functions.

All integration is done in scaled units ``x = r/R_unit`` on

    phi'' = (l(l+1)/x^2 + vhat(x) - kappa^2) phi,

with a fourth-order Magnus integrator (two Gauss points per step, exact
2x2 matrix exponential).  The exponential propagator is exact for a
constant coefficient, so step sizes follow the smoothness of the potential
(spline knots) rather than the local wavelength.  Many channels
``(omega, ell)`` share one grid and are advanced together.

Solutions are renormalised by powers of two whenever
``max(|phi|, |phi'|/kappa)`` leaves ``[1e-2, 1e2]``; the exponent is kept in
``log_scale`` (natural log) so the true solution is ``phi * exp(log_scale)``.

Beyond ``R_a`` the potential is ``alpha/r`` and solutions are written with
Coulomb functions ``H+-_l(eta, kappa x)``, ``eta = alpha/(2k)``.  Wronskians
are ``[f, g] = f g' - f' g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .solar_model import PotentialProfile
from .specfun import CoulombAccuracyError, coulomb_h, coulomb_h_array

__all__ = [
    "RadialError",
    "DegenerateMatchingError",
    "RadialSolution",
    "MatchingResult",
    "RadialGreens",
    "make_grid",
    "integrate_regular",
    "match_scattering",
    "radial_greens",
    "power_balance_residual",
    "scattering_table",
    "greens_diagonals",
    "reference_solutions",
    "DEGENERACY_THRESHOLD",
]

DEGENERACY_THRESHOLD = 1e-12
_LN2 = math.log(2.0)
_SQ3 = math.sqrt(3.0)
_BLOCK = 256


class RadialError(ArithmeticError):
    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class DegenerateMatchingError(RadialError):
    def __init__(self, detail):
        super().__init__("degenerate-matching", detail)


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Regular solution on ``grid`` (scaled radius).

    ``phi * exp(log_scale)`` is the solution normalised by
    ``phi ~ x^(l+1)`` at the origin.
    """

    ell: int
    grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    log_scale: np.ndarray

    def at(self, x):
        """Index of node ``x`` (must be a grid node)."""
        i = int(np.searchsorted(self.grid, x))
        if i >= self.grid.size or not math.isclose(self.grid[i], x, rel_tol=1e-14, abs_tol=0.0):
            raise RadialError("not-a-node", f"x={x!r} is not a grid node")
        return i


@dataclass(frozen=True)
class MatchingResult:
    """Matching of the regular solution to ``b (H- - s H+)`` at ``R_a``.

    ``b`` is a mantissa: the coefficient in scaled units is
    ``b * exp(log_b)`` (for the ``x^(l+1)``-normalised solution).
    """

    s: complex
    b: complex
    log_b: float
    cond_flag: bool


# ---------------------------------------------------------------------------
# grids

def _start_radius(pots, ell_min=0):
    """Series start ``x0`` with ``(|vhat| + kappa^2) x0^2 / ((2l+2)(2l+3)) < 1e-12``."""
    x0 = math.inf
    for p in pots:
        probe = np.array([1e-6 * p.x_a])
        mag = abs(complex(p.vhat(probe)[0])) + p.kappa ** 2 + 1.0
        x0 = min(x0, math.sqrt(1e-12 * (2 * ell_min + 2) * (2 * ell_min + 3) / mag))
    return min(x0, 1e-3 * min(p.x_a for p in pots))


def make_grid(pots, x_end, extra=(), resolution=1, frac=0.05, dense=(), tail_kh=0.25,
              ell_max=0):
    """Integration nodes from the series start to ``x_end``.

    Nodes include the potential breakpoints, ``x_a`` and ``extra``.  Steps
    never exceed ``frac * x`` (centrifugal term); ``resolution`` multiplies
    the number of steps of every interval, and inside any ``(a, b, h)`` of
    ``dense`` steps do not exceed ``h``.  Beyond ``x_a`` steps are at most
    ``tail_kh / kappa`` before the ``resolution`` factor.

    When ``ell_max`` exceeds ``kappa * x_end`` the regular solution grows
    like ``x^(l+1)`` over the whole range and the frozen-coefficient steps
    lose accuracy as ``l h^4``; the geometric pieces then get
    ``ceil((ell_max / (kappa x_end))^2)`` times more steps.
    """
    if isinstance(pots, PotentialProfile):
        pots = [pots]
    x0 = _start_radius(pots)
    pts = [x0, x_end]
    for p in pots:
        k = p.knots
        pts.extend(k[(k > x0) & (k < x_end)])
    pts.extend(float(e) for e in extra if x0 < e < x_end)
    for a, b, _h in dense:
        pts.extend(v for v in (a, b) if x0 < v < x_end)
    brk = np.unique(np.asarray(pts, float))
    x_tail = min(p.x_a for p in pots) * (1 - 1e-15)
    kap = max(max(p.kappa for p in pots), 1e-300)
    h_tail = tail_kh / kap
    ratio = ell_max / (kap * x_end)
    boost = int(math.ceil(ratio * ratio)) if ratio > 1 else 1
    pieces = [brk[:1]]
    for xl, xr in zip(brk[:-1], brk[1:]):
        width = xr - xl
        if xl < 20 * x0 / frac or width > frac * xl:
            # geometric steps where the centrifugal scale is finer than the piece
            n_geo = max(1, int(math.ceil(math.log(xr / xl) / math.log1p(frac))))
        else:
            n_geo = 1
        n = resolution * n_geo * (boost if n_geo > 1 else 1)
        if xl >= x_tail:
            n = max(n, resolution * int(math.ceil(width / h_tail)))
        for a, b, h in dense:
            lo, hi = max(a, xl), min(b, xr)
            if hi > lo:
                n = max(n, int(math.ceil(width / h)))
        if n_geo > 1 and n == resolution * n_geo * boost:
            seg = np.geomspace(xl, xr, n + 1)[1:]
        else:
            seg = np.linspace(xl, xr, n + 1)[1:]
        seg[-1] = xr
        pieces.append(seg)
    return np.concatenate(pieces)


# ---------------------------------------------------------------------------
# Magnus propagation

def _gauss_potentials(pots, nodes):
    xl, xr = nodes[:-1], nodes[1:]
    mid = 0.5 * (xl + xr)
    half = 0.5 * (xr - xl)
    x1 = mid - half / _SQ3
    x2 = mid + half / _SQ3
    V1 = np.stack([p.vhat(x1) for p in pots])
    V2 = np.stack([p.vhat(x2) for p in pots])
    return x1, x2, V1, V2


def _step_matrices(h, x1, x2, V1, V2, kap2, cent):
    """Propagators for a block of steps.

    Shapes: ``h, x1, x2`` (B,), ``V1, V2`` (n_w, B), ``kap2`` (n_w,),
    ``cent = l(l+1)`` (n_l,).  Returns four arrays (B, n_w, n_l).
    """
    Q1 = (V1.T - kap2)[:, :, None] + cent[None, None, :] / (x1 * x1)[:, None, None]
    Q2 = (V2.T - kap2)[:, :, None] + cent[None, None, :] / (x2 * x2)[:, None, None]
    hh = h[:, None, None]
    Qb = 0.5 * (Q1 + Q2)
    d = (_SQ3 / 12.0) * hh * hh * (Q1 - Q2)
    mu2 = d * d + hh * hh * Qb
    mu = np.sqrt(mu2)
    small = np.abs(mu) < 1e-4
    with np.errstate(over="ignore", invalid="ignore"):
        ch = np.where(small, 1.0 + 0.5 * mu2, np.cosh(mu))
        sh = np.where(small, 1.0 + mu2 / 6.0, np.sinh(mu) / np.where(small, 1.0, mu))
    m11 = ch + sh * d
    m22 = ch - sh * d
    m12 = sh * hh
    m21 = sh * hh * Qb
    if not (np.all(np.isfinite(m11)) and np.all(np.isfinite(m21))):
        raise RadialError("step-overflow", "propagator overflow; refine the grid")
    return m11, m12, m21, m22


def _sweep(pots, ells, nodes, y1, y2, log, *, inward=False, store=None):
    """Advance ``(phi, phi')`` across ``nodes`` for all channels.

    ``y1, y2, log`` have shape (n_w, n_l) and hold the state at the first
    node (outward) or the last node (inward).  ``store`` is a boolean mask
    over nodes; the states there are returned as arrays (n_store, n_w, n_l).
    """
    pots = list(pots)
    ells = np.asarray(ells, dtype=float)
    cent = ells * (ells + 1.0)
    kap = np.array([p.kappa for p in pots])
    kap2 = kap * kap
    dscale = np.maximum(kap, 1.0)[:, None]
    x1, x2, V1, V2 = _gauss_potentials(pots, nodes)
    h = np.diff(nodes)
    n_steps = h.size
    y1 = np.array(y1, dtype=complex)
    y2 = np.array(y2, dtype=complex)
    log = np.array(log, dtype=float)
    if store is None:
        store = np.zeros(nodes.size, bool)
    idx = np.flatnonzero(store)
    out1 = np.empty((idx.size,) + y1.shape, complex)
    out2 = np.empty_like(out1)
    outl = np.empty((idx.size,) + y1.shape, float)
    slot = {int(i): k for k, i in enumerate(idx)}

    def record(node):
        k = slot.get(node)
        if k is not None:
            out1[k] = y1
            out2[k] = y2
            outl[k] = log

    order = range(0, n_steps, _BLOCK)
    if inward:
        order = reversed(list(order))
        record(nodes.size - 1)
    else:
        record(0)
    for b0 in order:
        b1 = min(b0 + _BLOCK, n_steps)
        sl = slice(b0, b1)
        m11, m12, m21, m22 = _step_matrices(h[sl], x1[sl], x2[sl], V1[:, sl], V2[:, sl],
                                            kap2, cent)
        steps = range(b1 - b0)
        if inward:
            steps = reversed(steps)
        for j in steps:
            if inward:
                a, b_, c, d = m22[j], -m12[j], -m21[j], m11[j]
            else:
                a, b_, c, d = m11[j], m12[j], m21[j], m22[j]
            y1, y2 = a * y1 + b_ * y2, c * y1 + d * y2
            mag = np.maximum(np.abs(y1), np.abs(y2) / dscale)
            bad = (mag > 1e2) | (mag < 1e-2)
            if bad.any():
                if not np.all(np.isfinite(mag)) or np.any(mag == 0):
                    raise RadialError("tolerance-not-met",
                                      f"solution lost near x={float(nodes[b0 + j])!r}")
                e = np.where(bad, -np.round(np.log2(mag)), 0.0)
                f = np.exp2(e)
                y1 = y1 * f
                y2 = y2 * f
                log = log - e * _LN2
            record(b0 + j if inward else b0 + j + 1)
    return y1, y2, log, (out1, out2, outl)


def _regular_start(pots, ells, x0):
    """Series data ``x^(l+1)(1 + a x^2)`` at ``x0`` in log-scaled form."""
    ells = np.asarray(ells, float)
    n_w = len(pots)
    Q0 = np.array([complex(p.vhat(np.array([x0]))[0]) - p.kappa ** 2 for p in pots])
    a = Q0[:, None] / (2.0 * (2.0 * ells[None, :] + 3.0))
    y1 = 1.0 + a * x0 * x0
    y2 = ((ells[None, :] + 1.0) / x0) * (1.0 + a * x0 * x0) + 2.0 * a * x0
    log = np.broadcast_to((ells + 1.0) * math.log(x0), (n_w, ells.size)).copy()
    # bring the stored state into the renormalisation window as well
    dscale = np.maximum([p.kappa for p in pots], 1.0)[:, None]
    e = -np.round(np.log2(np.maximum(np.abs(y1), np.abs(y2) / dscale)))
    f = np.exp2(e)
    return (y1 * f).astype(complex), (y2 * f).astype(complex), log - e * _LN2


# ---------------------------------------------------------------------------
# Coulomb data at a radius

def _coulomb_parts(ells, eta, rho):
    """Mantissas of ``G, G', F, F'`` (rho-derivatives) and exponents.

    True values: ``G = Gm e^sig``, ``F = Fm e^-sig``.
    """
    ells = np.asarray(ells, int)
    lmax = int(ells.max())
    try:
        h, dh = coulomb_h_array(lmax, eta, rho)
        h, dh = h[ells], dh[ells]
        return h.real, dh.real, h.imag, dh.imag, np.zeros(ells.size)
    except CoulombAccuracyError:
        pass
    G = np.empty(ells.size)
    dG = np.empty(ells.size)
    F = np.empty(ells.size)
    dF = np.empty(ells.size)
    sig = np.empty(ells.size)
    for i, ell in enumerate(ells):
        pr = coulomb_h(int(ell), eta, rho, scaled=True)
        G[i], dG[i] = pr.h_plus.real, pr.dh_plus.real
        F[i], dF[i] = pr.h_plus.imag, pr.dh_plus.imag
        sig[i] = pr.log_scale
    return G, dG, F, dF, sig


def _hplus_state(ells, eta, kappa, x, sign=1):
    """``(H, dH/dx)`` mantissas and log-scale for ``H+`` (sign=1) or ``H-``."""
    G, dG, F, dF, sig = _coulomb_parts(ells, eta, kappa * x)
    damp = np.exp(-2.0 * sig)
    y1 = G + sign * 1j * damp * F
    y2 = kappa * (dG + sign * 1j * damp * dF)
    return y1, y2, sig


def _match(y1, y2, log, ells, eta, kappa, x_a):
    """Vectorised matching of regular states at ``x_a`` (arrays over ell)."""
    G, dG, F, dF, sig = _coulomb_parts(ells, eta, kappa * x_a)
    dG = kappa * dG
    dF = kappa * dF
    WG = y1 * dG - y2 * G
    WF = (y1 * dF - y2 * F) * np.exp(-2.0 * sig)
    wp = WG + 1j * WF  # [phi, H+] e^{-sig}
    wm = WG - 1j * WF
    scale = np.maximum(np.abs(y1) * np.hypot(dG, dF * np.exp(-2 * sig)),
                       np.abs(y2) * np.hypot(G, F * np.exp(-2 * sig)))
    flag = np.abs(wp) < DEGENERACY_THRESHOLD * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(flag, np.nan, wm / wp)
    b = wp / (2j * kappa)
    return s, b, log + sig, flag


# ---------------------------------------------------------------------------
# public single-channel API

def integrate_regular(pot: PotentialProfile, ell: int, r_end: float, *,
                      rtol=1e-10, resolution=1, extra=(), max_refine=8) -> RadialSolution:
    """Regular solution from the series start to ``r_end`` (SI radius).

    The grid is refined by step doubling until the direction of the state
    ``(phi, phi'/kappa)`` at ``r_end`` changes by less than ``15 * rtol``
    (Richardson estimate for a fourth-order method).  The overall
    normalisation is not part of the test: it cancels in ``s`` and ``G`` and
    converges slowly through deep forbidden regions at high ``ell``.
    """
    x_end = r_end / pot.R_unit
    if x_end < pot.x_a * (1 - 1e-14):
        raise RadialError("domain", "r_end must be at least R_a")
    prev = None
    for _ in range(max_refine):
        nodes = make_grid([pot], x_end, extra=extra, resolution=resolution, ell_max=ell)
        y1, y2, log = _regular_start([pot], [ell], nodes[0])
        store = np.ones(nodes.size, bool)
        _, _, _, (o1, o2, ol) = _sweep([pot], [ell], nodes, y1, y2, log, store=store)
        sol = RadialSolution(ell, nodes, o1[:, 0, 0], o2[:, 0, 0], ol[:, 0, 0])
        if prev is not None:
            ks = max(pot.kappa, 1.0)
            a, da = complex(prev.phi[-1]), complex(prev.dphi[-1]) / ks
            b, db = complex(sol.phi[-1]), complex(sol.dphi[-1]) / ks
            # sine of the angle between the two states
            err = abs(a * db - da * b) / (math.hypot(abs(a), abs(da)) * math.hypot(abs(b), abs(db)))
            if err < 15.0 * rtol:
                return sol
        prev = sol
        resolution *= 2
    raise RadialError("tolerance-not-met",
                      f"no convergence to rtol={rtol} after {max_refine} refinements")


def match_scattering(sol: RadialSolution, pot: PotentialProfile) -> MatchingResult:
    """``s = [phi, H-]/[phi, H+]`` and ``b = [phi, H+]/(2ik)`` at ``R_a``."""
    i = sol.at(pot.x_a)
    s, b, logb, flag = _match(np.array([sol.phi[i]]), np.array([sol.dphi[i]]),
                              np.array([sol.log_scale[i]]), [sol.ell], pot.eta,
                              pot.kappa, pot.x_a)
    if flag[0]:
        raise DegenerateMatchingError(
            f"|[phi, H+]| below {DEGENERACY_THRESHOLD} of its scale at ell={sol.ell}")
    return MatchingResult(complex(s[0]), complex(b[0]), float(logb[0]), False)


class RadialGreens:
    """Radial Green's function ``G_l(r, r')`` of one channel (SI units).

    Built from the regular solution ``phi`` and the outgoing solution
    ``psi+`` (equal to ``H+`` beyond ``R_a``) on a grid containing every
    radius in ``radii``:

        G(r, r') = -phi(r<) psi+(r>) / [phi, psi+](r),

    with the Wronskian evaluated at the first argument ``r``.
    """

    def __init__(self, pot, ell, radii, resolution=1, dense=()):
        self.pot = pot
        self.ell = int(ell)
        self.k = pot.k
        radii = np.atleast_1d(np.asarray(radii, float))
        xs = radii / pot.R_unit
        x_far = max(pot.x_a, float(xs.max()))
        nodes = make_grid([pot], x_far, extra=tuple(xs), resolution=resolution, dense=dense,
                          ell_max=ell)
        self.nodes = nodes
        y1, y2, log = _regular_start([pot], [ell], nodes[0])
        store = np.ones(nodes.size, bool)
        *_, (p1, p2, pl) = _sweep([pot], [ell], nodes, y1, y2, log, store=store)
        self.phi = (p1[:, 0, 0], p2[:, 0, 0], pl[:, 0, 0])
        h1, h2, hs = _hplus_state([ell], pot.eta, pot.kappa, x_far)
        *_, (q1, q2, ql) = _sweep([pot], [ell], nodes, h1[None, :], h2[None, :], hs[None, :],
                                  inward=True, store=store)
        self.psi = (q1[:, 0, 0], q2[:, 0, 0], ql[:, 0, 0])
        ia = int(np.searchsorted(nodes, pot.x_a))
        s, b, logb, flag = _match(self.phi[0][ia:ia + 1], self.phi[1][ia:ia + 1],
                                  self.phi[2][ia:ia + 1], [ell], pot.eta, pot.kappa, pot.x_a)
        if flag[0]:
            raise DegenerateMatchingError(f"ell={ell}")
        self.matching = MatchingResult(complex(s[0]), complex(b[0]), float(logb[0]), False)

    def _node(self, r):
        x = r / self.pot.R_unit
        i = int(np.searchsorted(self.nodes, x * (1 - 1e-15)))
        if i >= self.nodes.size or abs(self.nodes[i] - x) > 1e-13 * x:
            raise RadialError("not-a-node", f"radius {float(r)!r} was not requested")
        return i

    def wronskian(self, r):
        """``[phi, psi+]`` at ``r`` in scaled units, as (mantissa, log)."""
        i = self._node(r)
        a1, a2, al = (v[i] for v in self.phi)
        b1, b2, bl = (v[i] for v in self.psi)
        return a1 * b2 - a2 * b1, al + bl

    def __call__(self, r, rp):
        i, j = self._node(r), self._node(rp)
        lo, hi = (i, j) if self.nodes[i] <= self.nodes[j] else (j, i)
        w, wl = self.wronskian(r)
        val = -self.phi[0][lo] * self.psi[0][hi] / w
        lg = self.phi[2][lo] + self.psi[2][hi] - wl
        return complex(self.pot.R_unit * val * math.exp(lg))

    def closed_form(self, r, rp):
        """``(i/2k)(H- - s H+)(k r<) H+(k r>)`` for ``r, r' >= R_a``."""
        if min(r, rp) < self.pot.R_a * (1 - 1e-14):
            raise RadialError("domain", "closed form needs r, r' >= R_a")
        lo, hi = sorted((r, rp))
        eta, k = self.pot.eta, self.k
        a = coulomb_h(self.ell, eta, k * lo)
        c = coulomb_h(self.ell, eta, k * hi)
        s = self.matching.s
        return complex(0.5j / k * (a.h_minus - s * a.h_plus) * c.h_plus)


def radial_greens(pot: PotentialProfile, ell: int, radii=None, **kw) -> RadialGreens:
    """Green's function object; ``radii`` (SI) are the evaluation radii."""
    if radii is None:
        radii = [pot.R_a]
    return RadialGreens(pot, ell, radii, **kw)


def power_balance_residual(g: RadialGreens, pot: PotentialProfile, r: float, R: float,
                           h_quad=None) -> float:
    """``|Im G(r,r) - k |G(R,r)|^2 + int_0^R Im v |G(r',r)|^2 dr'|`` (SI).

    ``G(R, r)`` uses the Coulomb closed form beyond ``R_a``; the volume
    integral uses Simpson's rule on a grid with steps at most ``h_quad``
    (scaled units; default resolves the local wavelength).
    """
    if not (R > r >= pot.R_a * (1 - 1e-14)):
        raise RadialError("domain", "need R > r >= R_a")
    Ru = pot.R_unit
    x, X = r / Ru, R / Ru
    kap = pot.kappa
    gxx = g(r, r) / Ru
    m = g.matching
    hp = coulomb_h(g.ell, pot.eta, kap * X)
    i = g._node(r)
    phix = g.phi[0][i] * math.exp(g.phi[2][i] - m.log_b)
    gRx = -phix * hp.h_plus / (2j * kap * m.b)
    if h_quad is None:
        h_quad = 0.25 / max(kap, 1.0)
    nodes = make_grid([pot], pot.x_a, dense=((0.0, pot.x_a, h_quad),))
    y1, y2, log = _regular_start([pot], [g.ell], nodes[0])
    f1, f2, fl, (p1, _, pl) = _sweep([pot], [g.ell], nodes, y1, y2, log,
                                     store=np.ones(nodes.size, bool))
    # normalise with this sweep's own matching so discretisation errors cancel
    _, bq, logbq, _ = _match(f1[0], f2[0], fl[0], [g.ell], pot.eta, kap, pot.x_a)
    phi = p1[:, 0, 0] * np.exp(pl[:, 0, 0] - logbq[0])
    # r >= R_a beyond the support of Im v: G(r', r) = -phi(r') H+(k r)/(2ik b)
    hr = coulomb_h(g.ell, pot.eta, kap * x).h_plus
    gabs2 = np.abs(phi * hr / (2 * kap * bq[0])) ** 2
    imv = pot.vhat(nodes).imag
    integral = simpson(imv * gabs2, x=nodes)
    res = gxx.imag - kap * abs(gRx) ** 2 + integral
    return abs(res) * Ru


# ---------------------------------------------------------------------------
# batched pipeline helpers

def _pots_list(pots):
    return [pots] if isinstance(pots, PotentialProfile) else list(pots)


def scattering_table(pots, ells, *, resolution=2, dense=(), return_states=False,
                     store_x=()):
    """``s[l, w]`` (and ``b``) for all channels.

    All potentials must share ``R_a`` and ``R_unit``.  With
    ``return_states`` the regular states at ``store_x`` are returned as
    well (used for derivatives).
    """
    pots = _pots_list(pots)
    ells = np.asarray(ells, int)
    xa = pots[0].x_a
    nodes = make_grid(pots, xa, extra=tuple(store_x), resolution=resolution, dense=dense,
                      ell_max=int(np.max(ells)))
    y1, y2, log = _regular_start(pots, ells, nodes[0])
    store = np.zeros(nodes.size, bool)
    if len(store_x):
        store |= np.isin(nodes, np.asarray(store_x))
    f1, f2, fl, states = _sweep(pots, ells, nodes, y1, y2, log, store=store)
    s = np.empty((ells.size, len(pots)), complex)
    b = np.empty_like(s)
    logb = np.empty((ells.size, len(pots)))
    flag = np.zeros((ells.size, len(pots)), bool)
    for w, p in enumerate(pots):
        s[:, w], b[:, w], logb[:, w], flag[:, w] = _match(f1[w], f2[w], fl[w], ells,
                                                          p.eta, p.kappa, xa)
    out = {"s": s, "b": b, "log_b": logb, "flag": flag}
    if return_states:
        out["nodes"] = nodes
        out["store_mask"] = store
        out["states"] = states
    return out


def reference_solutions(pots, ells, radii, *, sign=1, resolution=2):
    """Continuation of ``H+`` (``sign=1``) or ``H-`` inward to ``radii`` (SI).

    Returns ``(psi, dpsi, log)`` with shape (n_r, n_l, n_w); ``psi`` is the
    solution that equals ``H+-(eta, k r)`` for ``r >= R_a``.
    """
    pots = _pots_list(pots)
    ells = np.asarray(ells, int)
    Ru = pots[0].R_unit
    xs = np.asarray(radii, float) / Ru
    xa = pots[0].x_a
    x_start = max(xa, float(xs.max()))
    lo = float(xs.min())
    if lo >= x_start:
        nodes = np.array([x_start])
    else:
        full = make_grid(pots, x_start, extra=tuple(xs), resolution=resolution,
                         ell_max=int(np.max(ells)))
        nodes = full[full >= lo * (1 - 1e-15)]
    y1 = np.empty((len(pots), ells.size), complex)
    y2 = np.empty_like(y1)
    lg = np.empty((len(pots), ells.size))
    for w, p in enumerate(pots):
        y1[w], y2[w], lg[w] = _hplus_state(ells, p.eta, p.kappa, x_start, sign)
    store = np.isin(nodes, xs)
    if nodes.size == 1:
        o1, o2, ol = y1[None], y2[None], lg[None]
    else:
        *_, (o1, o2, ol) = _sweep(pots, ells, nodes, y1, y2, lg, inward=True, store=store)
    order = np.searchsorted(nodes[store], xs)
    return (o1[order].transpose(0, 2, 1), o2[order].transpose(0, 2, 1),
            ol[order].transpose(0, 2, 1))


def greens_diagonals(pots, ells, radii, *, resolution=2):
    """``G_l(r, r)`` (SI, complex) with shape (n_r, n_l, n_w).

    Uses ``-phi(r) psi+(r) / [phi, psi+](r)`` with both solutions
    integrated numerically.
    """
    pots = _pots_list(pots)
    ells = np.asarray(ells, int)
    Ru = pots[0].R_unit
    xs = np.asarray(radii, float) / Ru
    x_far = max(pots[0].x_a, float(xs.max()))
    nodes = make_grid(pots, x_far, extra=tuple(xs), resolution=resolution,
                      ell_max=int(ells.max()))
    store = np.isin(nodes, xs)
    y1, y2, log = _regular_start(pots, ells, nodes[0])
    *_, (p1, p2, pl) = _sweep(pots, ells, nodes, y1, y2, log, store=store)
    h1 = np.empty((len(pots), ells.size), complex)
    h2 = np.empty_like(h1)
    hl = np.empty((len(pots), ells.size))
    for w, p in enumerate(pots):
        h1[w], h2[w], hl[w] = _hplus_state(ells, p.eta, p.kappa, x_far)
    sub = nodes >= xs.min() * (1 - 1e-15)
    *_, (q1, q2, ql) = _sweep(pots, ells, nodes[sub], h1, h2, hl, inward=True,
                              store=store[sub])
    order = np.searchsorted(nodes[store], xs)
    p1, p2, pl = p1[order], p2[order], pl[order]
    q1, q2, ql = q1[order], q2[order], ql[order]
    W = p1 * q2 - p2 * q1
    G = -p1 * q1 / W * Ru  # log scales cancel at coincident points
    return G.transpose(0, 2, 1)
