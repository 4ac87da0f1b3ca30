"""Forward map, Jacobian and IRGNM reconstruction of ``u = (u1, u2, u3)``.

The potential at frequency ``w`` is ``v = w^2 u1 + u2 - 2i w u3``.  The
unknown is the perturbation ``du = u - u_background`` on a uniform grid of
``I = [A1, A2]``, expanded in piecewise-linear hat functions.  Internally
the coefficients are measured in units of the scaled potential
``vhat = R^2 v``:

    p1 = R^2 w_ref^2 du1,   p2 = R^2 du2,   p3 = 2 R^2 w_ref du3,

with ``w_ref`` the largest frequency, so all three blocks have comparable
size.  Outside ``I`` the potential equals the background, so the regular
solution at ``A1`` and the transfer matrix from ``A2`` to ``R_a`` are
computed once; each forward evaluation only integrates across ``I``.

The default Jacobian is the first-order perturbation formula

    ds = -1/(2i kappa b^2) int dvhat phi^2 dx,

evaluated with Simpson's rule on the integration nodes; finite differences
are available for checking.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.linalg import solve_banded

from . import radial
from .recover import ScatteringTable
from .solar_model import (InversionUnknowns, SolarModel, _u_profiles, potential_from_model,
                          unknowns_from_model, wavenumber)

__all__ = [
    "InversionError",
    "ForwardConfig",
    "IrgnmConfig",
    "ReconstructionResult",
    "ForwardOperator",
    "forward",
    "jacobian",
    "irgnm",
    "recover_parameters",
    "relative_l2_error",
    "cell_weights",
    "noise_level",
    "PARAMS",
    "JacobianWarning",
]

PARAMS = ("c", "rho", "gamma")


class JacobianWarning(RuntimeWarning):
    """Finite-difference Jacobian failed the step-halving check."""


class InversionError(ArithmeticError):
    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True, eq=False)
class ForwardConfig:
    """Setup of the forward map ``u -> s`` (SI interval, rad/s frequencies)."""

    interval: tuple
    n_grid: int
    ell_max: int
    omegas: np.ndarray
    background: SolarModel
    resolution: int = 4
    h_dense: float = 2.5e-4

    def __post_init__(self):
        A1, A2 = map(float, self.interval)
        R = self.background.R_sun
        if not (0 < A1 < A2 <= R * (1 + 1e-12)):
            raise InversionError("interval", f"[{A1}, {A2}] must lie in (0, R_sun]")
        if int(self.n_grid) < 4:
            raise InversionError("n_grid", "n_grid must be at least 4")
        w = np.atleast_1d(np.asarray(self.omegas, float))
        if w.size < 2:
            raise InversionError("omegas", "at least two frequencies are required")
        for om in w:
            wavenumber(self.background, float(om))
        object.__setattr__(self, "interval", (A1, A2))
        object.__setattr__(self, "omegas", w)

    @property
    def grid(self):
        return np.linspace(self.interval[0], self.interval[1], int(self.n_grid))

    @property
    def ells(self):
        return np.arange(int(self.ell_max) + 1)


@dataclass(frozen=True)
class IrgnmConfig:
    """Parameters of the iteratively regularised Gauss-Newton method."""

    alpha0: float | None = None
    q_factor: float = 2.0 / 3.0
    max_outer: int = 20
    tau_discrepancy: float = 1.5
    fd_step: float = 1e-7
    weight_mode: str = "inverse_condition"
    free_params: tuple = PARAMS
    jacobian: str = "analytic"
    rtol: float = 1e-8  # relative residual treated as the forward-solver floor

    def __post_init__(self):
        if self.alpha0 is not None and not self.alpha0 > 0:
            raise InversionError("config", "alpha0 must be positive")
        if not 0 < self.q_factor < 1:
            raise InversionError("config", "q_factor must lie in (0, 1)")
        if int(self.max_outer) < 1:
            raise InversionError("config", "max_outer must be >= 1")
        if not self.tau_discrepancy > 1:
            raise InversionError("config", "tau_discrepancy must exceed 1")
        if self.weight_mode not in ("uniform", "inverse_condition"):
            raise InversionError("config", f"unknown weight_mode {self.weight_mode!r}")
        if not self.free_params or any(p not in PARAMS for p in self.free_params):
            raise InversionError("config", f"free_params must be a subset of {PARAMS}")
        if self.jacobian not in ("analytic", "fd"):
            raise InversionError("config", f"unknown jacobian mode {self.jacobian!r}")
        if not self.rtol >= 0:
            raise InversionError("config", "rtol must be non-negative")


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    u: InversionUnknowns
    model: SolarModel
    errors: dict | None
    history: list
    params: np.ndarray
    stopped_by: str
    alphas: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# forward operator

def _hat_interp(grid_x, values, x):
    """Piecewise-linear interpolation, zero outside ``[grid_x[0], grid_x[-1]]``."""
    return np.interp(x, grid_x, values, left=0.0, right=0.0)


class ForwardOperator:
    """Cached forward map on a fixed configuration."""

    def __init__(self, cfg: ForwardConfig):
        self.cfg = cfg
        bg = cfg.background
        self.R = bg.R_sun
        self.pots = [potential_from_model(bg, float(w)) for w in cfg.omegas]
        self.w_ref = float(np.max(cfg.omegas))
        self.ells = cfg.ells
        self.gx = cfg.grid / self.R
        xa = self.pots[0].x_a
        self.x_a = xa
        a, b = self.gx[0], self.gx[-1]
        nodes = radial.make_grid(self.pots, xa, extra=tuple(self.gx),
                                 resolution=cfg.resolution, dense=((a, b, cfg.h_dense),),
                                 ell_max=int(np.max(self.ells)))
        self.nodes = nodes
        i1 = int(np.searchsorted(nodes, a * (1 - 1e-15)))
        i2 = int(np.searchsorted(nodes, b * (1 - 1e-15)))
        self.i1, self.i2 = i1, i2
        self.inodes = nodes[i1:i2 + 1]
        y1, y2, lg = radial._regular_start(self.pots, self.ells, nodes[0])
        self.start = radial._sweep(self.pots, self.ells, nodes[:i1 + 1], y1, y2, lg)[:3]
        shape = (len(self.pots), self.ells.size)
        one, zero = np.ones(shape, complex), np.zeros(shape, complex)
        tail = nodes[i2:]
        self.T1 = radial._sweep(self.pots, self.ells, tail, one, zero, np.zeros(shape))[:3]
        self.T2 = radial._sweep(self.pots, self.ells, tail, zero, one, np.zeros(shape))[:3]
        self.quad = self._quadrature_matrix()
        g = bg.attenuation(cfg.grid)
        self.gamma_bg = g
        self.u0 = unknowns_from_model(bg, bg, cfg.interval, int(cfg.n_grid), check_support=False)

    # unit conversions ------------------------------------------------------
    def to_params(self, du):
        """``(3, n)`` SI perturbation -> internal coefficients."""
        R2, w = self.R ** 2, self.w_ref
        return np.array([R2 * w * w * du[0], R2 * du[1], 2.0 * R2 * w * du[2]])

    def from_params(self, p):
        R2, w = self.R ** 2, self.w_ref
        p = np.asarray(p, float).reshape(3, -1)
        return np.array([p[0] / (R2 * w * w), p[1] / R2, p[2] / (2.0 * R2 * w)])

    def coefficients(self, omega):
        """``dvhat = c1 p1 + c2 p2 + c3 p3`` at frequency ``omega``."""
        r = omega / self.w_ref
        return np.array([r * r, 1.0, -1j * r])

    def _quadrature_matrix(self):
        """``W[j, m]`` with ``sum_m W[j, m] f(x_m) = int hat_j f dx``."""
        xs, gx = self.inodes, self.gx
        Wq = np.zeros((gx.size, xs.size))
        for i in range(gx.size - 1):
            lo = int(np.searchsorted(xs, gx[i] * (1 - 1e-15)))
            hi = int(np.searchsorted(xs, gx[i + 1] * (1 - 1e-15)))
            seg = xs[lo:hi + 1]
            sw = simpson(np.eye(seg.size), x=seg, axis=-1)
            t = (seg - gx[i]) / (gx[i + 1] - gx[i])
            Wq[i, lo:hi + 1] += sw * (1 - t)
            Wq[i + 1, lo:hi + 1] += sw * t
        return Wq

    def perturbed_pots(self, p):
        p = np.asarray(p, float).reshape(3, -1)
        out = []
        for w, pot in zip(self.cfg.omegas, self.pots):
            vals = self.coefficients(w) @ p.astype(complex)
            fn = (lambda x, v=vals: _hat_interp(self.gx, v.real, x)
                  + 1j * _hat_interp(self.gx, v.imag, x))
            out.append(pot.with_perturbation(fn, breaks=tuple(self.gx)))
        return out

    def evaluate(self, p, *, states=False):
        """Scattering table for coefficients ``p`` (shape (3, n) or flat)."""
        pots = self.perturbed_pots(p)
        y1, y2, lg = self.start
        store = np.ones(self.inodes.size, bool) if states else None
        a, b, L, st = radial._sweep(pots, self.ells, self.inodes, y1, y2, lg, store=store)
        t11, t21, L1 = self.T1
        t12, t22, L2 = self.T2
        Lm = np.maximum(L1, L2)
        e1, e2 = np.exp(L1 - Lm), np.exp(L2 - Lm)
        f1 = a * t11 * e1 + b * t12 * e2
        f2 = a * t21 * e1 + b * t22 * e2
        fl = L + Lm
        n_l, n_w = self.ells.size, len(pots)
        s = np.empty((n_l, n_w), complex)
        bb = np.empty_like(s)
        logb = np.empty((n_l, n_w))
        flag = np.zeros((n_l, n_w), bool)
        for w, pot in enumerate(pots):
            s[:, w], bb[:, w], logb[:, w], flag[:, w] = radial._match(
                f1[w], f2[w], fl[w], self.ells, pot.eta, pot.kappa, self.x_a)
        if flag.any():
            l, w = np.argwhere(flag)[0]
            raise radial.DegenerateMatchingError(f"ell={self.ells[l]}, omega index {w}")
        if not states:
            return s
        return s, bb, logb, st

    def jacobian_full(self, p):
        """``ds/dp`` with shape (n_l, n_w, 3, n) and the table ``s``."""
        s, bb, logb, (o1, _, ol) = self.evaluate(p, states=True)
        # phi^2 / b^2 at the I nodes: (n_nodes, n_w, n_l)
        ratio = (o1 / bb.T[None]) ** 2 * np.exp(2.0 * (ol - logb.T[None]))
        M = np.einsum("jm,mwl->lwj", self.quad, ratio)
        J = np.empty((self.ells.size, len(self.pots), 3, self.gx.size), complex)
        for w, (om, pot) in enumerate(zip(self.cfg.omegas, self.pots)):
            pref = -1.0 / (2j * pot.kappa)
            for c, coef in enumerate(self.coefficients(om)):
                J[:, w, c, :] = pref * coef * M[:, w, :]
        return s, J


_OP_CACHE = {}


def _forward_op(cfg):
    """Operator for ``cfg``; the most recent one is kept."""
    op = _OP_CACHE.get(id(cfg))
    if op is None or op.cfg is not cfg:
        _OP_CACHE.clear()
        op = _OP_CACHE[id(cfg)] = ForwardOperator(cfg)
    return op


def forward(u: InversionUnknowns, cfg: ForwardConfig) -> ScatteringTable:
    """``F(u) = s`` for every ``(l <= ell_max, w)``."""
    op = _forward_op(cfg)
    _check_grid(u, cfg)
    p = op.to_params(np.array([u.u1, u.u2, u.u3]) - np.array([op.u0.u1, op.u0.u2, op.u0.u3]))
    s = op.evaluate(p)
    one = np.ones(s.shape)
    return ScatteringTable(cfg.ells, cfg.omegas, s, one, np.ones(s.shape, bool),
                           np.zeros(s.shape))


def _check_grid(u, cfg):
    if u.grid.size != int(cfg.n_grid) or not np.allclose(u.grid, cfg.grid, rtol=1e-13, atol=0):
        raise InversionError("grid", "unknowns are not on the configuration grid")


def _free_basis(op, free):
    """Matrix ``B`` (3n, m) mapping free coefficients to ``p``.

    A free sound speed with fixed attenuation also changes ``u3 = gamma/c^2``:
    ``du3 = -gamma du1``, i.e. ``p3 = -(2 gamma / w_ref) p1``.
    """
    n = op.gx.size
    blocks = []
    eye = np.eye(n)
    zero = np.zeros((n, n))
    for name in PARAMS:
        if name not in free:
            continue
        if name == "c":
            tie = zero if "gamma" in free else -np.diag(2.0 * op.gamma_bg / op.w_ref)
            blocks.append(np.vstack([eye, zero, tie]))
        elif name == "rho":
            blocks.append(np.vstack([zero, eye, zero]))
        else:
            blocks.append(np.vstack([zero, zero, eye]))
    return np.hstack(blocks)


def _split(z):
    z = np.asarray(z)
    return np.concatenate([z.real.ravel(), z.imag.ravel()])


def jacobian(u: InversionUnknowns, cfg: ForwardConfig, *, method="analytic", fd_step=1e-7,
             free_params=PARAMS, return_table=False):
    """Real Jacobian of ``F`` with respect to the free coefficients.

    Rows are ``[Re s; Im s]`` over cells ``(l, w)`` in C order; columns are
    the hat coefficients of the free parameters in internal units (see the
    module docstring).  ``method="fd"`` uses one-sided differences with step
    ``fd_step`` times the largest scaled background potential in ``I``.
    """
    op = _forward_op(cfg)
    _check_grid(u, cfg)
    du = np.array([u.u1 - op.u0.u1, u.u2 - op.u0.u2, u.u3 - op.u0.u3])
    p = op.to_params(du).ravel()
    B = _free_basis(op, free_params)
    if method == "analytic":
        s, Jc = op.jacobian_full(p)
        Jc = Jc.reshape(-1, 3 * op.gx.size) @ B
        J = np.vstack([Jc.real, Jc.imag])
    elif method == "fd":
        s = op.evaluate(p)
        h = fd_step * _potential_scale(op)
        base = _split(s)
        J = np.empty((base.size, B.shape[1]))
        for j in range(B.shape[1]):
            J[:, j] = (_split(op.evaluate(p + h * B[:, j])) - base) / h
        _step_halving_check(op, p, B, J, base, h)
    else:
        raise InversionError("config", f"unknown jacobian method {method!r}")
    return (J, s) if return_table else J


def _step_halving_check(op, p, B, J, base, h, tol=1e-2):
    """Warn when halving the step changes the largest column by more than ``tol``."""
    j = int(np.argmax(np.linalg.norm(J, axis=0)))
    half = (_split(op.evaluate(p + 0.5 * h * B[:, j])) - base) / (0.5 * h)
    ref = np.linalg.norm(half)
    if ref == 0 or not np.linalg.norm(J[:, j] - half) <= tol * ref:
        warnings.warn(f"finite-difference cancellation: column {j} changes under step halving",
                      JacobianWarning, stacklevel=3)


def _potential_scale(op):
    x = op.gx
    return float(max(np.max(np.abs(pot.vhat(x))) for pot in op.pots))


# ---------------------------------------------------------------------------
# IRGNM

def cell_weights(table: ScatteringTable, mode="inverse_condition"):
    """Per-cell weights ``min(1, 1/condition)`` (zero for invalid cells)."""
    if mode == "uniform":
        w = np.ones(table.s.shape)
    else:
        w = np.minimum(1.0, 1.0 / np.asarray(table.condition, float))
    return np.where(np.asarray(table.valid, bool) & np.isfinite(table.s), w, 0.0)


def noise_level(table: ScatteringTable, weights):
    """``delta = ||W^(1/2) sigma||`` from the per-cell standard deviations."""
    sig = getattr(table, "sigma", None)
    if sig is None:
        return 0.0
    var = np.nansum(np.asarray(sig, float) ** 2, axis=-1)
    return float(math.sqrt(np.sum(weights * np.where(np.isfinite(var), var, 0.0))))


def _smoothing(n, m_blocks, dx, width):
    """``L^T L`` for ``||p||^2 + width^2 ||p'||^2`` (per block, trapezoid-like)."""
    D = (np.eye(n, k=1) - np.eye(n))[:-1] / dx
    one = dx * np.eye(n) + dx * width ** 2 * D.T @ D
    return np.kron(np.eye(m_blocks), one)


def irgnm(data: ScatteringTable, cfg: ForwardConfig, icfg: IrgnmConfig = IrgnmConfig(), *,
          truth: SolarModel | None = None, delta: float | None = None,
          callback=None) -> ReconstructionResult:
    """Reconstruct ``u`` from scattering data.

    Stops by the discrepancy principle ``||W^(1/2) r|| <= tau delta`` when a
    noise level is known (``delta`` or ``data.sigma``), otherwise after
    ``max_outer`` steps or once the residual relative to the data norm falls
    below ``rtol``.
    """
    op = _forward_op(cfg)
    if data.s.shape != (cfg.ells.size, cfg.omegas.size):
        raise InversionError("data", "data table does not match the configuration")
    free = tuple(icfg.free_params)
    B = _free_basis(op, free)
    m = B.shape[1]
    W = cell_weights(data, icfg.weight_mode)
    sw = np.sqrt(np.concatenate([W.ravel(), W.ravel()]))
    target = np.where(W > 0, data.s, 0.0)
    if delta is None:
        delta = noise_level(data, W)
    n = op.gx.size
    LtL = _smoothing(n, m // n, op.gx[1] - op.gx[0], op.gx[-1] - op.gx[0])
    x = np.zeros(m)
    history, alphas = [], []
    stopped = "max_outer"
    rises = 0
    alpha = icfg.alpha0
    for it in range(int(icfg.max_outer) + 1):
        p = B @ x
        if icfg.jacobian == "analytic":
            s, Jc = op.jacobian_full(p)
            Jc = Jc.reshape(-1, 3 * n) @ B
            J = np.vstack([Jc.real, Jc.imag])
        else:
            s = op.evaluate(p)
            h = icfg.fd_step * _potential_scale(op)
            base = _split(s)
            J = np.empty((base.size, m))
            for j in range(m):
                J[:, j] = (_split(op.evaluate(p + h * B[:, j])) - base) / h
        r = sw * _split(np.where(W > 0, target - s, 0.0))
        res = float(np.linalg.norm(r))
        history.append(res)
        if callback is not None:
            callback(it, res, x)
        if it > 0 and history[-1] > history[-2]:
            rises += 1
            if rises >= 3:
                raise InversionError("divergence", f"residual increased 3 times (iteration {it})")
        else:
            rises = 0
        if delta > 0 and res <= icfg.tau_discrepancy * delta:
            stopped = "discrepancy"
            break
        scale0 = max(float(np.linalg.norm(_split(target) * sw)), 1e-300)
        if res <= icfg.rtol * scale0:
            stopped = "converged"
            break
        if it == int(icfg.max_outer):
            break
        Jw = sw[:, None] * J
        JtJ = Jw.T @ Jw
        if alpha is None:
            alpha = float(np.linalg.norm(JtJ, 2) / np.linalg.norm(LtL, 2))
        alphas.append(alpha)
        rhs = Jw.T @ r - alpha * (LtL @ x)
        try:
            step = np.linalg.solve(JtJ + alpha * LtL, rhs)
        except np.linalg.LinAlgError as exc:
            raise InversionError("linear-solve", str(exc)) from None
        x = x + step
        alpha *= icfg.q_factor
    p = B @ x
    du = op.from_params(p)
    u = InversionUnknowns(cfg.interval, cfg.grid, op.u0.u1 + du[0], op.u0.u2 + du[1],
                          op.u0.u3 + du[2])
    model = recover_parameters(u, cfg.background,
                               fixed=tuple(q for q in PARAMS if q not in free))
    errors = None
    if truth is not None:
        errors = parameter_errors(model, truth, cfg.background, cfg.grid)
    return ReconstructionResult(u, model, errors, history, p, stopped, alphas)


# ---------------------------------------------------------------------------
# parameters from u

def _density_bvp(r, q, w_a, w_b):
    """Second-order differences for ``-(w'' + 2w'/r) + q w = 0`` with Dirichlet ends."""
    h = r[1] - r[0]
    n = r.size
    ri = r[1:-1]
    lower = -1.0 / h ** 2 + 1.0 / (ri * h)   # coefficient of w_{i-1}
    diag = 2.0 / h ** 2 + q[1:-1]
    upper = -1.0 / h ** 2 - 1.0 / (ri * h)   # coefficient of w_{i+1}
    rhs = np.zeros(n - 2)
    rhs[0] -= lower[0] * w_a
    rhs[-1] -= upper[-1] * w_b
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    A = np.diag(diag) + np.diag(upper[:-1], 1) + np.diag(lower[1:], -1)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e12:
        raise InversionError("bvp-singular", f"density problem condition {cond:.3g}")
    w = np.empty(n)
    w[0], w[-1] = w_a, w_b
    w[1:-1] = solve_banded((1, 1), ab, rhs)
    return w


def _solve_density(u, background, reference="background"):
    """``rho`` from ``w = rho^(-1/2)`` solving ``-(w'' + 2w'/r) + (u2 + 1/(4H^2)) w = 0``.

    The same discrete problem is solved for the background's ``u2`` and the
    ratio of the two solutions is applied to the background density, so the
    discretisation error of the background itself cancels.  With
    ``reference="none"`` the plain solution ``w^-2`` is returned.
    """
    r = u.grid
    w_a = background.density(np.array([r[0]]))[0] ** -0.5
    w_b = background.density(np.array([r[-1]]))[0] ** -0.5
    shift = 1.0 / (4.0 * background.H ** 2)
    w = _density_bvp(r, u.u2 + shift, w_a, w_b)
    bad = np.flatnonzero(w <= 0)
    if bad.size:
        raise InversionError("positivity", f"rho^(-1/2) <= 0 at r={float(r[bad[0]])!r}")
    if reference == "none":
        return w ** -2
    u2_bg = _u_profiles(background, r)[1]
    w_bg = _density_bvp(r, u2_bg + shift, w_a, w_b)
    if np.any(w_bg <= 0):
        return w ** -2
    return background.density(r) * (w_bg / w) ** 2


def recover_parameters(u: InversionUnknowns, background: SolarModel, *,
                       fixed=(), density_reference="background") -> SolarModel:
    """``(c, rho, gamma)`` from ``u`` on ``I``; the background elsewhere.

    Parameters listed in ``fixed`` keep their background values.
    ``density_reference`` is ``"background"`` (cancel the discretisation
    error of the background density) or ``"none"``.
    """
    if density_reference not in ("background", "none"):
        raise InversionError("config", f"unknown density_reference {density_reference!r}")
    r = u.grid
    inv_c2 = 1.0 / background.c0 ** 2 - u.u1
    bad = np.flatnonzero(inv_c2 <= 0)
    if bad.size:
        raise InversionError("positivity", f"u1 >= 1/c0^2 at r={float(r[bad[0]])!r}")
    c = background.sound_speed(r) if "c" in fixed else inv_c2 ** -0.5
    gamma = background.attenuation(r) if "gamma" in fixed else u.u3 / inv_c2
    rho = background.density(r) if "rho" in fixed else _solve_density(u, background, density_reference)
    g = background.grid_r
    keep = (g < r[0]) | (g > r[-1])
    grid = np.concatenate([g[keep], r])
    order = np.argsort(grid)
    cat = lambda bgv, new: np.concatenate([bgv[keep], new])[order]  # noqa: E731
    return SolarModel(grid[order], cat(background.c, c), cat(background.rho, rho),
                      cat(background.gamma, gamma), background.c0, background.rho0,
                      background.H, background.h_a, background.R_sun)


def relative_l2_error(f, f_truth, grid):
    """``||f - f_truth|| / ||f_truth||`` in ``L^2`` by the trapezoid rule."""
    f, f_truth, grid = (np.asarray(a, float) for a in (f, f_truth, grid))
    den = math.sqrt(trapezoid(f_truth ** 2, grid))
    if den == 0:
        raise InversionError("zero-denominator", "reference profile vanishes on I")
    return math.sqrt(trapezoid((f - f_truth) ** 2, grid)) / den


def parameter_errors(model, truth, background, grid):
    """Relative ``L^2`` errors of the perturbations of ``c``, ``rho``, ``gamma``."""
    out = {}
    for name, get in (("c", "sound_speed"), ("rho", "density"), ("gamma", "attenuation")):
        b = getattr(background, get)(grid)
        d_true = getattr(truth, get)(grid) - b
        d_rec = getattr(model, get)(grid) - b
        try:
            out[name] = relative_l2_error(d_rec, d_true, grid)
        except InversionError:
            out[name] = None
    return out

