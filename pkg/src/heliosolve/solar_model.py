"""Solar parameter profiles and their map to Schroedinger data.

A :class:`SolarModel` holds tabulated sound speed, density and attenuation
on a radial grid together with the constants of the isothermal upper
atmosphere.  Smooth representations are built from even (mirrored) cubic
splines of ``1/c^2``, ``gamma`` and ``ln rho - B`` so that

    v = k^2 - sigma^2/c^2 + rho^{1/2} Laplacian(rho^{-1/2}),
    sigma^2 = omega^2 + 2 i omega gamma,

can be evaluated anywhere in ``(0, R_a]``.  With ``L = ln rho`` the density
term is ``L'^2/4 - L''/2 - L'/r``.  ``B`` is an even C^3 function equal to the
atmospheric exponent ``ln rho0 - (r - R_a)/H`` on the outer half of the
radius range, so the splined remainder vanishes identically in the
atmosphere and the potential meets ``alpha/r`` at ``R_a`` to rounding.

Radial work elsewhere in the package is done in scaled units: ``x = r/R_sun``,
``kappa = k R_sun`` and ``vhat = v R_sun^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "ModelError",
    "BelowCutoffError",
    "Atmosphere",
    "SolarModel",
    "PotentialProfile",
    "free_potential",
    "InversionUnknowns",
    "REFERENCE_ATMOSPHERE",
    "load_background",
    "save_background",
    "wavenumber",
    "potential_from_model",
    "unknowns_from_model",
    "synthetic_background",
    "perturbed_model",
    "bump",
    "compressed_model",
    "to_internal",
    "from_internal",
]

MODEL_HEADER = "# heliosolve-model v1"


class ModelError(ValueError):
    """Invalid model data; ``code`` names the failing constraint."""

    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class BelowCutoffError(ModelError):
    def __init__(self, omega, cutoff):
        super().__init__("below-cutoff",
                         f"omega={float(omega)!r} rad/s does not exceed c0/(2H)={float(cutoff)!r}")


@dataclass(frozen=True)
class Atmosphere:
    """Constants of the exponential upper atmosphere (SI units)."""

    c0: float = 6855.0
    rho0: float = 2.886e-6
    H: float = 1.25e5
    h_a: float = 5.0e5
    R_sun: float = 6.957e8

    @property
    def R_a(self):
        return self.R_sun + self.h_a

    @property
    def alpha(self):
        """Coulomb tail coefficient ``1/H``."""
        return 1.0 / self.H

    @property
    def cutoff(self):
        """Acoustic cutoff ``c0/(2H)`` in rad/s."""
        return self.c0 / (2.0 * self.H)

    def rho_atm(self, r):
        return self.rho0 * np.exp(-(np.asarray(r, float) - self.R_a) / self.H)


REFERENCE_ATMOSPHERE = Atmosphere()


def _even_spline(x, y):
    """Cubic spline of ``y(x)`` made even about ``x = 0``."""
    if x[0] == 0.0:
        xe = np.concatenate([-x[:0:-1], x])
        ye = np.concatenate([y[:0:-1], y])
    else:
        xe = np.concatenate([-x[::-1], x])
        ye = np.concatenate([y[::-1], y])
    return CubicSpline(xe, ye, bc_type="not-a-knot")


def _base_coeffs(xb):
    """Even sextic ``q`` with ``q = x`` to third order at ``xb``."""
    A = np.array([[1, xb ** 2, xb ** 4, xb ** 6],
                  [0, 2 * xb, 4 * xb ** 3, 6 * xb ** 5],
                  [0, 2, 12 * xb ** 2, 30 * xb ** 4],
                  [0, 0, 24 * xb, 120 * xb ** 3]], dtype=float)
    return np.linalg.solve(A, np.array([xb, 1.0, 0.0, 0.0]))


class _LogDensityBase:
    """``B(x) = ln rho0 - a (q(x) - x_a)`` with ``q(x) = x`` for ``x >= xb``."""

    def __init__(self, ln_rho0, a, xa, xb):
        self.ln_rho0, self.a, self.xa, self.xb = ln_rho0, a, xa, xb
        self.c = _base_coeffs(xb)

    def __call__(self, x, nu=0):
        x = np.asarray(x, float)
        c0, c2, c4, c6 = self.c
        x2 = x * x
        if nu == 0:
            q = np.where(x >= self.xb, x, c0 + x2 * (c2 + x2 * (c4 + x2 * c6)))
            return self.ln_rho0 - self.a * (q - self.xa)
        if nu == 1:
            q = np.where(x >= self.xb, 1.0, x * (2 * c2 + x2 * (4 * c4 + 6 * c6 * x2)))
        else:
            q = np.where(x >= self.xb, 0.0, 2 * c2 + x2 * (12 * c4 + 30 * c6 * x2))
        return -self.a * q


@dataclass(frozen=True, eq=False)
class SolarModel:
    """Tabulated solar profiles with the atmospheric extension.

    Values at ``r >= R_a`` are overwritten by the atmosphere on
    construction.  Arrays are copied and made read-only.
    """

    grid_r: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    gamma: np.ndarray
    c0: float = REFERENCE_ATMOSPHERE.c0
    rho0: float = REFERENCE_ATMOSPHERE.rho0
    H: float = REFERENCE_ATMOSPHERE.H
    h_a: float = REFERENCE_ATMOSPHERE.h_a
    R_sun: float = REFERENCE_ATMOSPHERE.R_sun
    check_interface: bool = field(default=True, repr=False)

    def __post_init__(self):
        r = np.array(self.grid_r, dtype=float)
        c = np.array(self.c, dtype=float)
        rho = np.array(self.rho, dtype=float)
        gamma = np.array(self.gamma, dtype=float)
        if not (r.shape == c.shape == rho.shape == gamma.shape) or r.ndim != 1:
            raise ModelError("shape", "grid_r, c, rho, gamma must be 1-D of equal length")
        if r.size < 3:
            raise ModelError("shape", "at least three grid points are required")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise ModelError("grid", "grid_r must be non-negative and strictly increasing")
        for name, val in (("c0", self.c0), ("rho0", self.rho0), ("H", self.H),
                          ("h_a", self.h_a), ("R_sun", self.R_sun)):
            if not (val > 0 and math.isfinite(val)):
                raise ModelError("constant", f"{name} must be positive, got {val!r}")
        atm = self.atmosphere
        if r[-1] < atm.R_a:
            raise ModelError("grid", f"grid must reach R_a={float(atm.R_a)!r} m, ends at {float(r[-1])!r}")
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            i = int(np.argmax(~np.isfinite(c) | (c <= 0)))
            raise ModelError("non-positive-sound-speed", f"c <= 0 at r={float(r[i])!r}")
        if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
            i = int(np.argmax(~np.isfinite(rho) | (rho <= 0)))
            raise ModelError("non-positive-density", f"rho <= 0 at r={float(r[i])!r}")
        if np.any(~np.isfinite(gamma)):
            raise ModelError("gamma", "attenuation must be finite")
        if self.check_interface:
            rho_ra = float(np.interp(atm.R_a, r, rho))
            if abs(rho_ra / self.rho0 - 1.0) > 0.01:
                raise ModelError("interface-density",
                                 f"rho(R_a)={float(rho_ra)!r} differs from rho0={float(self.rho0)!r} by more than 1%")
        top = r >= atm.R_a
        c[top] = self.c0
        rho[top] = atm.rho_atm(r[top])
        gamma[top] = 0.0
        for name, val in (("grid_r", r), ("c", c), ("rho", rho), ("gamma", gamma)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def atmosphere(self) -> Atmosphere:
        return Atmosphere(self.c0, self.rho0, self.H, self.h_a, self.R_sun)

    @property
    def R_a(self):
        return self.R_sun + self.h_a

    # smooth representations in scaled radius x = r / R_sun
    @cached_property
    def _log_base(self):
        xa = self.R_a / self.R_sun
        return _LogDensityBase(math.log(self.rho0), self.R_sun / self.H, xa, 0.5 * xa)

    @cached_property
    def _splines(self):
        x = self.grid_r / self.R_sun
        base = self._log_base
        # (r - R_a)/H in SI avoids the rounding of a*x (a ~ R/H) in B
        outer = x >= base.xb
        rem = np.where(outer,
                       np.log(self.rho) - math.log(self.rho0) + (self.grid_r - self.R_a) / self.H,
                       np.log(self.rho) - base(x))
        rem[self.grid_r >= self.R_a] = 0.0
        return (_even_spline(x, 1.0 / self.c ** 2),
                _even_spline(x, self.gamma),
                _even_spline(x, rem))

    @property
    def knots(self):
        """Scaled spline knots ``x`` up to and including ``x_a``."""
        x = self.grid_r / self.R_sun
        xa = self.R_a / self.R_sun
        x = x[(x > 0) & (x < xa)]
        return np.append(x, xa)

    def profiles(self, x):
        """Scaled coefficient profiles at ``x`` (any shape, ``0 < x <= x_a``).

        Returns ``(inv_c2, gam_c2, dens)`` with ``inv_c2 = R^2/c^2`` in
        ``s^2``, ``gam_c2 = R^2 gamma/c^2`` in ``s`` and
        ``dens = R^2 rho^{1/2} Lap rho^{-1/2}`` (dimensionless), so that
        ``vhat = kappa^2 - omega^2 inv_c2 - 2i omega gam_c2 + dens``.
        Points above ``x_a`` get the atmospheric values.
        """
        x = np.asarray(x, dtype=float)
        s_ic2, s_gam, s_lr = self._splines
        R = self.R_sun
        xa = self.R_a / R
        ic2 = s_ic2(x)
        gam = s_gam(x)
        L1 = s_lr(x, 1) + self._log_base(x, 1)
        L2 = s_lr(x, 2) + self._log_base(x, 2)
        dens = 0.25 * L1 * L1 - 0.5 * L2 - L1 / x
        top = x >= xa
        if np.any(top):
            a = R / self.H
            ic2 = np.where(top, 1.0 / self.c0 ** 2, ic2)
            gam = np.where(top, 0.0, gam)
            dens = np.where(top, 0.25 * a * a + a / np.where(top, x, 1.0), dens)
        return ic2 * R * R, gam * ic2 * R * R, dens

    def sound_speed(self, r):
        return 1.0 / np.sqrt(self._splines[0](np.asarray(r, float) / self.R_sun))

    def density(self, r):
        x = np.asarray(r, float) / self.R_sun
        return np.exp(self._splines[2](x) + self._log_base(x))

    def attenuation(self, r):
        return self._splines[1](np.asarray(r, float) / self.R_sun)

    def replace_profiles(self, c=None, rho=None, gamma=None):
        return SolarModel(self.grid_r, self.c if c is None else c,
                          self.rho if rho is None else rho,
                          self.gamma if gamma is None else gamma,
                          self.c0, self.rho0, self.H, self.h_a, self.R_sun,
                          self.check_interface)


@dataclass(frozen=True, eq=False)
class PotentialProfile:
    """Schroedinger data ``(k, v)`` at one frequency.

    The potential is evaluated in scaled units by :meth:`vhat` (``x = r/R_unit``,
    ``vhat = R_unit^2 v``).  Inside ``x_a`` it comes from ``model`` when one
    is attached, otherwise from the callable ``interior`` (zero if absent);
    for ``x >= x_a`` it is ``alpha/r``.  ``perturbation`` is an optional
    callable ``x -> delta vhat`` added inside ``x_a`` (used by the
    inversion).  ``breaks`` lists scaled radii where the potential is not
    smooth; radial grids put nodes there.
    """

    k: float
    alpha: float
    R_a: float
    omega: float = float("nan")
    model: SolarModel | None = None
    R_unit: float = 1.0
    interior: object = None
    perturbation: object = None
    breaks: tuple = ()

    @property
    def kappa(self):
        return self.k * self.R_unit

    @property
    def eta(self):
        return self.alpha / (2.0 * self.k)

    @property
    def x_a(self):
        return self.R_a / self.R_unit

    @property
    def knots(self):
        pts = [] if self.model is None else list(self.model.knots)
        pts.extend(self.breaks)
        return np.unique(np.asarray(pts + [self.x_a], dtype=float))

    def with_perturbation(self, fn, breaks=()):
        return PotentialProfile(self.k, self.alpha, self.R_a, self.omega, self.model,
                                self.R_unit, self.interior, fn,
                                tuple(self.breaks) + tuple(breaks))

    def vhat(self, x):
        """Scaled potential ``R_unit^2 v`` at scaled radius ``x``."""
        x = np.asarray(x, dtype=float)
        inside = x < self.x_a
        if self.model is not None:
            ic2, gc2, dens = self.model.profiles(x)
            w = self.omega
            out = self.kappa ** 2 - w * w * ic2 - 2j * w * gc2 + dens
        elif self.interior is not None:
            out = np.asarray(self.interior(x), dtype=complex) + np.zeros(x.shape)
        else:
            out = np.zeros(x.shape, complex)
        if self.perturbation is not None:
            out = out + np.where(inside, self.perturbation(x), 0.0)
        tail = self.alpha * self.R_unit / np.where(inside, 1.0, x)
        return np.where(inside, out, tail)

    def v(self, r):
        """Potential in SI units at radius ``r`` (m)."""
        return self.vhat(np.asarray(r, float) / self.R_unit) / self.R_unit ** 2


def free_potential(k, R_a=1.0, alpha=0.0, interior=None, R_unit=1.0):
    """Potential without a solar model (zero or ``interior`` inside ``R_a``)."""
    return PotentialProfile(k=k, alpha=alpha, R_a=R_a, model=None, R_unit=R_unit,
                            interior=interior)


@dataclass(frozen=True, eq=False)
class InversionUnknowns:
    """Profiles ``u1, u2, u3`` on a grid of the interval ``[A1, A2]`` (SI)."""

    interval: tuple
    grid: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray

    def stacked(self):
        return np.concatenate([self.u1, self.u2, self.u3])

    def __sub__(self, other):
        return InversionUnknowns(self.interval, self.grid, self.u1 - other.u1,
                                 self.u2 - other.u2, self.u3 - other.u3)


def to_internal(r, k, v, R_sun=REFERENCE_ATMOSPHERE.R_sun):
    """SI ``(r, k, v)`` to scaled ``(x, kappa, vhat)``."""
    return np.asarray(r) / R_sun, k * R_sun, np.asarray(v) * R_sun ** 2


def from_internal(x, kappa, vhat, R_sun=REFERENCE_ATMOSPHERE.R_sun):
    return np.asarray(x) * R_sun, kappa / R_sun, np.asarray(vhat) / R_sun ** 2


def wavenumber(model, omega: float) -> float:
    """``k = sqrt(omega^2/c0^2 - 1/(4H^2))`` above the acoustic cutoff."""
    c0, H = model.c0, model.H
    if not omega > c0 / (2.0 * H):
        raise BelowCutoffError(omega, c0 / (2.0 * H))
    return math.sqrt(omega * omega / (c0 * c0) - 1.0 / (4.0 * H * H))


def potential_from_model(model: SolarModel, omega: float, *,
                         check_tail=True) -> PotentialProfile:
    """Build the potential of the acoustic problem at frequency ``omega``."""
    k = wavenumber(model, omega)
    pot = PotentialProfile(k=k, alpha=1.0 / model.H, R_a=model.R_a, omega=omega,
                           model=model, R_unit=model.R_sun)
    vals = pot.vhat(model.knots)
    if not np.all(np.isfinite(vals)):
        raise ModelError("smoothness", "non-finite potential on the model grid")
    if check_tail:
        xa = model.R_a / model.R_sun
        inner = pot.vhat(np.array([xa * (1 - 1e-12)]))[0]
        tail = model.R_sun / model.H / xa
        if abs(inner - tail) > 1e-6 * abs(tail):
            raise ModelError("tail-mismatch",
                             f"v(R_a-)={complex(inner / model.R_sun ** 2)!r} differs from alpha/R_a")
    return pot


def _u_profiles(model, r):
    x = np.asarray(r, float) / model.R_sun
    ic2, gc2, dens = model.profiles(x)
    R2 = model.R_sun ** 2
    u1 = 1.0 / model.c0 ** 2 - ic2 / R2
    u2 = dens / R2 - 1.0 / (4.0 * model.H ** 2)
    u3 = gc2 / R2
    return u1, u2, u3


def unknowns_from_model(model: SolarModel, background: SolarModel, interval,
                        n_grid: int = 200, *, check_support=True) -> InversionUnknowns:
    """Sample ``u = (u1, u2, u3)`` of ``model`` on a uniform grid of ``interval``.

    The support condition is checked on the tabulated values: outside
    ``interval`` the two models must agree to 1e-10 relative.
    """
    A1, A2 = map(float, interval)
    if not (0 < A1 < A2 <= model.R_sun * (1 + 1e-12)):
        raise ModelError("interval", f"[A1, A2]=[{A1}, {A2}] must lie in (0, R_sun]")
    if check_support:
        if model.grid_r.shape != background.grid_r.shape or np.any(model.grid_r != background.grid_r):
            raise ModelError("support-violation", "model and background grids differ")
        out = (model.grid_r < A1) | (model.grid_r > A2)
        for name in ("c", "rho", "gamma"):
            a = getattr(model, name)[out]
            b = getattr(background, name)[out]
            scale = np.maximum(np.abs(b), 1e-300 if name != "gamma" else np.max(np.abs(b)) + 1e-300)
            if np.any(np.abs(a - b) > 1e-10 * scale):
                raise ModelError("support-violation", f"{name} differs outside [A1, A2]")
    grid = np.linspace(A1, A2, n_grid)
    u1, u2, u3 = _u_profiles(model, grid)
    return InversionUnknowns((A1, A2), grid, u1, u2, u3)


# ---------------------------------------------------------------------------
# model files

def save_background(model: SolarModel, path) -> None:
    """Write ``model`` in the column format read by :func:`load_background`.

    Floats are written with ``repr`` so that a round trip is bit-identical.
    """
    lines = [MODEL_HEADER,
             f"# c0={float(model.c0)!r} rho0={float(model.rho0)!r} H={float(model.H)!r} "
             f"h_a={float(model.h_a)!r} R_sun={float(model.R_sun)!r}",
             "# r c rho gamma"]
    for row in zip(model.grid_r, model.c, model.rho, model.gamma):
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_background(path, atmosphere: Atmosphere | None = None) -> SolarModel:
    """Read a model table.

    Comment lines start with ``#``; the first line must be the version
    header.  A ``# c0=... rho0=...`` comment line, if present, supplies the
    atmospheric constants unless ``atmosphere`` is given explicitly.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_HEADER:
        raise ModelError("parse", f"line 1: expected header {MODEL_HEADER!r}")
    consts = {}
    rows = []
    for num, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            for tok in s[1:].split():
                if "=" in tok:
                    key, _, val = tok.partition("=")
                    if key in ("c0", "rho0", "H", "h_a", "R_sun"):
                        try:
                            consts[key] = float(val)
                        except ValueError:
                            raise ModelError("parse", f"line {num}: bad value for {key}") from None
            continue
        parts = s.split()
        if len(parts) != 4:
            raise ModelError("parse", f"line {num}: expected 4 columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ModelError("parse", f"line {num}: non-numeric entry") from None
    if not rows:
        raise ModelError("parse", "no data lines")
    data = np.array(rows)
    if np.any(np.diff(data[:, 0]) <= 0):
        i = int(np.argmax(np.diff(data[:, 0]) <= 0))
        raise ModelError("grid", f"radius not strictly increasing at data row {i + 2}")
    atm = atmosphere or Atmosphere(**{**REFERENCE_ATMOSPHERE.__dict__, **consts})
    return SolarModel(data[:, 0], data[:, 1], data[:, 2], data[:, 3],
                      atm.c0, atm.rho0, atm.H, atm.h_a, atm.R_sun)


# ---------------------------------------------------------------------------
# synthetic models

def _smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _synthetic_grid(atm, n_inner):
    R = atm.R_sun
    inner = np.linspace(0.0, 0.96 * R, n_inner)
    # graded spacing towards the photosphere, 5 km steps near and above it
    depth = np.geomspace(0.04 * R, 1.0e6, 120)
    near = np.arange(R - 1.0e6, atm.R_a + 1.0e5 + 1.0, 5.0e3)
    r = np.unique(np.concatenate([inner, R - depth, near]))
    return r


def synthetic_background(atmosphere: Atmosphere = REFERENCE_ATMOSPHERE, *,
                         gamma0=2 * math.pi * 102.5e-6, K=8.0e10,
                         poly_index=1.5, n_inner=961) -> SolarModel:
    """Smooth stand-in for a standard solar model with the given atmosphere.

    * ``c^2 = c0^2 + K (x_s^2 - x^2)/(x^2 + 1/4)`` below the photosphere,
      ``c = c0`` above (``x = r/R_sun``, ``x_s = 1``); near the surface this
      is the polytropic ``c^2 ~ 184 m/s^2 * depth``.
    * ``ln rho`` is the atmospheric exponential above ``R_sun`` and
      ``n ln(1 + g(D))`` below, ``D = (R_sun^2 - r^2)/(2 R_sun)``, with ``g``
      quadratic and chosen so that ``ln rho`` is C^2 at ``R_sun`` (so the
      potential is continuous).
    * ``gamma = gamma0`` inside and decays to zero across ``[R_sun, R_a]``
      with a quintic smoothstep.
    """
    atm = atmosphere
    r = _synthetic_grid(atm, n_inner)
    R = atm.R_sun
    x = r / R
    c2 = atm.c0 ** 2 + K * np.maximum(1.0 - x * x, 0.0) / (x * x + 0.25)
    n = poly_index
    H = atm.H
    D = np.maximum((R * R - r * r) / (2.0 * R), 0.0)
    g = D / (n * H) + 0.5 * D * D * (1.0 / (n * n * H * H) + 1.0 / (n * H * R))
    ln_rho_s = math.log(atm.rho0) + atm.h_a / H
    ln_rho = np.where(r >= R, math.log(atm.rho0) - (r - atm.R_a) / H,
                      ln_rho_s + n * np.log1p(g))
    gamma = gamma0 * (1.0 - _smoothstep5((r - R) / atm.h_a))
    return SolarModel(r, np.sqrt(c2), np.exp(ln_rho), gamma,
                      atm.c0, atm.rho0, atm.H, atm.h_a, atm.R_sun)


def bump(r, center, half_width):
    """Compact C^3 bump ``(1 - t^2)^4`` with ``t = (r - center)/half_width``."""
    t = (np.asarray(r, float) - center) / half_width
    return np.where(np.abs(t) < 1.0, (1.0 - t * t) ** 4, 0.0)


def perturbed_model(background: SolarModel, *, dc=0.0, drho=0.0, dgamma=0.0,
                    center=None, half_width=None) -> SolarModel:
    """Background with bump perturbations on ``center +- half_width``.

    ``dc`` and ``drho`` are relative amplitudes, ``dgamma`` is absolute
    (rad/s).  Defaults centre the bump on ``[0.9, 0.95] R_sun``.
    """
    R = background.R_sun
    center = 0.925 * R if center is None else center
    half_width = 0.025 * R if half_width is None else half_width
    b = bump(background.grid_r, center, half_width)
    return background.replace_profiles(c=background.c * (1.0 + dc * b),
                                       rho=background.rho * (1.0 + drho * b),
                                       gamma=background.gamma + dgamma * b)


def compressed_model(model: SolarModel, factor: float = 100.0) -> SolarModel:
    """Shrink all lengths by ``factor`` keeping sound speeds.

    Frequencies scale up by ``factor`` and ``k r`` is unchanged, so a
    compressed run at ``factor * omega`` reproduces the original phases.
    Attenuation rates scale with frequency.
    """
    return SolarModel(model.grid_r / factor, model.c, model.rho, model.gamma * factor,
                      model.c0, model.rho0, model.H / factor, model.h_a / factor,
                      model.R_sun / factor, model.check_interface)
