"""Green's function on a sphere from partial waves and back.

On the sphere of radius ``R`` the Green's function depends only on the
angle ``theta`` between its arguments:

    G(theta) = 1/(4 pi R^2) sum_l (2l+1) G_l(R, R) P_l(cos theta).

Since ``G_l(R, R) ~ R/(2l+1)`` the series converges slowly; the part
``R/(2l+1)`` sums to the kernel ``1/(4 pi R sqrt(2 - 2 cos theta))``.  The
remaining tail ``l > L_max`` is modelled by the WKB diagonal

    t_l = 1 / (2 sqrt((l + 1/2)^2/R^2 + v(R) - k^2)),

summed explicitly (with a smooth taper) up to ``TAIL_TERMS`` when ``k``
is known.  Extraction
subtracts the same kernel and tail, after which the remainder is a
polynomial of degree ``L_max`` in ``cos theta`` and Gauss-Legendre
quadrature recovers the coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .specfun import gauss_legendre, gauss_legendre_theta

__all__ = [
    "CircleSamples",
    "PartialWaveDiagonal",
    "MultipoleError",
    "ConvergenceWarning",
    "assemble_circle",
    "extract_partial_waves",
    "circle_thetas",
    "singular_kernel",
    "save_circle",
    "load_circle",
    "THETA_MIN",
    "TAIL_TERMS",
]

THETA_MIN = 1e-3
TAIL_TERMS = 40000


class MultipoleError(ValueError):
    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class PartialWaveDiagonal:
    """``G_l(R, R)`` for ``l = 0..L_max`` (SI units).

    ``k`` and ``v_R`` (potential at ``R``) select the WKB tail model; with
    ``k = None`` only the leading ``R/(2l+1)`` tail is used.
    """

    R: float
    values: np.ndarray
    k: float | None = None
    v_R: complex = 0.0

    @property
    def L_max(self):
        return self.values.size - 1

    def tail_check(self):
        """``|values[L] (2L+1)/R - 1|`` and whether it is below ``5/L``."""
        L = self.L_max
        dev = abs(self.values[L] * (2 * L + 1) / self.R - 1.0)
        return dev, bool(dev <= 5.0 / max(L, 1))


@dataclass(frozen=True, eq=False)
class CircleSamples:
    """Samples ``G(theta)`` on a great circle of radius ``R``."""

    R: float
    thetas: np.ndarray
    values: np.ndarray
    k: float | None = None
    v_R: complex = 0.0

    def __post_init__(self):
        t = np.asarray(self.thetas, float)
        if t.ndim != 1 or t.size != np.asarray(self.values).size:
            raise MultipoleError("shape", "thetas and values must be 1-D of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise MultipoleError("order", "thetas must be strictly ascending")


def circle_thetas(n):
    """Ascending angles whose cosines are the ``n`` Gauss-Legendre nodes."""
    return gauss_legendre_theta(n)[0]


def singular_kernel(R, thetas):
    """``1/(4 pi R sqrt(2 - 2 cos theta))`` (sum of the ``R/(2l+1)`` terms)."""
    t = np.asarray(thetas, float)
    return 1.0 / (4.0 * math.pi * R * 2.0 * np.sin(0.5 * t))


def _check_band(thetas, theta_min):
    t = np.asarray(thetas, float)
    if np.any(t < theta_min) or np.any(t > math.pi - theta_min):
        raise MultipoleError("excluded-angle",
                             f"angles must lie in [{theta_min}, pi - {theta_min}]")
    return t


def _wkb_tail(R, k, v_R, L, s, terms=TAIL_TERMS):
    """``1/(4 pi R^2) sum_{L<l<=terms} w_l (2l+1)(t_l - R/(2l+1)) P_l(s)``."""
    if k is None or terms <= L:
        return np.zeros(np.shape(s), complex)
    ell = np.arange(terms + 1, dtype=float)
    nu = ell + 0.5
    t = 0.5 / np.sqrt((nu / R) ** 2 + complex(v_R) - k * k + 0j)
    c = (2 * ell + 1) * t - R
    c[: L + 1] = 0.0
    # a cos^2 taper over the upper half avoids Gibbs ripple from truncation
    start = max(L + 1, terms // 2)
    ramp = np.clip((ell - start) / (terms - start), 0.0, 1.0)
    c *= np.cos(0.5 * math.pi * ramp) ** 2
    return npleg.legval(s, c) / (4.0 * math.pi * R * R)


def _tail_model(R, k, v_R, L, s, thetas):
    """Everything beyond ``l = L``: leading closed form plus WKB correction."""
    partial = npleg.legval(s, np.ones(L + 1))
    lead = singular_kernel(R, thetas) - partial / (4.0 * math.pi * R)
    return lead + _wkb_tail(R, k, v_R, L, s)


def assemble_circle(diag: PartialWaveDiagonal, thetas, *, theta_min=THETA_MIN,
                    warn_fraction=0.01) -> CircleSamples:
    """Sum the multipole series at ``thetas``.

    Emits :class:`ConvergenceWarning` when the tail beyond ``L_max``
    exceeds ``warn_fraction`` of a value.
    """
    t = _check_band(thetas, theta_min)
    s = np.cos(t)
    R, L = diag.R, diag.L_max
    ell = np.arange(L + 1)
    head = npleg.legval(s, (2 * ell + 1) * np.asarray(diag.values, complex))
    head = head / (4.0 * math.pi * R * R)
    tail = _tail_model(R, diag.k, diag.v_R, L, s, t)
    values = head + tail
    frac = np.abs(tail) / np.maximum(np.abs(values), 1e-300)
    if np.any(frac > warn_fraction):
        warnings.warn(f"multipole tail beyond l={L} reaches {frac.max():.2%} of the value",
                      ConvergenceWarning, stacklevel=2)
    return CircleSamples(R, t, values, diag.k, diag.v_R)


def extract_partial_waves(samples: CircleSamples, L_max: int, *,
                          theta_min=THETA_MIN) -> PartialWaveDiagonal:
    """Legendre projection with the singular kernel and tail subtracted.

    ``G_l = R/(2l+1) + 2 pi R^2 int_{-1}^{1} g(s) P_l(s) ds`` where ``g`` is
    the samples minus the kernel and the WKB tail beyond ``L_max``, a
    polynomial of degree ``L_max`` for band-limited input.  The samples must sit on Gauss-Legendre
    nodes in ``cos theta`` (see :func:`circle_thetas`) with at least
    ``2 L_max + 32`` nodes.
    """
    t = _check_band(samples.thetas, theta_min)
    n = t.size
    if n < 2 * L_max + 32:
        raise MultipoleError("aliasing", f"{n} nodes < 2*L_max+32 = {2 * L_max + 32}")
    nodes, weights = gauss_legendre(n)
    s = np.cos(t)
    order = np.argsort(s)
    if np.max(np.abs(s[order] - nodes)) > 1e-12:
        raise MultipoleError("nodes", "samples must lie on Gauss-Legendre nodes in cos(theta)")
    R = samples.R
    g = (np.asarray(samples.values, complex) - singular_kernel(R, t)
         - _wkb_tail(R, samples.k, samples.v_R, L_max, s))
    g = g[order]
    ell = np.arange(L_max + 1)
    # P_l at the nodes, one degree at a time to keep memory at O(n)
    out = np.empty(L_max + 1, complex)
    p0, p1 = np.ones(n), nodes.copy()
    wg = weights * g
    for l in ell:
        if l == 0:
            p = p0
        elif l == 1:
            p = p1
        else:
            p = ((2 * l - 1) * nodes * p1 - (l - 1) * p0) / l
            p0, p1 = p1, p
        out[l] = np.dot(wg, p)
    values = R / (2 * ell + 1) + 2.0 * math.pi * R * R * out
    return PartialWaveDiagonal(R, values, samples.k, samples.v_R)


def save_circle(path, samples: CircleSamples):
    """CSV with header ``# heliosolve-circle v1 R=<m>``."""
    extra = "" if samples.k is None else f" k={float(samples.k)!r} v_R={complex(samples.v_R)!r}"
    with open(path, "w") as fh:
        fh.write(f"# heliosolve-circle v1 R={float(samples.R)!r}{extra}\n")
        fh.write("theta_rad,re_G,im_G\n")
        for th, v in zip(samples.thetas, samples.values):
            fh.write(f"{float(th)!r},{float(v.real)!r},{float(v.imag)!r}\n")


def load_circle(path) -> CircleSamples:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# heliosolve-circle v1"):
        raise MultipoleError("format", f"{path}: line 1: missing heliosolve-circle header")
    meta = dict(tok.split("=", 1) for tok in lines[0].split()[3:])
    try:
        R = float(meta["R"])
        k = float(meta["k"]) if "k" in meta else None
        v_R = complex(meta.get("v_R", "0").strip("()"))
    except (KeyError, ValueError) as exc:
        raise MultipoleError("format", f"{path}: line 1: bad header ({exc})") from None
    if len(lines) < 2 or lines[1].replace(" ", "") != "theta_rad,re_G,im_G":
        raise MultipoleError("format", f"{path}: line 2: expected column names")
    th, vals = [], []
    for i, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        try:
            a, b, c = (float(x) for x in line.split(","))
        except ValueError:
            raise MultipoleError("format", f"{path}: line {i}: expected 3 numbers") from None
        th.append(a)
        vals.append(complex(b, c))
    return CircleSamples(R, np.array(th), np.array(vals), k, v_R)
