"""Scattering matrix elements from Im G at two observation radii.

With reference solutions ``psi+-`` (``H+-_l(eta, k r)`` continued inward
through the known background) the diagonal Green's function is

    G_l(r, r) = (i/2k) (psi- psi+ - s psi+^2)(r),

so every radius gives one real equation

    Re(s e^{i theta(r)}) = (Re(psi- psi+) - 2k Im G(r, r)) / |psi+|^2,
    theta = arg psi+^2.

Beyond ``R_a`` the references are Coulomb functions and the right-hand
side reduces to ``(|H+|^2 - 2k Im G)/|H+|^2``.  Two radii give a 2x2 system
with determinant ``sin(theta_2 - theta_1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import radial
from .observe import GreensDiagonal
from .solar_model import PotentialProfile, SolarModel, potential_from_model

__all__ = [
    "RecoverError",
    "ScatteringTable",
    "reference_phases",
    "extract_scattering",
    "singular_set_scan",
    "save_scattering",
    "load_scattering",
    "save_singular",
    "DET_MIN",
    "SCAN_THRESHOLD",
]

DET_MIN = 1e-6
SCAN_THRESHOLD = 1e-3


class RecoverError(ValueError):
    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True, eq=False)
class ScatteringTable:
    """``s[l, w]`` with ``condition = 1/|det|`` and a validity mask.

    ``sigma[l, w] = (std Re s, std Im s)`` when the input was noisy.
    """

    ells: np.ndarray
    omegas: np.ndarray
    s: np.ndarray
    condition: np.ndarray
    valid: np.ndarray
    residual: np.ndarray
    sigma: np.ndarray | None = None

    @property
    def ell_max(self):
        return int(self.ells[-1])


def _as_pots(model, omegas):
    if isinstance(model, PotentialProfile):
        return [model]
    return [potential_from_model(model, float(w)) for w in omegas]


def reference_phases(pots, ells, radii, reference="continued", resolution=8):
    """Products needed by the two-radius system.

    Returns ``(theta, a, abs2, log)`` with shape (n_r, n_l, n_w):
    ``theta = arg psi+^2``, ``a = Re(psi- psi+)/|psi+|^2`` and
    ``|psi+|^2 = abs2 * exp(log)``.
    """
    radii = np.atleast_1d(np.asarray(radii, float))
    ells = np.asarray(ells, int)
    if reference == "coulomb":
        shape = (radii.size, ells.size, len(pots))
        theta = np.empty(shape)
        a = np.empty(shape)
        abs2 = np.empty(shape)
        log = np.empty(shape)
        for w, p in enumerate(pots):
            for i, r in enumerate(radii):
                hp, _, lg = radial._hplus_state(ells, p.eta, p.kappa, r / p.R_unit)
                theta[i, :, w] = np.angle(hp * hp)
                abs2[i, :, w] = np.abs(hp) ** 2
                log[i, :, w] = 2 * lg
                a[i, :, w] = 1.0  # H- = conj(H+) for real eta and rho
        return theta, a, abs2, log
    if reference != "continued":
        raise RecoverError("reference", f"unknown reference {reference!r}")
    p1, _, pl = radial.reference_solutions(pots, ells, radii, sign=1, resolution=resolution)
    m1, _, ml = radial.reference_solutions(pots, ells, radii, sign=-1, resolution=resolution)
    abs2 = np.abs(p1) ** 2
    theta = np.angle(p1 * p1)
    a = (m1 * p1).real / abs2 * np.exp(ml - pl)
    return theta, a, abs2, 2 * pl


def extract_scattering(diag: GreensDiagonal, model, *, det_min=DET_MIN,
                       reference="continued", resolution=8) -> ScatteringTable:
    """Solve the two-radius system in every ``(l, w)`` cell.

    Cells with ``|det| < det_min`` are marked invalid (``s = nan``).
    ``reference="coulomb"`` uses bare Coulomb functions at the observation
    radii, which is exact only for radii at or beyond ``R_a``.  For noisy
    input with ``N`` segments each ``Im G`` carries the standard deviation
    ``Im G/sqrt(N)``, propagated linearly into ``sigma``.
    """
    if diag.values.shape[0] != 2:
        raise RecoverError("heights", "exactly two heights are required")
    if isinstance(model, SolarModel):
        R_sun = model.R_sun
    else:
        R_sun = model.R_unit
    radii = R_sun + np.asarray(diag.heights, float)
    pots = _as_pots(model, diag.omegas)
    theta, a, abs2, log = reference_phases(pots, diag.ells, radii, reference, resolution)
    k = np.array([p.k for p in pots])[None, None, :]
    rhs = a - 2.0 * k * diag.values / abs2 * np.exp(-log)
    t1, t2 = theta[0], theta[1]
    r1, r2 = rhs[0], rhs[1]
    det = np.sin(t2 - t1)
    D = np.sin(t1 - t2)  # determinant of rows (cos t, -sin t)
    cond = 1.0 / np.maximum(np.abs(det), 1e-300)
    valid = np.abs(det) >= det_min
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (-r1 * np.sin(t2) + r2 * np.sin(t1)) / D
        y = (np.cos(t1) * r2 - np.cos(t2) * r1) / D
    s = np.where(valid, x + 1j * y, np.nan + 1j * np.nan)
    res = np.maximum(np.abs(np.cos(t1) * x - np.sin(t1) * y - r1),
                     np.abs(np.cos(t2) * x - np.sin(t2) * y - r2))
    res = np.where(valid, res, np.nan)
    sigma = None
    if diag.is_noisy and diag.N_segments:
        e = 2.0 * k * np.abs(diag.values) / np.sqrt(diag.N_segments) / abs2 * np.exp(-log)
        with np.errstate(divide="ignore", invalid="ignore"):
            sx = np.hypot(np.sin(t2) * e[0], np.sin(t1) * e[1]) / np.abs(D)
            sy = np.hypot(np.cos(t2) * e[0], np.cos(t1) * e[1]) / np.abs(D)
        sigma = np.where(valid[..., None], np.stack([sx, sy], axis=-1), np.nan)
    return ScatteringTable(np.asarray(diag.ells), np.asarray(diag.omegas), s, cond,
                           valid, res, sigma)


def singular_set_scan(model, omega, R_o, r_range, ell_max, *, n_r=2001,
                      threshold=SCAN_THRESHOLD, reference="coulomb", resolution=8,
                      exclude_trivial=True):
    """Radii in ``r_range`` where some ``l <= ell_max`` nearly degenerates.

    Returns a structured array with fields ``r``, ``ell`` (minimising
    degree) and ``abs_sin`` for every scan radius with
    ``min_l |sin(theta_l(r) - theta_l(R_o))| < threshold``.

    The trivial branch ``r -> R_o`` (where the determinant vanishes only
    because the two radii coincide) is left out: a degree counts only once
    its phase, unwrapped along the scan grid, has moved by at least
    ``pi/2`` from ``theta_l(R_o)``.  The grid must therefore resolve the
    phase (steps well below a quarter wavelength).  With
    ``exclude_trivial=False`` only ``r = R_o`` itself is left out, which is
    what a single height pair needs.
    """
    lo, hi = r_range
    if lo < R_o * (1 - 1e-15) or hi < lo:
        raise RecoverError("range", "scan range must lie in [R_o, inf)")
    pots = _as_pots(model, [omega])
    ells = np.arange(int(ell_max) + 1)
    rs = np.linspace(lo, hi, int(n_r))
    radii = np.unique(np.concatenate([[R_o], rs]))
    theta, *_ = reference_phases(pots, ells, radii, reference, resolution)
    dtheta = np.unwrap(theta[:, :, 0], axis=0)
    dtheta = dtheta - dtheta[np.searchsorted(radii, R_o)][None, :]
    dti = dtheta[np.searchsorted(radii, rs)]
    sins = np.abs(np.sin(dti))
    if exclude_trivial:
        sins[np.abs(dti) < 0.5 * np.pi] = np.inf
    else:
        sins[np.isclose(rs, R_o, rtol=0, atol=1e-9 * max(R_o, 1.0))] = np.inf
    best = np.argmin(sins, axis=1)
    val = sins[np.arange(rs.size), best]
    hit = val < threshold
    out = np.zeros(int(hit.sum()), dtype=[("r", float), ("ell", int), ("abs_sin", float)])
    out["r"] = rs[hit]
    out["ell"] = ells[best[hit]]
    out["abs_sin"] = val[hit]
    return out


def save_scattering(path, table: ScatteringTable):
    """CSV ``ell, omega_rad_s, re_s, im_s, condition, valid``."""
    with open(path, "w") as fh:
        fh.write("# heliosolve-smat v1\n")
        fh.write("ell,omega_rad_s,re_s,im_s,condition,valid\n")
        for il, l in enumerate(table.ells):
            for iw, w in enumerate(table.omegas):
                s = table.s[il, iw]
                fh.write(f"{int(l)},{float(w)!r},{float(s.real)!r},{float(s.imag)!r},"
                         f"{float(table.condition[il, iw])!r},{int(table.valid[il, iw])}\n")


def load_scattering(path) -> ScatteringTable:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# heliosolve-smat v1"):
        raise RecoverError("format", f"{path}: line 1: missing heliosolve-smat header")
    if len(lines) < 2 or lines[1].replace(" ", "") != "ell,omega_rad_s,re_s,im_s,condition,valid":
        raise RecoverError("format", f"{path}: line 2: expected column names")
    rows = []
    for i, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        p = line.split(",")
        try:
            rows.append((int(p[0]), float(p[1]), complex(float(p[2]), float(p[3])),
                         float(p[4]), bool(int(p[5]))))
        except (ValueError, IndexError):
            raise RecoverError("format", f"{path}: line {i}: malformed row") from None
    ls = np.unique([r[0] for r in rows])
    ws = np.unique([r[1] for r in rows])
    s = np.full((ls.size, ws.size), np.nan + 0j)
    cond = np.full((ls.size, ws.size), np.nan)
    valid = np.zeros((ls.size, ws.size), bool)
    for l, w, sv, c, v in rows:
        i, j = np.searchsorted(ls, l), np.searchsorted(ws, w)
        s[i, j], cond[i, j], valid[i, j] = sv, c, v
    return ScatteringTable(ls, ws, s, cond, valid, np.full(s.shape, np.nan))


def save_singular(path, hits):
    """CSV ``r_m, ell, abs_sin`` for :func:`singular_set_scan` results."""
    with open(path, "w") as fh:
        fh.write("# heliosolve-singular v1\n")
        fh.write("r_m,ell,abs_sin\n")
        for h in hits:
            fh.write(f"{float(h['r'])!r},{int(h['ell'])},{float(h['abs_sin'])!r}\n")

