"""Observation layer: Im G diagonals, chi-square power spectra, segment plans.

Under source equipartition the expected power of the ``(l, m)`` wave
component at radius ``r`` is ``P = Pi * Im G_l(r, r)``.  An average of ``N``
periodograms is distributed as ``P X / (2N)`` with ``X ~ chi^2(2N)``.

Random numbers come from a counter-based generator so every cell can be
reproduced alone: cell ``(i_h, l, i_w)`` uses ``numpy.random.Philox`` with
the 128-bit key ``seed + 2^64 * cell_id`` and
``cell_id = (i_h << 40) | (i_w << 20) | l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import radial
from .solar_model import ModelError, SolarModel, potential_from_model, wavenumber

__all__ = [
    "ObservationSetup",
    "GreensDiagonal",
    "RNG_FAMILY",
    "exact_diagonals",
    "simulate_power_spectrum",
    "chi2_ratios",
    "segment_plan",
    "save_diagonal",
    "load_diagonal",
    "DAY",
    "YEAR",
]

RNG_FAMILY = "philox4x64"
DAY = 86400.0
YEAR = 365.25 * DAY
_NORMAL_MAX_N = 1000


class ObserveError(ValueError):
    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True, eq=False)
class ObservationSetup:
    """Heights (m above ``R_sun``), frequencies (rad/s) and degrees ``0..ell_max``."""

    heights: np.ndarray
    omegas: np.ndarray
    ell_max: int = 250
    N_segments: int = 1
    Pi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.heights, float))
        w = np.atleast_1d(np.asarray(self.omegas, float))
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "omegas", w)
        if h.size < 2 or np.any(np.diff(h) <= 0) or np.any(h < 0):
            raise ObserveError("heights", "need at least two strictly increasing heights >= 0")
        if w.size < 1 or np.any(w <= 0):
            raise ObserveError("omegas", "frequencies must be positive")
        if int(self.ell_max) < 0:
            raise ObserveError("ell_max", "ell_max must be >= 0")
        if int(self.N_segments) < 1:
            raise ObserveError("N_segments", "N_segments must be >= 1")
        if not np.all(np.asarray(self.Pi, float) > 0):
            raise ObserveError("Pi", "source strength must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ObserveError("seed", "seed must fit in 64 bits")

    @property
    def ells(self):
        return np.arange(int(self.ell_max) + 1)


@dataclass(frozen=True, eq=False)
class GreensDiagonal:
    """``values[h, l, w] = Im G_l(R_sun + h, R_sun + h; w)`` (SI)."""

    heights: np.ndarray
    ells: np.ndarray
    omegas: np.ndarray
    values: np.ndarray
    is_noisy: bool = False
    N_segments: int | None = None
    meta: dict = field(default_factory=dict)


def _pots(model, omegas):
    return [potential_from_model(model, float(w)) for w in omegas]


def exact_diagonals(model: SolarModel, setup: ObservationSetup, *,
                    resolution=8) -> GreensDiagonal:
    """Noise-free ``Im G`` at the setup heights from the radial solver."""
    for w in setup.omegas:
        wavenumber(model, float(w))  # raises below the cutoff
    radii = model.R_sun + setup.heights
    G = radial.greens_diagonals(_pots(model, setup.omegas), setup.ells, radii,
                                resolution=resolution)
    bad = ~np.isfinite(G)
    if bad.any():
        h, l, w = np.argwhere(bad)[0]
        raise radial.DegenerateMatchingError(
            f"non-finite Green's function at height index {h}, ell={l}, omega index {w}")
    return GreensDiagonal(setup.heights, setup.ells, setup.omegas, G.imag.copy(),
                          False, None)


def _cell_rng(seed, cell_id):
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(cell_id) << 64)))


def _cell_id(ih, ell, iw):
    return (int(ih) << 40) | (int(iw) << 20) | int(ell)


def _draw(rng, N):
    if N <= _NORMAL_MAX_N:
        z = rng.standard_normal(2 * N)
        return float(np.dot(z, z)) / (2 * N)
    return float(rng.gamma(N, 1.0 / N))


def chi2_ratios(seed, N, n_cells):
    """``X/(2N)``, ``X ~ chi^2(2N)``, for cells ``0..n_cells-1`` (one stream each)."""
    return np.array([_draw(_cell_rng(seed, c), int(N)) for c in range(int(n_cells))])


def simulate_power_spectrum(model: SolarModel, setup: ObservationSetup, *,
                            exact: GreensDiagonal | None = None,
                            resolution=8) -> GreensDiagonal:
    """Noisy power spectra ``P X/(2N)`` divided by ``Pi`` (estimates of Im G)."""
    if exact is None:
        exact = exact_diagonals(model, setup, resolution=resolution)
    P = np.asarray(setup.Pi, float) * exact.values
    if np.any(P < 0):
        h, l, w = np.argwhere(P < 0)[0]
        raise ModelError("model-consistency",
                         f"Im G < 0 at height index {h}, ell={l}, omega index {w}")
    N = int(setup.N_segments)
    out = np.empty_like(P)
    for ih in range(P.shape[0]):
        for l in range(P.shape[1]):
            for iw in range(P.shape[2]):
                rng = _cell_rng(setup.seed, _cell_id(ih, exact.ells[l], iw))
                out[ih, l, iw] = P[ih, l, iw] * _draw(rng, N)
    out /= np.asarray(setup.Pi, float)
    return GreensDiagonal(exact.heights, exact.ells, exact.omegas, out, True, N,
                          {"rng": RNG_FAMILY, "seed": int(setup.seed)})


def segment_plan(total_duration, segment_duration, cadence):
    """``(N, 1/segment, 1/(2 cadence))`` with frequencies in Hz."""
    if min(total_duration, segment_duration, cadence) <= 0:
        raise ObserveError("plan", "durations must be positive")
    if segment_duration > total_duration:
        raise ObserveError("plan", "segment longer than the total duration")
    N = int(math.floor(total_duration / segment_duration * (1 + 1e-12)))
    if N == 0:
        raise ObserveError("plan", "no complete segment")
    return N, 1.0 / segment_duration, 1.0 / (2.0 * cadence)


def save_diagonal(path, diag: GreensDiagonal):
    """CSV ``height_m, ell, omega_rad_s, im_G, is_noisy, N``."""
    N = "" if diag.N_segments is None else str(int(diag.N_segments))
    head = "# heliosolve-diag v1"
    if diag.is_noisy:
        head += f" rng={diag.meta.get('rng', RNG_FAMILY)} seed={diag.meta.get('seed', 0)}"
    with open(path, "w") as fh:
        fh.write(head + "\n")
        fh.write("height_m,ell,omega_rad_s,im_G,is_noisy,N\n")
        for ih, h in enumerate(diag.heights):
            for il, l in enumerate(diag.ells):
                for iw, w in enumerate(diag.omegas):
                    fh.write(f"{float(h)!r},{int(l)},{float(w)!r},{float(diag.values[ih, il, iw])!r},"
                             f"{int(diag.is_noisy)},{N}\n")


def load_diagonal(path) -> GreensDiagonal:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# heliosolve-diag v1"):
        raise ObserveError("format", f"{path}: line 1: missing heliosolve-diag header")
    meta = dict(t.split("=", 1) for t in lines[0].split()[3:] if "=" in t)
    if len(lines) < 2 or lines[1].replace(" ", "") != "height_m,ell,omega_rad_s,im_G,is_noisy,N":
        raise ObserveError("format", f"{path}: line 2: expected column names")
    rows = []
    for i, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            rows.append((float(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]),
                         int(parts[4]), int(parts[5]) if parts[5].strip() else None))
        except (ValueError, IndexError):
            raise ObserveError("format", f"{path}: line {i}: malformed row") from None
    if not rows:
        raise ObserveError("format", f"{path}: no data rows")
    hs = np.unique([r[0] for r in rows])
    ls = np.unique([r[1] for r in rows])
    ws = np.unique([r[2] for r in rows])
    vals = np.full((hs.size, ls.size, ws.size), np.nan)
    for h, l, w, v, _, _ in rows:
        vals[np.searchsorted(hs, h), np.searchsorted(ls, l), np.searchsorted(ws, w)] = v
    if np.isnan(vals).any():
        raise ObserveError("format", f"{path}: incomplete (height, ell, omega) grid")
    noisy = bool(rows[0][4])
    if "seed" in meta:
        meta["seed"] = int(meta["seed"])
    return GreensDiagonal(hs, ls, ws, vals, noisy, rows[0][5], meta)
