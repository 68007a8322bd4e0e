"""Quantitative validation: range-normalized errors, spectra, film metrics,
probe signals and confidence-width maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignPoint
from .errors import NoInterface, OutOfDomain, ZeroRange
from .kriging import confidence_halfwidth
from .oracle import AxisymGrid, SnapshotSeries

__all__ = [
    "RegionSpec",
    "region_overall",
    "region_upstream",
    "region_downstream",
    "region_box",
    "rmsre",
    "psd",
    "extract_film_metrics",
    "extract_interface",
    "default_probes",
    "probe_signals",
    "uq_map",
]


@dataclass
class RegionSpec:
    """Named node subset used to localize error metrics."""

    name: str
    mask: np.ndarray

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __post_init__(self):
        if self.size == 0:
            raise ValueError(f"region {self.name!r} selects no nodes")


def region_overall(grid: AxisymGrid) -> RegionSpec:
    return RegionSpec("overall", np.ones(grid.n_nodes, dtype=bool))


def region_upstream(grid: AxisymGrid, x_exit: float) -> RegionSpec:
    mask = grid.node_coords()[:, 0] <= x_exit
    return RegionSpec("upstream", mask)


def region_downstream(grid: AxisymGrid, x_exit: float) -> RegionSpec:
    mask = grid.node_coords()[:, 0] > x_exit
    return RegionSpec("downstream", mask)


def region_box(grid: AxisymGrid, x0, x1, r0, r1, name="custom") -> RegionSpec:
    pts = grid.node_coords()
    mask = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= r0) & (pts[:, 1] <= r1)
    return RegionSpec(name, mask)


def rmsre(sim, emu, region: RegionSpec, t=None) -> float:
    """RMS of pointwise differences over the region, normalized by the
    simulated field's full range at that time, in percent."""
    sim = np.asarray(sim, dtype=float)
    emu = np.asarray(emu, dtype=float)
    if t is not None:
        sim = sim[t]
        emu = emu[t]
    if sim.shape != emu.shape:
        raise ValueError(f"field shapes differ: {sim.shape} vs {emu.shape}")
    rng = float(sim.max() - sim.min())
    if rng <= 0.0:
        raise ZeroRange("simulated field has zero range")
    diff = sim[region.mask] - emu[region.mask]
    return 100.0 * float(np.sqrt(np.mean(diff * diff))) / rng


def psd(signal, dt: float, window: str = "rect"):
    """One-sided periodogram.

    With the rect window, sum(density) * df equals mean(signal^2) exactly
    (discrete Parseval). Densities are in (signal units)^2 / Hz; the Hann
    window uses the standard sum-of-squares power correction.
    """
    x = np.asarray(signal, dtype=float)
    n = len(x)
    if n < 8:
        raise ValueError("need at least 8 samples")
    if dt <= 0:
        raise ValueError("dt must be positive")
    fs = 1.0 / dt
    if window == "hann":
        w = np.hanning(n)
    elif window == "rect":
        w = np.ones(n)
    else:
        raise ValueError(f"unknown window {window!r}")
    X = np.fft.rfft(x * w)
    dens = (np.abs(X) ** 2) / (fs * np.sum(w * w))
    dens[1:] *= 2.0
    if n % 2 == 0:
        dens[-1] /= 2.0  # Nyquist bin is not mirrored
    freqs = np.fft.rfftfreq(n, dt)
    return freqs, dens


def _refine_peak(g, j, spacing):
    # quadratic vertex through (j-1, j, j+1); caller guarantees interior j
    denom = g[j - 1] - 2.0 * g[j] + g[j + 1]
    if denom == 0.0:
        return 0.0
    delta = 0.5 * (g[j - 1] - g[j + 1]) / denom
    return float(np.clip(delta, -0.5, 0.5)) * spacing


def extract_interface(density, grid: AxisymGrid, d: DesignPoint, rel_threshold: float = 0.05):
    """Per-station interface radius from the maximum radial density gradient.

    Returns (station x, interface radius, valid mask). Stations whose
    gradient peak is weaker than `rel_threshold` of the global maximum or
    sits on the radial boundary are invalid.
    """
    rho = np.asarray(density, dtype=float)
    if rho.ndim == 2:
        rho = rho.mean(axis=0)
    rho2d = grid.reshape(rho)
    scale = max(1.0, float(np.abs(rho2d).max()))
    if float(rho2d.max() - rho2d.min()) <= 1e-9 * scale:
        raise NoInterface("density field is flat")
    grad = np.abs(np.gradient(rho2d, grid.r, axis=1))
    gmax_global = float(grad.max())
    r = grid.r
    radii = np.empty(grid.nx)
    strength = np.zeros(grid.nx)
    valid = np.zeros(grid.nx, dtype=bool)
    for ix in range(grid.nx):
        g = grad[ix]
        j = int(np.argmax(g))
        if j < 1 or j > grid.nr - 2 or g[j] < rel_threshold * gmax_global:
            radii[ix] = np.nan
            continue
        spacing = 0.5 * (r[j + 1] - r[j - 1])
        radii[ix] = r[j] + _refine_peak(g, j, spacing)
        strength[ix] = g[j]
        valid[ix] = True
    return grid.x.copy(), radii, valid, strength


def extract_film_metrics(density, grid: AxisymGrid, d: DesignPoint):
    """Film thickness (mm) and spreading angle (degrees).

    Thickness is R_n minus the interface radius at the station nearest the
    injector exit; the angle is the arctangent of the least-squares slope
    of the interface over the first downstream third. Time series are
    averaged before extraction.
    """
    xs, radii, valid, strength = extract_interface(density, grid, d)
    x_exit = d.dL + d.L
    interior = np.flatnonzero((xs <= x_exit) & valid)
    if len(interior) == 0:
        raise NoInterface("no interface inside the injector")
    ix_h = int(interior[-1])  # last station at or before the exit
    h = d.R_n - radii[ix_h]

    # follow the connected ridge from the exit: stop at the first invalid
    # station (the interface has left the domain) or when the radius drops
    # back by more than a cell (detached spurious ridge)
    dr_cell = float(np.mean(np.diff(grid.r)))
    fit_x = [x_exit]
    fit_r = [radii[ix_h]]
    fit_w = [strength[ix_h]]
    for ix in range(ix_h + 1, grid.nx):
        if xs[ix] <= x_exit or xs[ix] > x_exit + d.L:
            if xs[ix] > x_exit + d.L:
                break
            continue
        if not valid[ix] or radii[ix] < fit_r[-1] - dr_cell:
            break
        fit_x.append(xs[ix])
        fit_r.append(radii[ix])
        fit_w.append(strength[ix])
    if len(fit_x) < 2:
        raise NoInterface("interface leaves the domain before a slope can be fitted")
    # sharper ridges are trusted more; a smeared far tail contributes little
    w = np.sqrt(np.asarray(fit_w) / max(fit_w))
    slope = np.polyfit(fit_x, fit_r, 1, w=w)[0]
    alpha = float(np.degrees(np.arctan(slope)))
    return float(h), alpha


def default_probes(density, grid: AxisymGrid, d: DesignPoint, n_probes: int = 8):
    """Probe positions along the film surface, equally spaced from
    mid-injector to one injector length downstream of the exit."""
    h, alpha = extract_film_metrics(density, grid, d)
    x_exit = d.dL + d.L
    r_base = d.R_n - h
    slope = np.tan(np.radians(alpha))
    px = np.linspace(d.dL + 0.5 * d.L, x_exit + d.L, n_probes)
    pr = r_base + np.maximum(0.0, px - x_exit) * slope
    r_cap = grid.r[-1] - 0.02 * (grid.r[-1] - grid.r[0])
    pr = np.clip(pr, grid.r[0], r_cap)
    return np.column_stack([px, pr])


def probe_signals(series: SnapshotSeries, probes, variable: str, k: int = 4):
    """Probe time series sampled by inverse-distance weighting (k nearest)."""
    from .commongrid import idw_weights

    grid = series.grid
    probes = np.asarray(probes, dtype=float)
    for x, r in probes:
        if not (grid.x[0] <= x <= grid.x[-1] and grid.r[0] <= r <= grid.r[-1]):
            raise OutOfDomain(f"probe ({x}, {r}) outside the grid domain")
    pts = grid.node_coords()
    scale = np.array([grid.x[-1] - grid.x[0], grid.r[-1] - grid.r[0]])
    idx, w = idw_weights(pts / scale, probes / scale, k=k)
    fields = series.data[variable]
    from . import kernels

    return kernels.idw_apply(idx, w, fields).T  # (n_probes, T)


def uq_map(variance_field, level: float = 0.80) -> np.ndarray:
    """Pointwise one-sided confidence halfwidths from a variance field."""
    return confidence_halfwidth(np.asarray(variance_field, dtype=float), level)
