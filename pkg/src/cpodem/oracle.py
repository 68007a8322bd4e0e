"""Closed-form synthetic axisymmetric flowfields.

Generates smooth, low-rank injector-like fields parameterized by the five
design variables, so the whole emulation pipeline can be validated at desk
scale against analytic ground truth. The construction:

  * A liquid film interface sits at r_f = R_n - h along the injector and,
    for swirling designs, opens into a cone of angle alpha downstream of
    the exit; jet-labeled designs keep a straight annulus instead, so the
    two classes have genuinely different downstream structure.
  * A traveling surface wave of amplitude 0.1 h and wavelength 4 h rides
    on the interface at frequency f_wave.
  * Temperature transitions from 120 K (liquid side, below the interface)
    to 300 K (ambient side) through a logistic profile of width 0.15 h;
    density is the affine image of temperature mapping 120 K -> 1000 and
    300 K -> 130 kg/m^3.
  * Pressure is 100 atm plus a small traveling-wave component that decays
    downstream of the exit; axial velocity carries a fixed 0.15 kg/s mass
    flow through the film annulus with a cosine profile across the film;
    azimuthal velocity scales with the tangential-angle coordinate and
    decays solid-body style toward the axis.

Axial station x = 0 is the headend wall; the injector occupies
[dL, dL + L] and the domain extends 3 L further downstream and 3 R_n
radially. All coordinates are in mm, velocities in m/s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignPoint, DesignSpace, normalize
from .errors import ShapeMismatch

__all__ = [
    "REGIONS",
    "AxisymGrid",
    "SnapshotSeries",
    "OracleTruth",
    "VARIABLES",
    "SWIRL_ANGLE_DEG",
    "make_case_grid",
    "oracle_metrics",
    "oracle_fields",
    "label_flow",
]

REGIONS = ("headend", "interior", "near-field", "mid-field", "far-field")
VARIABLES = ("temperature", "density", "pressure", "axial_velocity", "azimuthal_velocity")

SWIRL_ANGLE_DEG = 30.0

T_AMBIENT = 300.0
T_LIQUID = 120.0
RHO_LIQUID = 1000.0
RHO_AMBIENT = 130.0
P_OPERATING = 100.0 * 101325.0  # 100 atm in Pa
MDOT = 0.15  # kg/s, fixed for all runs
AZIMUTHAL_SCALE = 20.0  # m/s at the injector wall for theta at its upper bound


@dataclass
class AxisymGrid:
    """Tensor-product (x, r) grid with per-node quadrature weights and
    region labels. Node index = ix * nr + ir."""

    x: np.ndarray
    r: np.ndarray
    cell_area: np.ndarray
    region_label: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if np.any(np.diff(self.x) <= 0) or np.any(np.diff(self.r) <= 0):
            raise ValueError("grid coordinates must be strictly increasing")
        if np.any(self.cell_area <= 0):
            raise ValueError("cell areas must be positive")

    @property
    def nx(self) -> int:
        return len(self.x)

    @property
    def nr(self) -> int:
        return len(self.r)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.nr

    def node_coords(self) -> np.ndarray:
        """(n_nodes, 2) array of (x, r) pairs in node order."""
        xx, rr = np.meshgrid(self.x, self.r, indexing="ij")
        return np.column_stack([xx.ravel(), rr.ravel()])

    def reshape(self, flat):
        return np.asarray(flat).reshape(self.nx, self.nr)


@dataclass
class SnapshotSeries:
    """Time-ordered per-variable snapshots on one grid, shape (T, n_nodes)."""

    grid: AxisymGrid
    data: dict
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        for name, arr in self.data.items():
            arr = np.asarray(arr, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != self.grid.n_nodes:
                raise ShapeMismatch(f"{name}: expected (T, {self.grid.n_nodes}), got {arr.shape}")
            if arr.shape[0] < 1:
                raise ShapeMismatch(f"{name}: needs at least one snapshot")
            self.data[name] = arr

    @property
    def n_snapshots(self) -> int:
        return next(iter(self.data.values())).shape[0]

    @property
    def variables(self):
        return tuple(self.data.keys())

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_snapshots)


@dataclass
class OracleTruth:
    h: float  # film thickness, mm
    alpha: float  # spreading angle, degrees
    f_wave: float  # surface-wave frequency, Hz
    label: str  # "jet" or "swirl"


def domain_extent(d: DesignPoint):
    """(x_max, r_max) of the case domain in mm."""
    return d.dL + 4.0 * d.L, 3.0 * d.R_n


def axial_breaks(d: DesignPoint) -> np.ndarray:
    """Region boundaries: headend, interior, then three downstream thirds."""
    x_exit = d.dL + d.L
    return np.array([0.0, d.dL, x_exit, x_exit + d.L, x_exit + 2 * d.L, x_exit + 3 * d.L])


def make_case_grid(d: DesignPoint, grid_spec=(64, 48)) -> AxisymGrid:
    """Uniform tensor grid over the case domain with trapezoid weights."""
    nx, nr = grid_spec
    x_max, r_max = domain_extent(d)
    x = np.linspace(0.0, x_max, nx)
    r = np.linspace(0.0, r_max, nr)

    def trap_weights(coords):
        w = np.empty_like(coords)
        w[1:-1] = 0.5 * (coords[2:] - coords[:-2])
        w[0] = 0.5 * (coords[1] - coords[0])
        w[-1] = 0.5 * (coords[-1] - coords[-2])
        return w

    area = np.outer(trap_weights(x), trap_weights(r)).ravel()

    breaks = axial_breaks(d)
    xi = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, len(REGIONS) - 1)
    labels = np.repeat(xi.astype(np.uint8), nr)
    return AxisymGrid(x, r, area, labels)


def oracle_metrics(d: DesignPoint, s: DesignSpace) -> OracleTruth:
    """Analytic performance metrics for a design point."""
    l, _, th, dn, _ = normalize(d, s).coords
    alpha = 20.0 + 30.0 * th - 18.0 * dn + 2.0 * (1.0 - l)
    h = d.R_n * (0.10 + 0.25 * dn - 0.10 * th + 0.03 * l)
    f_wave = 2000.0 * (1.0 + 0.5 * th)
    label = "swirl" if alpha > SWIRL_ANGLE_DEG else "jet"
    return OracleTruth(h=h, alpha=alpha, f_wave=f_wave, label=label)


def _logistic(z):
    from scipy.special import expit

    return expit(z)


def oracle_fields(
    d: DesignPoint,
    s: DesignSpace,
    grid_spec=(64, 48),
    n_snapshots: int = 64,
    dt: float = 30e-6,
    seed: int = 0,
) -> SnapshotSeries:
    """Evaluate the closed-form fields on the case grid.

    Deterministic for identical inputs; `seed` is carried through to the
    snapshot store metadata but the fields themselves are noise-free.
    """
    del seed  # fields are closed-form; kept in the signature for the store
    truth = oracle_metrics(d, s)
    if truth.h <= 0:
        raise ValueError(f"film thickness {truth.h} mm is not positive for this design")
    _, _, th, _, _ = normalize(d, s).coords
    grid = make_case_grid(d, grid_spec)
    pts = grid.node_coords()
    x = pts[:, 0]
    r = pts[:, 1]
    x_exit = d.dL + d.L

    h = truth.h
    alpha_rad = np.deg2rad(truth.alpha)
    r_f = np.full_like(x, d.R_n - h)
    if truth.label == "swirl":
        r_f = r_f + np.maximum(0.0, x - x_exit) * np.tan(alpha_rad)

    times = dt * np.arange(n_snapshots)
    phase_x = 2.0 * np.pi * x / (4.0 * h)
    omega = 2.0 * np.pi * truth.f_wave

    # mass flow through the film annulus sets the axial velocity scale (SI)
    u_scale = MDOT / (RHO_LIQUID * 2.0 * np.pi * (d.R_n * 1e-3) * (h * 1e-3))
    w_wall = AZIMUTHAL_SCALE * th
    r_ratio = r / d.R_n
    w_field = w_wall * r_ratio * np.exp(-(np.maximum(r_ratio, 1.0) - 1.0))
    p_decay = np.exp(-np.maximum(0.0, x - x_exit) / d.L)

    # the mean-convection profile rides on the interior film radius; the
    # surface wave and the downstream cone live in temperature, density,
    # and pressure. cos^2 keeps the band edges C1-smooth.
    xi = np.clip(np.pi * (r - (d.R_n - h)) / (6.0 * h), -0.5 * np.pi, 0.5 * np.pi)
    u_field = u_scale * np.cos(xi) ** 2

    T = np.empty((n_snapshots, grid.n_nodes))
    P = np.empty_like(T)
    for it, t in enumerate(times):
        wave = omega * t - phase_x
        r_tilde = r_f + 0.1 * h * np.sin(wave)
        T[it] = T_LIQUID + (T_AMBIENT - T_LIQUID) * _logistic((r - r_tilde) / (0.15 * h))
        P[it] = P_OPERATING * (1.0 + 0.01 * np.sin(wave) * p_decay)
    rho = RHO_LIQUID + (T - T_LIQUID) * (RHO_AMBIENT - RHO_LIQUID) / (T_AMBIENT - T_LIQUID)

    data = {
        "temperature": T,
        "density": rho,
        "pressure": P,
        "axial_velocity": np.tile(u_field, (n_snapshots, 1)),
        "azimuthal_velocity": np.tile(w_field, (n_snapshots, 1)),
    }
    return SnapshotSeries(grid=grid, data=data, dt=dt)


def label_flow(series: SnapshotSeries, d: DesignPoint) -> str:
    """Classify a flowfield by its extracted spreading angle.

    An interface that leaves the radial domain within one station of the
    exit counts as maximal spreading and is labeled swirl.
    """
    from . import diagnostics
    from .errors import NoInterface

    if "density" not in series.data:
        raise ShapeMismatch("series lacks a density variable")
    try:
        _, alpha = diagnostics.extract_film_metrics(series.data["density"], series.grid, d)
    except NoInterface:
        return "swirl"
    return "swirl" if alpha > SWIRL_ANGLE_DEG else "jet"
