"""Common-basis extraction by the method of snapshots.

Snapshots from all cases, rescaled to the common grid and mean-centered,
are pooled into one matrix. The eigendecomposition of the (nT x nT) Gram
matrix of quadrature-weighted inner products yields the basis; the Gram
matrix is scaled by 1/(nT) so eigenvalues are energy densities and the
spectrum is resolution independent. Truncation keeps the smallest K whose
cumulative energy reaches the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .commongrid import CommonGrid, RegionMap, resample_to_case
from .errors import ShapeMismatch, SolverFailure
from .oracle import AxisymGrid, SnapshotSeries

__all__ = ["CPODBasis", "CoeffTable", "assemble_ensemble", "compute_basis", "project", "reconstruct"]

DENSE_LIMIT = 2048


@dataclass
class CPODBasis:
    common: CommonGrid
    variable: str
    mean_field: np.ndarray  # (N,)
    modes: np.ndarray  # (K, N), orthonormal under the weighted inner product
    eigenvalues: np.ndarray  # (K,), non-increasing
    energy_fraction: np.ndarray  # (K,), cumulative share of total energy
    quadrature: np.ndarray  # (N,) node weights
    total_energy: float

    @property
    def K(self) -> int:
        return len(self.eigenvalues)


@dataclass
class CoeffTable:
    """Training coefficients beta[k, i, t] for K modes, n cases, T steps."""

    beta: np.ndarray

    @property
    def K(self):
        return self.beta.shape[0]

    @property
    def n_cases(self):
        return self.beta.shape[1]

    @property
    def n_steps(self):
        return self.beta.shape[2]


def assemble_ensemble(cases, variable: str, center: bool = True):
    """Pool snapshots into an (N, nT) column matrix minus the pooled mean.

    All cases must live on the same grid with equal snapshot counts.
    Returns (centered matrix, mean field); with center=False the mean
    returned is the zero field.
    """
    if not cases:
        raise ShapeMismatch("no cases to assemble")
    n_nodes = cases[0].grid.n_nodes
    T = cases[0].n_snapshots
    cols = []
    for i, case in enumerate(cases):
        if case.grid.n_nodes != n_nodes:
            raise ShapeMismatch(f"case {i} node count {case.grid.n_nodes} != {n_nodes}")
        if case.n_snapshots != T:
            raise ShapeMismatch(f"case {i} snapshot count {case.n_snapshots} != {T}")
        if variable not in case.data:
            raise ShapeMismatch(f"case {i} lacks variable {variable!r}")
        cols.append(case.data[variable].T)  # (N, T)
    S = np.concatenate(cols, axis=1)
    if center:
        mean = S.mean(axis=1)
        S = S - mean[:, None]
    else:
        mean = np.zeros(n_nodes)
    return S, mean


def _eig_dense(G):
    vals, vecs = np.linalg.eigh(G)
    return vals[::-1], vecs[:, ::-1]


def _eig_iterative(G, energy_target, trace):
    """Implicitly restarted Lanczos, growing k until the energy target."""
    m = G.shape[0]
    k = min(32, m - 1)
    last_err = None
    while True:
        for attempt_maxiter in (None, 40 * m):
            try:
                vals, vecs = spla.eigsh(G, k=k, which="LA", maxiter=attempt_maxiter)
                order = np.argsort(vals)[::-1]
                vals, vecs = vals[order], vecs[:, order]
                if np.sum(np.maximum(vals, 0.0)) >= energy_target * trace or k >= m - 1:
                    return vals, vecs
                break
            except spla.ArpackNoConvergence as err:
                last_err = err
        else:
            raise SolverFailure(f"Lanczos failed to converge at k={k}: {last_err}")
        k = min(2 * k, m - 1)


def compute_basis(
    S,
    quadrature,
    mean_field=None,
    energy_target: float = 0.99,
    solver: str = "auto",
    common: CommonGrid = None,
    variable: str = "",
    n_cases: int = 1,
):
    """Eigendecompose the weighted Gram matrix and truncate.

    `S` is the centered (N, nT) snapshot matrix from assemble_ensemble.
    solver "dense" uses a full symmetric eigendecomposition, "iterative"
    restarted Lanczos; "auto" switches on nT > 2048. Returns the basis
    and the training coefficient table reshaped to (K, n_cases, T).
    """
    S = np.asarray(S, dtype=float)
    w = np.asarray(quadrature, dtype=float)
    if np.any(w <= 0):
        raise ValueError("quadrature weights must be positive")
    n_nodes, nT = S.shape
    if nT < 2:
        raise ShapeMismatch("need at least two pooled snapshots")
    if nT % n_cases != 0:
        raise ShapeMismatch(f"nT={nT} not divisible by n_cases={n_cases}")

    G = (S * w[:, None]).T @ S / nT
    G = 0.5 * (G + G.T)
    trace = float(np.trace(G))

    if solver == "auto":
        solver = "dense" if nT <= DENSE_LIMIT else "iterative"
    if solver == "dense":
        vals, vecs = _eig_dense(G)
    elif solver == "iterative":
        vals, vecs = _eig_iterative(G, energy_target, trace)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    vals = np.maximum(vals, 0.0)
    cum = np.cumsum(vals)
    K = int(np.searchsorted(cum, energy_target * trace) + 1)
    K = min(K, len(vals))
    vals = vals[:K]
    vecs = vecs[:, :K]

    # phi_k = S v_k / sqrt(nT lambda_k): orthonormal in the weighted inner product
    denom = np.sqrt(np.maximum(nT * vals, 1e-300))
    modes = (S @ vecs / denom).T  # (K, N)
    # deterministic sign: largest-magnitude entry positive
    flip = np.sign(modes[np.arange(K), np.argmax(np.abs(modes), axis=1)])
    flip[flip == 0] = 1.0
    modes *= flip[:, None]

    beta_cols = (vecs * denom).T * flip[:, None]  # (K, nT)
    T = nT // n_cases
    beta = beta_cols.reshape(K, n_cases, T)

    basis = CPODBasis(
        common=common,
        variable=variable,
        mean_field=np.zeros(n_nodes) if mean_field is None else np.asarray(mean_field, dtype=float),
        modes=modes,
        eigenvalues=vals,
        energy_fraction=cum[:K] / trace if trace > 0 else np.ones(K),
        quadrature=w,
        total_energy=trace,
    )
    return basis, CoeffTable(beta)


def project(series, basis: CPODBasis) -> np.ndarray:
    """Coefficients beta[k, t] of a snapshot series on the basis grid."""
    if isinstance(series, SnapshotSeries):
        if series.grid.n_nodes != len(basis.mean_field):
            raise ShapeMismatch("series grid does not match the basis grid")
        fields = series.data[basis.variable]
    else:
        fields = np.atleast_2d(np.asarray(series, dtype=float))
        if fields.shape[1] != len(basis.mean_field):
            raise ShapeMismatch(f"field length {fields.shape[1]} != {len(basis.mean_field)}")
    centered = fields - basis.mean_field[None, :]
    return basis.modes @ (centered * basis.quadrature[None, :]).T  # (K, T)


def reconstruct(
    beta,
    basis: CPODBasis,
    rmap: RegionMap = None,
    target_grid: AxisymGrid = None,
    dt: float = 1.0,
    k: int = 10,
    power: int = 2,
) -> SnapshotSeries:
    """Mean field plus sum of beta_k(t) phi_k, optionally mapped onto a
    target geometry grid through the common-grid interpolation."""
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    if beta.shape[0] > basis.K:
        raise ShapeMismatch(f"{beta.shape[0]} coefficient rows exceed K={basis.K}")
    fields = basis.mean_field[None, :] + beta.T @ basis.modes[: beta.shape[0]]
    grid = basis.common.grid
    if rmap is not None:
        if target_grid is None:
            raise ValueError("target_grid required when mapping to a case geometry")
        fields = resample_to_case(fields, basis.common, rmap, target_grid, k=k, power=power)
        grid = target_grid
    return SnapshotSeries(grid=grid, data={basis.variable or "field": fields}, dt=dt)
