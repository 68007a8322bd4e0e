"""Binary snapshot store and model archive formats.

All integers and floats are little-endian. Formats:

  grid.bin      "CPG1" | nx u32 | nr u32 | x f64[nx] | r f64[nr]
                | cell_area f64[nx*nr] | region_label u8[nx*nr]
  var_<v>.bin   "CPS1" | T u32 | n_nodes u32 | data f64[T*n_nodes] time-major
  case.meta     text key = value lines (design, dt, t0, seed)
  basis_<v>.bin "CPB1" | K u32 | n_nodes u32 | total_energy f64
                | mean f64[N] | eigenvalues f64[K] | quadrature f64[N]
                | modes f64[K*N] row-major
  coeffs_<v>.bin "CPC1" | K u32 | n u32 | T u32 | beta f64[K*n*T]
  gp_<v>.bin    "CPK1" | K u32 | T u32 | p u32 | records f64[(3+p) * K*T]
                each record: mu, sigma2, nugget, eta[p]; (k,t) in row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .design import DesignPoint
from .oracle import AxisymGrid, SnapshotSeries

GRID_MAGIC = b"CPG1"
SERIES_MAGIC = b"CPS1"
BASIS_MAGIC = b"CPB1"
COEFF_MAGIC = b"CPC1"
GP_MAGIC = b"CPK1"


def _expect_magic(fh, magic, path):
    got = fh.read(4)
    if got != magic:
        raise ValueError(f"{path}: expected magic {magic!r}, found {got!r}")


def write_grid(path, grid: AxisymGrid) -> None:
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<II", grid.nx, grid.nr))
        fh.write(np.asarray(grid.x, dtype="<f8").tobytes())
        fh.write(np.asarray(grid.r, dtype="<f8").tobytes())
        fh.write(np.asarray(grid.cell_area, dtype="<f8").tobytes())
        fh.write(np.asarray(grid.region_label, dtype=np.uint8).tobytes())


def read_grid(path) -> AxisymGrid:
    with open(path, "rb") as fh:
        _expect_magic(fh, GRID_MAGIC, path)
        nx, nr = struct.unpack("<II", fh.read(8))
        x = np.frombuffer(fh.read(8 * nx), dtype="<f8")
        r = np.frombuffer(fh.read(8 * nr), dtype="<f8")
        area = np.frombuffer(fh.read(8 * nx * nr), dtype="<f8")
        labels = np.frombuffer(fh.read(nx * nr), dtype=np.uint8)
    return AxisymGrid(x.copy(), r.copy(), area.copy(), labels.copy())


def write_variable(path, fields) -> None:
    fields = np.asarray(fields, dtype=float)
    T, n_nodes = fields.shape
    with open(path, "wb") as fh:
        fh.write(SERIES_MAGIC)
        fh.write(struct.pack("<II", T, n_nodes))
        fh.write(fields.astype("<f8").tobytes())


def read_variable(path) -> np.ndarray:
    with open(path, "rb") as fh:
        _expect_magic(fh, SERIES_MAGIC, path)
        T, n_nodes = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(8 * T * n_nodes), dtype="<f8")
    return data.reshape(T, n_nodes).copy()


def write_case(case_dir, series: SnapshotSeries, design: DesignPoint, seed: int = 0) -> None:
    """One directory per case: grid.bin, var_<name>.bin, case.meta."""
    case_dir = Path(case_dir)
    case_dir.mkdir(parents=True, exist_ok=True)
    write_grid(case_dir / "grid.bin", series.grid)
    for name, arr in series.data.items():
        write_variable(case_dir / f"var_{name}.bin", arr)
    lines = [
        "design = " + " ".join(repr(v) for v in design.values),
        f"dt = {series.dt!r}",
        f"t0 = {series.t0!r}",
        f"seed = {seed}",
    ]
    (case_dir / "case.meta").write_text("\n".join(lines) + "\n")


def read_case(case_dir):
    """Returns (design, series, meta dict)."""
    case_dir = Path(case_dir)
    meta = {}
    for line in (case_dir / "case.meta").read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    design = DesignPoint(tuple(float(v) for v in meta["design"].split()))
    grid = read_grid(case_dir / "grid.bin")
    data = {}
    for var_file in sorted(case_dir.glob("var_*.bin")):
        name = var_file.stem[len("var_"):]
        data[name] = read_variable(var_file)
    series = SnapshotSeries(
        grid=grid, data=data, dt=float(meta.get("dt", 1.0)), t0=float(meta.get("t0", 0.0))
    )
    return design, series, meta


def write_basis(path, mean_field, modes, eigenvalues, quadrature, total_energy: float) -> None:
    modes = np.asarray(modes, dtype=float)
    K, n_nodes = modes.shape
    with open(path, "wb") as fh:
        fh.write(BASIS_MAGIC)
        fh.write(struct.pack("<II", K, n_nodes))
        fh.write(struct.pack("<d", float(total_energy)))
        fh.write(np.asarray(mean_field, dtype="<f8").tobytes())
        fh.write(np.asarray(eigenvalues, dtype="<f8").tobytes())
        fh.write(np.asarray(quadrature, dtype="<f8").tobytes())
        fh.write(modes.astype("<f8").tobytes())


def read_basis(path):
    with open(path, "rb") as fh:
        _expect_magic(fh, BASIS_MAGIC, path)
        K, n_nodes = struct.unpack("<II", fh.read(8))
        (total_energy,) = struct.unpack("<d", fh.read(8))
        mean = np.frombuffer(fh.read(8 * n_nodes), dtype="<f8").copy()
        vals = np.frombuffer(fh.read(8 * K), dtype="<f8").copy()
        quad = np.frombuffer(fh.read(8 * n_nodes), dtype="<f8").copy()
        modes = np.frombuffer(fh.read(8 * K * n_nodes), dtype="<f8").reshape(K, n_nodes).copy()
    return mean, modes, vals, quad, total_energy


def write_coeffs(path, beta) -> None:
    beta = np.asarray(beta, dtype=float)
    K, n, T = beta.shape
    with open(path, "wb") as fh:
        fh.write(COEFF_MAGIC)
        fh.write(struct.pack("<III", K, n, T))
        fh.write(beta.astype("<f8").tobytes())


def read_coeffs(path) -> np.ndarray:
    with open(path, "rb") as fh:
        _expect_magic(fh, COEFF_MAGIC, path)
        K, n, T = struct.unpack("<III", fh.read(12))
        beta = np.frombuffer(fh.read(8 * K * n * T), dtype="<f8")
    return beta.reshape(K, n, T).copy()


def write_gp_records(path, records, p: int) -> None:
    """records is a (K, T) nested list of (mu, sigma2, nugget, eta) tuples."""
    K = len(records)
    T = len(records[0]) if K else 0
    rows = np.empty((K * T, 3 + p))
    for k in range(K):
        for t in range(T):
            mu, sigma2, nugget, eta = records[k][t]
            rows[k * T + t, 0] = mu
            rows[k * T + t, 1] = sigma2
            rows[k * T + t, 2] = nugget
            rows[k * T + t, 3:] = eta
    with open(path, "wb") as fh:
        fh.write(GP_MAGIC)
        fh.write(struct.pack("<III", K, T, p))
        fh.write(rows.astype("<f8").tobytes())


def read_gp_records(path):
    with open(path, "rb") as fh:
        _expect_magic(fh, GP_MAGIC, path)
        K, T, p = struct.unpack("<III", fh.read(12))
        rows = np.frombuffer(fh.read(8 * K * T * (3 + p)), dtype="<f8").reshape(K * T, 3 + p)
    records = []
    for k in range(K):
        records.append(
            [
                (float(r[0]), float(r[1]), float(r[2]), r[3:].copy())
                for r in rows[k * T : (k + 1) * T]
            ]
        )
    return records
