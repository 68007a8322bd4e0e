"""Training and prediction orchestration.

Training labels every case by its extracted spreading angle, optionally
fits the jet/swirl tree and partitions the corpus, then per class and
variable: common grid selection, rescaling, basis extraction, and one
independent GP fit per (mode, timestep) coefficient series. Prediction
routes a new design through the tree, krigs every coefficient, assembles
the field and its pointwise variance on the design's own geometry, and
attaches scalar metrics with confidence intervals.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from hashlib import sha1
from pathlib import Path

import numpy as np

from . import cpod, diagnostics, kriging, storage, tree as treemod
from .commongrid import (
    CommonGrid,
    RegionBox,
    RegionMap,
    build_region_map,
    partition_domain,
    rescale_case_to_common,
    resample_to_case,
    select_common_grid,
)
from .design import DesignPoint, DesignSpace, Parameter, normalize
from .errors import CorpusError, ModelMissing
from .oracle import SWIRL_ANGLE_DEG, VARIABLES, AxisymGrid, SnapshotSeries, make_case_grid

log = logging.getLogger(__name__)

__all__ = ["PipelineConfig", "EmulatorModel", "EmulationResult", "train", "load_corpus",
           "predict_field", "predict_scalar", "save_model", "load_model"]

MANIFEST_FORMAT = "cpodem-model/1"


@dataclass
class PipelineConfig:
    energy_target: float = 0.99
    nugget: float = 1e-8
    scalar_nugget: float = 1e-8
    gp_n_starts: int = 6
    gp_seed: int = 0
    k_neighbors: int = 10
    predict_neighbors: int = 4  # tighter stencil for the outbound mapping
    idw_power: int = 2
    partition: bool = True
    min_class_size: int = 2
    variables: tuple = VARIABLES
    tree_max_depth: int = 4
    tree_min_leaf: int = 2
    center: bool = True
    solver: str = "auto"
    ci_level: float = 0.80
    n_jobs: int = 0  # 0 = auto (min(4, cpu count), capped by CPODEM_THREADS)

    def to_dict(self):
        d = asdict(self)
        d["variables"] = list(self.variables)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["variables"] = tuple(d.get("variables", VARIABLES))
        return cls(**d)


def effective_jobs(n_jobs: int) -> int:
    if n_jobs <= 0:
        n_jobs = min(4, os.cpu_count() or 1)
    cap = os.environ.get("CPODEM_THREADS")
    if cap:
        n_jobs = min(n_jobs, max(1, int(cap)))
    return n_jobs


@dataclass
class ClassModel:
    name: str
    case_indices: list
    designs_norm: np.ndarray
    common: CommonGrid
    case_boxes: list  # per member case, five RegionBoxes
    bases: dict
    coeffs: dict
    gps: dict  # variable -> [k][t] GPModel


@dataclass
class EmulatorModel:
    space: DesignSpace
    designs: list
    labels: list
    metrics: list  # per case (h, alpha)
    partitioned: bool
    tree: treemod.TreeNode
    classes: dict
    scalar_gps: dict
    config: PipelineConfig
    grid_spec: tuple
    dt: float

    def class_of(self, d: DesignPoint) -> str:
        if not self.partitioned:
            return "pooled"
        coords = normalize(d, self.space).coords
        return treemod.classify(self.tree, coords)


@dataclass
class EmulationResult:
    grid: AxisymGrid
    dt: float
    fields: dict  # variable -> (T, n_nodes)
    variance_fields: dict
    classification: str
    metrics: dict  # {"thickness": {"mean", "ci"}, "angle": {...}}


def load_corpus(corpus_dir):
    """Read every case_* directory; returns (designs, series list)."""
    corpus_dir = Path(corpus_dir)
    case_dirs = sorted(p for p in corpus_dir.iterdir() if p.is_dir())
    if not case_dirs:
        raise CorpusError(f"no case directories under {corpus_dir}")
    designs, serieses = [], []
    for cd in case_dirs:
        d, series, _ = storage.read_case(cd)
        designs.append(d)
        serieses.append(series)
    return designs, serieses


def _check_corpus(designs, serieses, variables):
    if len(designs) != len(serieses) or not designs:
        raise CorpusError("corpus is empty or designs/series do not line up")
    T = serieses[0].n_snapshots
    dt = serieses[0].dt
    for i, s in enumerate(serieses):
        for v in variables:
            if v not in s.data:
                raise CorpusError(f"case {i} lacks variable {v!r}")
        if s.n_snapshots != T:
            raise CorpusError(f"case {i} has {s.n_snapshots} snapshots, expected {T}")
        if abs(s.dt - dt) > 1e-15 * max(dt, 1.0):
            raise CorpusError(f"case {i} has dt={s.dt}, expected {dt}")
    return T, dt


def _fit_coeff_series(designs_norm, beta_kt, nugget, n_starts, seed):
    """Independent GP per timestep for one mode.

    The first timestep gets the full multi-start; later ones warm-start
    from the previous optimum plus a single fresh start, which tracks the
    smooth drift of the correlation lengths along time at a fraction of
    the cost.
    """
    out = []
    warm = None
    for t in range(beta_kt.shape[1]):
        starts = n_starts if warm is None else 1
        model = kriging.fit_mle(
            designs_norm, beta_kt[:, t], nugget=nugget, n_starts=starts,
            seed=seed, warm_start=warm,
        )
        if not model.degenerate:
            warm = np.log(model.eta)
        out.append(model)
    return out


def _train_class(name, indices, designs, serieses, space, config) -> ClassModel:
    members = [serieses[i] for i in indices]
    member_designs = [designs[i] for i in indices]
    common = select_common_grid([s.grid for s in members], member_designs)
    case_boxes = [partition_domain(s.grid, d) for s, d in zip(members, member_designs)]
    rescaled = []
    for s, d in zip(members, member_designs):
        rmap = build_region_map(common, d)
        rescaled.append(
            rescale_case_to_common(s, rmap, common, k=config.k_neighbors, power=config.idw_power)
        )
    designs_norm = np.array([normalize(d, space).coords for d in member_designs])
    bases, coeff_tables = {}, {}
    for var in config.variables:
        S, mean = cpod.assemble_ensemble(rescaled, var, center=config.center)
        basis, coeffs = cpod.compute_basis(
            S,
            common.grid.cell_area,
            mean_field=mean,
            energy_target=config.energy_target,
            solver=config.solver,
            common=common,
            variable=var,
            n_cases=len(members),
        )
        bases[var] = basis
        coeff_tables[var] = coeffs
        log.info("class %s variable %s: K=%d modes", name, var, basis.K)

    # one GP per (variable, mode, timestep); modes fan out across workers
    tasks = [(var, k) for var in config.variables for k in range(coeff_tables[var].K)]
    jobs = effective_jobs(config.n_jobs)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_fit_coeff_series, designs_norm, coeff_tables[var].beta[k],
                            config.nugget, config.gp_n_starts, config.gp_seed)
                for var, k in tasks
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            _fit_coeff_series(designs_norm, coeff_tables[var].beta[k],
                              config.nugget, config.gp_n_starts, config.gp_seed)
            for var, k in tasks
        ]
    gps = {var: [] for var in config.variables}
    for (var, _), series_models in zip(tasks, results):
        gps[var].append(series_models)
    return ClassModel(
        name=name,
        case_indices=list(indices),
        designs_norm=designs_norm,
        common=common,
        case_boxes=case_boxes,
        bases=bases,
        coeffs=coeff_tables,
        gps=gps,
    )


def train(designs, serieses, space: DesignSpace, config: PipelineConfig = None,
          out_dir=None) -> EmulatorModel:
    """Train the full emulator; optionally archive it to out_dir."""
    config = config or PipelineConfig()
    T, dt = _check_corpus(designs, serieses, config.variables)
    grid_spec = (serieses[0].grid.nx, serieses[0].grid.nr)

    metrics = []
    labels = []
    for d, s in zip(designs, serieses):
        h, alpha = diagnostics.extract_film_metrics(s.data["density"], s.grid, d)
        metrics.append((h, alpha))
        labels.append("swirl" if alpha > SWIRL_ANGLE_DEG else "jet")

    fitted_tree = None
    partitioned = False
    class_members = {"pooled": list(range(len(designs)))}
    if config.partition and len(set(labels)) == 2:
        counts = {lbl: labels.count(lbl) for lbl in set(labels)}
        if min(counts.values()) >= config.min_class_size:
            data = [
                treemod.LabeledDesign(normalize(d, space).coords, lbl)
                for d, lbl in zip(designs, labels)
            ]
            fitted_tree = treemod.fit_tree(
                data, max_depth=config.tree_max_depth, min_leaf=config.tree_min_leaf
            )
            partitioned = True
            class_members = {
                lbl: [i for i, li in enumerate(labels) if li == lbl] for lbl in sorted(counts)
            }
        else:
            log.warning(
                "class sizes %s below min_class_size=%d; falling back to pooled training",
                counts, config.min_class_size,
            )
    elif config.partition:
        log.warning("single-label corpus; training pooled")

    classes = {
        name: _train_class(name, idxs, designs, serieses, space, config)
        for name, idxs in class_members.items()
    }

    designs_norm_all = np.array([normalize(d, space).coords for d in designs])
    scalar_gps = {
        "thickness": kriging.fit_mle(
            designs_norm_all, np.array([m[0] for m in metrics]),
            nugget=config.scalar_nugget, n_starts=max(config.gp_n_starts, 8), seed=config.gp_seed,
        ),
        "angle": kriging.fit_mle(
            designs_norm_all, np.array([m[1] for m in metrics]),
            nugget=config.scalar_nugget, n_starts=max(config.gp_n_starts, 8), seed=config.gp_seed,
        ),
    }

    model = EmulatorModel(
        space=space,
        designs=list(designs),
        labels=labels,
        metrics=metrics,
        partitioned=partitioned,
        tree=fitted_tree,
        classes=classes,
        scalar_gps=scalar_gps,
        config=config,
        grid_spec=grid_spec,
        dt=dt,
    )
    if out_dir is not None:
        save_model(model, out_dir)
    return model


def predict_scalar(model: EmulatorModel, response: str, d: DesignPoint):
    """Point-wise scalar emulation: (mean, one-sided CI halfwidth)."""
    key = {"thickness": "thickness", "film_thickness": "thickness",
           "angle": "angle", "spreading_angle": "angle"}.get(response)
    if key is None:
        raise ValueError(f"unknown response {response!r}")
    if key not in model.scalar_gps:
        raise ModelMissing(f"scalar GP for {key} not trained")
    model.space.validate(d.values)
    coords = np.array(normalize(d, model.space).coords)
    mean, var = kriging.predict(model.scalar_gps[key], coords)
    return mean, kriging.confidence_halfwidth(var, model.config.ci_level)


def predict_field(model: EmulatorModel, d: DesignPoint, grid_spec=None) -> EmulationResult:
    """Emulate the full flowfield of a new design on its own geometry."""
    model.space.validate(d.values)
    label = model.class_of(d)
    if label not in model.classes:
        raise ModelMissing(f"no trained class {label!r}")
    cm = model.classes[label]
    config = model.config

    target_grid = make_case_grid(d, grid_spec or model.grid_spec)
    rmap = build_region_map(cm.common, d)
    coords = np.array(normalize(d, model.space).coords)

    fields = {}
    variance_fields = {}
    for var in config.variables:
        basis = cm.bases[var]
        gps = cm.gps[var]
        K = basis.K
        T = cm.coeffs[var].n_steps
        beta_hat = np.empty((K, T))
        beta_var = np.empty((K, T))
        for k in range(K):
            for t in range(T):
                beta_hat[k, t], beta_var[k, t] = kriging.predict(gps[k][t], coords)
        stack = np.vstack([basis.mean_field[None, :], basis.modes])
        mapped = resample_to_case(
            stack, cm.common, rmap, target_grid,
            k=getattr(config, "predict_neighbors", 4), power=config.idw_power,
        )
        mean_map, modes_map = mapped[0], mapped[1:]
        fields[var] = mean_map[None, :] + beta_hat.T @ modes_map
        variance_fields[var] = beta_var.T @ (modes_map * modes_map)

    h_mean, h_ci = predict_scalar(model, "thickness", d)
    a_mean, a_ci = predict_scalar(model, "angle", d)
    try:
        h_ext, a_ext = diagnostics.extract_film_metrics(fields["density"], target_grid, d)
    except Exception:  # extraction can fail on a poor prediction; keep the GP estimate
        h_ext, a_ext = h_mean, a_mean
    classification = label if model.partitioned else (
        "swirl" if a_mean > SWIRL_ANGLE_DEG else "jet"
    )
    return EmulationResult(
        grid=target_grid,
        dt=model.dt,
        fields=fields,
        variance_fields=variance_fields,
        classification=classification,
        metrics={
            "thickness": {"mean": h_mean, "ci": h_ci, "extracted": h_ext},
            "angle": {"mean": a_mean, "ci": a_ci, "extracted": a_ext},
        },
    )


# ---------------------------------------------------------------- archive


def _boxes_to_json(boxes):
    return [[b.name, b.x0, b.x1, b.r0, b.r1] for b in boxes]


def _boxes_from_json(obj):
    return [RegionBox(name, x0, x1, r0, r1) for name, x0, x1, r0, r1 in obj]


def _gp_to_record(m: kriging.GPModel):
    return (m.mu, m.sigma2, m.nugget, np.asarray(m.eta, dtype=float))


def _gp_from_record(rec, designs_norm, y):
    mu, sigma2, nugget, eta = rec
    degenerate = sigma2 == 0.0
    return kriging.GPModel(
        designs=np.asarray(designs_norm, dtype=float),
        y=np.asarray(y, dtype=float),
        mu=mu,
        sigma2=sigma2,
        eta=np.asarray(eta, dtype=float),
        nugget=nugget,
        degenerate=degenerate,
    )


def save_model(model: EmulatorModel, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": MANIFEST_FORMAT,
        "config": model.config.to_dict(),
        "space": [[p.name, p.lo, p.hi, p.unit] for p in model.space.params],
        "designs": [list(d.values) for d in model.designs],
        "labels": model.labels,
        "metrics": [list(m) for m in model.metrics],
        "partitioned": model.partitioned,
        "grid_spec": list(model.grid_spec),
        "dt": model.dt,
        "tree": treemod.tree_to_dict(model.tree) if model.tree is not None else None,
        "classes": {
            name: {"cases": cm.case_indices, "common_case": cm.common.case_index}
            for name, cm in model.classes.items()
        },
        "scalar_gps": {
            key: {
                "mu": gp.mu,
                "sigma2": gp.sigma2,
                "nugget": gp.nugget,
                "eta": list(map(float, gp.eta)),
                "y": list(map(float, gp.y)),
            }
            for key, gp in model.scalar_gps.items()
        },
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    if model.tree is not None:
        (out_dir / "tree.json").write_text(
            json.dumps(treemod.tree_to_dict(model.tree), sort_keys=True, indent=1)
        )
    for name, cm in model.classes.items():
        cdir = out_dir / name
        cdir.mkdir(exist_ok=True)
        storage.write_grid(cdir / "common_grid.bin", cm.common.grid)
        maps = {
            "common_boxes": _boxes_to_json(cm.common.boxes),
            "case_boxes": [_boxes_to_json(b) for b in cm.case_boxes],
        }
        (cdir / "maps.json").write_text(json.dumps(maps, sort_keys=True, indent=1))
        for var in model.config.variables:
            basis = cm.bases[var]
            storage.write_basis(
                cdir / f"basis_{var}.bin",
                basis.mean_field, basis.modes, basis.eigenvalues,
                basis.quadrature, basis.total_energy,
            )
            storage.write_coeffs(cdir / f"coeffs_{var}.bin", cm.coeffs[var].beta)
            records = [[_gp_to_record(m) for m in row] for row in cm.gps[var]]
            storage.write_gp_records(cdir / f"gp_{var}.bin", records, p=model.space.p)


def load_model(model_dir) -> EmulatorModel:
    model_dir = Path(model_dir)
    manifest = json.loads((model_dir / "manifest.json").read_text())
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ModelMissing(f"unrecognized model format in {model_dir}")
    space = DesignSpace([Parameter(n, lo, hi, u) for n, lo, hi, u in manifest["space"]])
    config = PipelineConfig.from_dict(manifest["config"])
    designs = [DesignPoint(tuple(v)) for v in manifest["designs"]]
    designs_norm_all = np.array([normalize(d, space).coords for d in designs])

    classes = {}
    for name, cls_info in manifest["classes"].items():
        cdir = model_dir / name
        grid = storage.read_grid(cdir / "common_grid.bin")
        maps = json.loads((cdir / "maps.json").read_text())
        common = CommonGrid(
            grid=grid,
            case_index=cls_info["common_case"],
            boxes=_boxes_from_json(maps["common_boxes"]),
        )
        indices = cls_info["cases"]
        designs_norm = designs_norm_all[indices]
        bases, coeffs, gps = {}, {}, {}
        for var in config.variables:
            mean, modes, vals, quad, total = storage.read_basis(cdir / f"basis_{var}.bin")
            cum = np.cumsum(vals)
            bases[var] = cpod.CPODBasis(
                common=common, variable=var, mean_field=mean, modes=modes,
                eigenvalues=vals, energy_fraction=cum / total if total > 0 else cum,
                quadrature=quad, total_energy=total,
            )
            beta = storage.read_coeffs(cdir / f"coeffs_{var}.bin")
            coeffs[var] = cpod.CoeffTable(beta)
            records = storage.read_gp_records(cdir / f"gp_{var}.bin")
            gps[var] = [
                [_gp_from_record(records[k][t], designs_norm, beta[k, :, t])
                 for t in range(beta.shape[2])]
                for k in range(beta.shape[0])
            ]
        classes[name] = ClassModel(
            name=name,
            case_indices=list(indices),
            designs_norm=designs_norm,
            common=common,
            case_boxes=[_boxes_from_json(b) for b in maps["case_boxes"]],
            bases=bases,
            coeffs=coeffs,
            gps=gps,
        )

    scalar_gps = {}
    for key, rec in manifest["scalar_gps"].items():
        scalar_gps[key] = _gp_from_record(
            (rec["mu"], rec["sigma2"], rec["nugget"], np.array(rec["eta"])),
            designs_norm_all, np.array(rec["y"]),
        )

    tree_obj = manifest.get("tree")
    return EmulatorModel(
        space=space,
        designs=designs,
        labels=manifest["labels"],
        metrics=[tuple(m) for m in manifest["metrics"]],
        partitioned=manifest["partitioned"],
        tree=treemod.tree_from_dict(tree_obj) if tree_obj else None,
        classes=classes,
        scalar_gps=scalar_gps,
        config=config,
        grid_spec=tuple(manifest["grid_spec"]),
        dt=manifest["dt"],
    )
