"""Command-line entry points for the full workflow.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, doe, pipeline, sobol, storage, tree as treemod
from .design import DesignPoint, DesignSpace, NormalizedDesign, denormalize, normalize
from .errors import CpodemError
from .oracle import oracle_fields, oracle_metrics


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_space(path) -> DesignSpace:
    return DesignSpace.from_file(path) if path else DesignSpace.default()


def _parse_design(text, space: DesignSpace) -> DesignPoint:
    parts = text.replace(",", " ").split()
    if len(parts) != space.p:
        raise CpodemError(f"expected {space.p} design values, got {len(parts)}")
    return space.point(*(float(v) for v in parts))


def cmd_doe(args) -> int:
    design = doe.generate_design(args.n, args.p, seed=args.seed,
                                 n_restarts=args.restarts, n_iters=args.iters)
    out = Path(args.out)
    lines = [f"# maxpro n={design.n} p={design.p} criterion={design.criterion:.6g}"]
    for row in design.values:
        lines.append("\t".join(f"{v:.10g}" for v in row))
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} (criterion {design.criterion:.6g})")
    return 0


def _read_doe(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(v) for v in line.split()])
    return np.array(rows)


def cmd_simulate(args) -> int:
    space = _load_space(args.design_space)
    if args.doe:
        matrix = _read_doe(args.doe)
    else:
        matrix = doe.generate_design(args.n, space.p, seed=args.seed).values
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, row in enumerate(matrix):
        d = denormalize(NormalizedDesign(tuple(row)), space)
        series = oracle_fields(d, space, grid_spec=(args.nx, args.nr),
                               n_snapshots=args.snapshots, dt=args.dt, seed=args.seed)
        storage.write_case(out / f"case_{i:03d}", series, d, seed=args.seed)
    print(f"wrote {len(matrix)} cases under {out}")
    return 0


def cmd_sensitivity(args) -> int:
    space = _load_space(args.design_space)
    response = {"thickness": "film_thickness", "angle": "spreading_angle"}[args.response]
    predictor = None
    if args.model:
        model = pipeline.load_model(args.model)
        key = "thickness" if args.response == "thickness" else "angle"
        gp = model.scalar_gps[key]

        def predictor(X):
            from . import kriging

            mean, _ = kriging.predict(gp, np.asarray(X, dtype=float))
            return mean

    result = sobol.injector_sensitivity(response, space, N=args.n, seed=args.seed,
                                        predictor=predictor)
    lines = ["parameter\tindex\tci"]
    for name, val, ci in zip(result.names, result.S_main, result.ci_main):
        lines.append(f"{name}\t{val:.6g}\t{ci:.6g}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_classify(args) -> int:
    space = _load_space(args.design_space)
    node = treemod.tree_from_dict(json.loads(Path(args.tree).read_text()))
    d = _parse_design(args.design, space)
    label = treemod.classify(node, normalize(d, space).coords)
    print(label)
    if args.rules:
        print(treemod.format_rules(treemod.extract_rules(node, space)))
    return 0


def cmd_train(args) -> int:
    space = _load_space(args.design_space)
    designs, serieses = pipeline.load_corpus(args.corpus)
    config = pipeline.PipelineConfig(
        energy_target=args.energy,
        nugget=args.nugget,
        partition=not args.pooled,
        gp_seed=args.seed,
        n_jobs=args.jobs,
    )
    model = pipeline.train(designs, serieses, space, config, out_dir=args.out)
    print(f"trained {'partitioned' if model.partitioned else 'pooled'} model -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = pipeline.load_model(args.model)
    d = _parse_design(args.design, model.space)
    result = pipeline.predict_field(model, d)
    payload = {
        "classification": result.classification,
        "thickness": result.metrics["thickness"],
        "angle": result.metrics["angle"],
    }
    print(json.dumps(payload, sort_keys=True, indent=1))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        storage.write_grid(out / "grid.bin", result.grid)
        for var, arr in result.fields.items():
            storage.write_variable(out / f"var_{var}.bin", arr)
            storage.write_variable(out / f"variance_{var}.bin", result.variance_fields[var])
        (out / "metrics.json").write_text(json.dumps(payload, sort_keys=True, indent=1))
        print(f"wrote fields under {out}")
    return 0


def cmd_report(args) -> int:
    model = pipeline.load_model(args.model)
    d = _parse_design(args.design, model.space)
    result = pipeline.predict_field(model, d)
    truth_design, truth, _ = storage.read_case(args.truth)
    if tuple(truth_design.values) != tuple(d.values):
        print("warning: truth case design differs from the requested design", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    x_exit = d.dL + d.L
    grid = truth.grid
    regions = [
        diagnostics.region_overall(grid),
        diagnostics.region_upstream(grid, x_exit),
        diagnostics.region_downstream(grid, x_exit),
    ]
    lines = ["variable\tregion\trmsre_mean_field_pct\trmsre_time_mean_pct"]
    for var in result.fields:
        tm = truth.data[var].mean(axis=0)
        em = result.fields[var].mean(axis=0)
        per_t = []
        for t in range(truth.n_snapshots):
            try:
                per_t.append(diagnostics.rmsre(truth.data[var], result.fields[var],
                                               regions[0], t=t))
            except CpodemError:
                pass
        for reg in regions:
            mean_field = diagnostics.rmsre(tm, em, reg)
            tcol = f"{np.mean(per_t):.4f}" if (reg.name == "overall" and per_t) else "-"
            lines.append(f"{var}\t{reg.name}\t{mean_field:.4f}\t{tcol}")
    (out / "rmsre.tsv").write_text("\n".join(lines) + "\n")

    probes = diagnostics.default_probes(truth.data["density"], grid, d)
    np.savetxt(out / "probes.tsv", probes, delimiter="\t", header="x\tr", comments="# ")
    for variable in ("pressure",):
        tsig = diagnostics.probe_signals(truth, probes, variable)
        from .oracle import SnapshotSeries

        emu_series = SnapshotSeries(grid=result.grid, data=result.fields, dt=result.dt)
        esig = diagnostics.probe_signals(emu_series, probes, variable)
        for kprobe in range(len(probes)):
            f, dens_t = diagnostics.psd(tsig[kprobe] - tsig[kprobe].mean(), truth.dt)
            _, dens_e = diagnostics.psd(esig[kprobe] - esig[kprobe].mean(), result.dt)
            rows = ["freq_hz\tsim\temu"]
            rows += [f"{fi:.6g}\t{a:.6g}\t{b:.6g}" for fi, a, b in zip(f, dens_t, dens_e)]
            (out / f"psd_probe{kprobe}.tsv").write_text("\n".join(rows) + "\n")

    h_t, a_t = diagnostics.extract_film_metrics(truth.data["density"], grid, d)
    mlines = [
        "metric\tsimulated\temulated\tgp_mean\tgp_ci80",
        f"thickness_mm\t{h_t:.6g}\t{result.metrics['thickness']['extracted']:.6g}\t"
        f"{result.metrics['thickness']['mean']:.6g}\t{result.metrics['thickness']['ci']:.6g}",
        f"angle_deg\t{a_t:.6g}\t{result.metrics['angle']['extracted']:.6g}\t"
        f"{result.metrics['angle']['mean']:.6g}\t{result.metrics['angle']['ci']:.6g}",
    ]
    (out / "metrics.tsv").write_text("\n".join(mlines) + "\n")

    for var, arr in result.fields.items():
        storage.write_variable(out / f"emu_{var}.bin", arr)
        storage.write_variable(out / f"uq_{var}.bin",
                               diagnostics.uq_map(result.variance_fields[var]))
    print(f"wrote report under {out}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.model, port=args.port, ui_dir=args.ui, sensitivity_n=args.sensitivity_n)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="cpodem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("doe", help="generate a space-filling design")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--iters", type=int, default=150)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_doe)

    p = sub.add_parser("simulate", help="generate a synthetic flow corpus")
    p.add_argument("--design-space")
    p.add_argument("--doe", help="TSV of normalized design rows")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--nr", type=int, default=48)
    p.add_argument("--snapshots", type=int, default=64)
    p.add_argument("--dt", type=float, default=30e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sensitivity", help="Sobol' indices of a scalar response")
    p.add_argument("--response", choices=("thickness", "angle"), required=True)
    p.add_argument("--n", type=int, default=2**14)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--design-space")
    p.add_argument("--model", help="use a trained model's scalar emulator")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("classify", help="classify a design with a stored tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--design-space")
    p.add_argument("--rules", action="store_true", help="also print the rule list")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train", help="train the emulator from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--design-space")
    p.add_argument("--energy", type=float, default=0.99)
    p.add_argument("--nugget", type=float, default=1e-8)
    p.add_argument("--pooled", action="store_true", help="disable jet/swirl partitioning")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="emulate a flowfield at a new design")
    p.add_argument("--model", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="validation report against a truth case")
    p.add_argument("--model", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="serve the prediction HTTP API")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8777)
    p.add_argument("--ui", help="directory with the built explorer bundle")
    p.add_argument("--sensitivity-n", type=int, default=2**12)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (CpodemError, OSError, ValueError) as exc:
        print(f"cpodem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
