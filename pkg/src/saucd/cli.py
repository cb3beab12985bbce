"""Command-line front end.

Subcommands: spectrum | compare | filter | distort | train | evaluate |
check-psd | simulate-study. All randomness flows from --seed; report
commands write a rendered figure next to their delimited output unless
--no-plot is given. Worker parallelism is capped by SAUCD_THREADS.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .evaluation import (
    correlation_report,
    load_annotations,
    mos_table,
    swiss_tournament,
    write_correlation_csv,
)
from .laplacian import build_laplacian, check_psd
from .mesh import load_mesh, write_mesh
from .metric import (
    MetricOptions,
    SpectrumWeights,
    compute_spectrum,
    spectrum_saucd,
    spectrum_weighted_saucd,
)
from .baselines import BASELINE_METRICS
from .distortions import DISTORTION_LEVELS, default_suite_specs, distortion_suite, write_manifest
from .spectral import auc, auc_normalize, bandpass_reconstruct, eigendecompose, \
    mesh_spectrum, prune_noise, write_spectrum_csv
from .training import (
    TrainConfig,
    build_training_data,
    kfold_evaluate,
    load_mesh_tree,
    write_fold_report_csv,
)
from ._parallel import thread_map


class _OutputTracker:
    """Records files as they are written so a failed run leaves nothing
    partial behind."""

    def __init__(self):
        self.paths = []

    def register(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(path)
        return path

    def cleanup(self):
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _metric_options(args) -> MetricOptions:
    return MetricOptions(
        prune_portion=args.prune,
        normalize=not getattr(args, "no_normalize", False),
        laplacian=args.laplacian,
    )


def _emit(payload: dict, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True), file=stream)
    else:
        writer = csv.writer(stream)
        for key in sorted(payload):
            writer.writerow([key, payload[key]])


def _add_common(parser, prune_default=0.001, normalize_flag=True):
    parser.add_argument("--laplacian", choices=("topology", "cotan", "revised"),
                        default="revised", help="Laplacian variant (default revised)")
    parser.add_argument("--prune", type=float, default=prune_default,
                        help=f"high-frequency prune portion (default {prune_default})")
    if normalize_flag:
        parser.add_argument("--no-normalize", action="store_true",
                            help="skip AUC normalization")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="stdout summary format")


def _add_train_flags(parser):
    parser.add_argument("--lambda-plcc", type=float, default=0.1)
    parser.add_argument("--lambda-srocc", type=float, default=10.0)
    parser.add_argument("--lambda-regu", type=float, default=1.0)
    parser.add_argument("--learning-rate", type=float, default=0.1)
    parser.add_argument("--iterations", type=int, default=300)
    parser.add_argument("--temperature", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saucd",
        description="Spectral mesh comparison: spectrum-AUC-difference metrics, "
                    "distortion synthesis, weight training, and correlation evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="mesh spectrum as CSV (+ plot)")
    p.add_argument("mesh")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--normalize", action="store_true", help="AUC-normalize the spectrum")
    p.add_argument("--triangulate", action="store_true",
                   help="fan-triangulate polygonal faces on load")
    _add_common(p, prune_default=0.0, normalize_flag=False)
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("compare", help="distance between a test and a ground-truth mesh")
    p.add_argument("test")
    p.add_argument("ground_truth")
    p.add_argument("--out", help="write the result JSON here as well")
    p.add_argument("--weights", help="20-knot weights JSON for the adjusted distance")
    p.add_argument("--baselines", help="comma-separated baseline metrics "
                   f"({','.join(BASELINE_METRICS)})")
    p.add_argument("--triangulate", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled baselines")
    _add_common(p)
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("filter", help="band-pass filter a mesh")
    p.add_argument("mesh")
    p.add_argument("lam_lo", type=float)
    p.add_argument("lam_hi", type=float)
    p.add_argument("--out", required=True, help="output mesh path (.obj or .ply)")
    p.add_argument("--triangulate", action="store_true")
    p.add_argument("--laplacian", choices=("topology", "cotan", "revised"),
                   default="revised")

    p = sub.add_parser("distort", help="synthesize the 6x4 distortion suite")
    p.add_argument("mesh")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--types", help="comma-separated subset of distortion types "
                   f"({','.join(DISTORTION_LEVELS)})")
    p.add_argument("--triangulate", action="store_true")

    p = sub.add_parser("train", help="learn spectrum weights with leave-one-object-out folds")
    p.add_argument("annotations")
    p.add_argument("mesh_dir")
    p.add_argument("--out-weights", required=True, help="averaged weights JSON")
    p.add_argument("--out-report", required=True, help="per-fold report CSV")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("evaluate", help="correlation report of metrics against annotations")
    p.add_argument("annotations")
    p.add_argument("mesh_dir")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--metrics", default="saucd",
                   help="comma-separated: saucd, weighted, "
                   f"{', '.join(BASELINE_METRICS)}")
    p.add_argument("--weights", help="weights JSON (required for 'weighted')")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("check-psd", help="positive-semidefiniteness report of a Laplacian")
    p.add_argument("mesh")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", help="write the report JSON here as well")
    p.add_argument("--triangulate", action="store_true")
    _add_common(p, normalize_flag=False)

    p = sub.add_parser("simulate-study",
                       help="distort a mesh and simulate Swiss-tournament scoring")
    p.add_argument("mesh")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--object-id", default="object1")
    p.add_argument("--subjects", type=int, default=24)
    p.add_argument("--materials", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.05,
                   help="judge noise as a fraction of the latent distance spread")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help="optional hidden weights for the latent distances")
    p.add_argument("--triangulate", action="store_true")
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# Subcommand bodies


def _cmd_spectrum(args, out: _OutputTracker) -> None:
    mesh = load_mesh(args.mesh, triangulate=args.triangulate)
    L = build_laplacian(mesh, args.laplacian)
    spec = mesh_spectrum(mesh, eigendecompose(L))
    spec = prune_noise(spec, args.prune)
    if args.normalize:
        spec = auc_normalize(spec)
    csv_path = out.register(args.out)
    write_spectrum_csv(spec, csv_path)
    if not args.no_plot:
        plotting.save_spectrum_plot(spec, out.register(csv_path.with_suffix(".png")),
                                    title=Path(args.mesh).name)
    _emit(
        {
            "entries": len(spec),
            "auc": auc(spec),
            "lambda_max": float(spec.freqs[-1]),
            "normalized": spec.normalized,
            "out": str(csv_path),
        },
        args.format,
    )


def _cmd_compare(args, out: _OutputTracker) -> None:
    options = _metric_options(args)
    mesh_test = load_mesh(args.test, triangulate=args.triangulate)
    mesh_gt = load_mesh(args.ground_truth, triangulate=args.triangulate)
    spec_test, spec_gt = thread_map(
        lambda m: compute_spectrum(m, options), [mesh_test, mesh_gt]
    )
    result = {
        "test": str(args.test),
        "ground_truth": str(args.ground_truth),
        "options": options.as_dict(),
        "saucd": spectrum_saucd(spec_test, spec_gt),
    }
    if args.weights:
        weights = SpectrumWeights.load(args.weights)
        result["weighted_saucd"] = spectrum_weighted_saucd(spec_test, spec_gt, weights)
    if args.baselines:
        chosen = {}
        for name in args.baselines.split(","):
            name = name.strip()
            if name not in BASELINE_METRICS:
                raise ValueError(
                    f"unknown baseline {name!r}; choose from {sorted(BASELINE_METRICS)}"
                )
            metric = BASELINE_METRICS[name]
            kwargs = {"seed": args.seed} if name == "fscore" else {}
            chosen[name] = metric.fn(mesh_test, mesh_gt, **kwargs)
        result["baselines"] = chosen
    if args.out:
        path = out.register(args.out)
        path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
        if not args.no_plot:
            plotting.save_comparison_plot(
                spec_test, spec_gt, out.register(path.with_suffix(".png")),
                distance=result["saucd"],
            )
    _emit(result, args.format)


def _cmd_filter(args, out: _OutputTracker) -> None:
    mesh = load_mesh(args.mesh, triangulate=args.triangulate)
    L = build_laplacian(mesh, args.laplacian)
    basis = eigendecompose(L)
    filtered = bandpass_reconstruct(mesh, basis, args.lam_lo, args.lam_hi)
    write_mesh(filtered, out.register(args.out))
    print(f"wrote {args.out}")


def _cmd_distort(args, out: _OutputTracker) -> None:
    mesh = load_mesh(args.mesh, triangulate=args.triangulate)
    specs = default_suite_specs(args.seed)
    if args.types:
        wanted = [t.strip() for t in args.types.split(",")]
        for t in wanted:
            if t not in DISTORTION_LEVELS:
                raise ValueError(
                    f"unknown distortion type {t!r}; choose from {sorted(DISTORTION_LEVELS)}"
                )
        specs = [s for s in specs if s.type in wanted]
    out_dir = Path(args.out_dir)
    entries = []
    for spec, distorted in distortion_suite(mesh, args.seed, specs):
        fname = f"{spec.name()}.obj"
        write_mesh(distorted, out.register(out_dir / fname))
        entries.append((fname, spec))
    write_manifest(entries, out.register(out_dir / "manifest.json"))
    print(f"wrote {len(entries)} meshes + manifest to {out_dir}")


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        lambda_plcc=args.lambda_plcc,
        lambda_srocc=args.lambda_srocc,
        lambda_regu=args.lambda_regu,
        learning_rate=args.learning_rate,
        iterations=args.iterations,
        temperature=args.temperature,
        seed=args.seed,
    )


def _cmd_train(args, out: _OutputTracker) -> None:
    annotations = load_annotations(args.annotations)
    meshes = load_mesh_tree(args.mesh_dir, annotations)
    options = _metric_options(args)
    config = _train_config(args)
    data = build_training_data(annotations, meshes, options)
    if len(data.object_ids) >= 2:
        results, averaged = kfold_evaluate(annotations, meshes, config, data=data)
    else:
        # single object: no held-out fold exists, report in-sample
        from .training import FoldResult, train_weights_from_data, _test_correlations

        obj = data.object_ids[0]
        averaged, _ = train_weights_from_data(data, config)
        p, s, t = _test_correlations(data, obj, averaged)
        results = [FoldResult(fold=0, object_id=obj, weights=averaged,
                              plcc=p, srocc=s, krocc=t)]
    averaged.save(out.register(args.out_weights))
    write_fold_report_csv(results, out.register(args.out_report))
    if not args.no_plot:
        plotting.save_weights_plot(
            [(r.object_id, r.weights) for r in results],
            averaged,
            out.register(Path(args.out_report).with_suffix(".png")),
        )
    _emit(
        {
            "folds": len(results),
            "mean_plcc": float(np.mean([r.plcc for r in results])),
            "mean_srocc": float(np.mean([r.srocc for r in results])),
            "mean_krocc": float(np.mean([r.krocc for r in results])),
            "weights": str(args.out_weights),
            "report": str(args.out_report),
        },
        args.format,
    )


def _cmd_evaluate(args, out: _OutputTracker) -> None:
    annotations = load_annotations(args.annotations)
    meshes = load_mesh_tree(args.mesh_dir, annotations)
    options = _metric_options(args)
    mos = mos_table(annotations)
    names = [t.strip() for t in args.metrics.split(",")]
    weights = SpectrumWeights.load(args.weights) if args.weights else None

    spectral = [n for n in names if n in ("saucd", "weighted")]
    specs = {}
    if spectral:
        pairs = sorted(mos)

        def spec_of(mesh):
            return compute_spectrum(mesh, options)

        gt_specs = dict(
            zip(meshes, thread_map(lambda o: spec_of(meshes[o].ground_truth), list(meshes)))
        )
        pair_specs = thread_map(
            lambda p: spec_of(meshes[p[0]].distorted[p[1]]), pairs
        )
        specs = dict(zip(pairs, pair_specs))

    reports = []
    for name in names:
        if name == "saucd":
            scores = {p: spectrum_saucd(specs[p], gt_specs[p[0]]) for p in specs}
            reports.append(correlation_report(scores, mos, metric_name="saucd"))
        elif name == "weighted":
            if weights is None:
                raise ValueError("metric 'weighted' needs --weights")
            scores = {
                p: spectrum_weighted_saucd(specs[p], gt_specs[p[0]], weights)
                for p in specs
            }
            reports.append(correlation_report(scores, mos, metric_name="weighted"))
        elif name in BASELINE_METRICS:
            metric = BASELINE_METRICS[name]
            pairs = sorted(mos)
            kwargs = {"seed": args.seed} if name == "fscore" else {}
            vals = thread_map(
                lambda p: metric.fn(meshes[p[0]].distorted[p[1]],
                                    meshes[p[0]].ground_truth, **kwargs),
                pairs,
            )
            scores = dict(zip(pairs, vals))
            reports.append(
                correlation_report(scores, mos, metric_name=name,
                                   higher_is_better=metric.higher_is_better)
            )
        else:
            raise ValueError(f"unknown metric {name!r}")
    path = out.register(args.out)
    write_correlation_csv(reports, path)
    if not args.no_plot:
        plotting.save_correlation_plot(reports, out.register(path.with_suffix(".png")))
    _emit(
        {
            f"{r.metric_name}_{key}": val
            for r in reports
            for key, val in zip(("plcc", "srocc", "krocc"), r.overall)
        }
        | {"out": str(path)},
        args.format,
    )


def _cmd_check_psd(args, out: _OutputTracker) -> None:
    mesh = load_mesh(args.mesh, triangulate=args.triangulate)
    L = build_laplacian(mesh, args.laplacian)
    report = check_psd(L, tol=args.tol)
    payload = report.as_dict() | {"laplacian": args.laplacian, "mesh": str(args.mesh)}
    if args.out:
        out.register(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
    _emit(payload, args.format)


def _cmd_simulate_study(args, out: _OutputTracker) -> None:
    mesh = load_mesh(args.mesh, triangulate=args.triangulate)
    options = _metric_options(args)
    hidden = SpectrumWeights.load(args.weights) if args.weights else None
    out_dir = Path(args.out_dir)
    mesh_dir = out_dir / "meshes" / args.object_id

    suite = distortion_suite(mesh, args.seed)
    entries = []
    for spec, distorted in suite:
        fname = f"{spec.name()}.obj"
        write_mesh(distorted, out.register(mesh_dir / fname))
        entries.append((fname, spec))
    write_mesh(mesh, out.register(mesh_dir / "gt.obj"))
    write_manifest(entries, out.register(out_dir / "manifest.json"))

    gt_spec = compute_spectrum(mesh, options)
    names = [spec.name() for spec, _ in suite]

    def latent_of(pair):
        _, distorted = pair
        s = compute_spectrum(distorted, options)
        if hidden is not None:
            return spectrum_weighted_saucd(s, gt_spec, hidden)
        return spectrum_saucd(s, gt_spec)

    latent = np.array(thread_map(latent_of, suite))
    out.register(out_dir / "latent.json").write_text(
        json.dumps(dict(zip(names, latent.tolist())), indent=2, sort_keys=True) + "\n"
    )

    spread = float(latent.max() - latent.min())
    noise_sigma = args.noise * spread
    rows = []
    rng = np.random.default_rng([args.seed, 0xC0FFEE])
    for material in range(args.materials):
        for subject in range(args.subjects):
            judge_rng = np.random.default_rng(
                [args.seed, material, subject, 0x5EED]
            )

            def judge(a, b):
                da = latent[a] + judge_rng.normal(0.0, noise_sigma)
                db = latent[b] + judge_rng.normal(0.0, noise_sigma)
                return a if da <= db else b

            scores = swiss_tournament(
                judge, items=len(names), rounds=6,
                seed=int(rng.integers(0, 2**31)),
            )
            for item, score in enumerate(scores):
                rows.append(
                    (args.object_id, names[item], f"m{material}", f"s{material}_{subject}",
                     int(score))
                )
    ann_path = out.register(out_dir / "annotations.csv")
    with open(ann_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["object", "distortion", "material", "subject", "score"])
        writer.writerows(rows)
    _emit(
        {
            "annotations": str(ann_path),
            "mesh_dir": str(out_dir / "meshes"),
            "subjects": args.subjects * args.materials,
            "items": len(names),
            "latent_spread": spread,
        },
        args.format,
    )


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "compare": _cmd_compare,
    "filter": _cmd_filter,
    "distort": _cmd_distort,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "check-psd": _cmd_check_psd,
    "simulate-study": _cmd_simulate_study,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    tracker = _OutputTracker()
    try:
        _COMMANDS[args.command](args, tracker)
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        tracker.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
