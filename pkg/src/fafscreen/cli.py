"""Command-line interface exposing the full screening pipeline.

Exit codes: 0 success, 2 usage error, 3 data error, 4 solver convergence
error. Any module error is reported as one machine-readable JSON line on
stderr. Randomized commands default to --seed 20140 so published runs are
reproducible without extra flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, DataError, FafScreenError, SchemaError
from .features_io import FeatureRow, FeatureTable, read_features, read_manifest, write_features
from .grid import FEATURE_NAMES, GridSpec, compute_features
from .image import Laterality, load_image
from .mccv import (
    SplitSpec,
    mccv_outputs_to_json,
    reports_to_table_csv,
    run_mccv,
    scale_factor_sweep,
)
from .separation import distance_profile, hd_curve, monitor_trajectory
from .serialize import dumps_json, format_float
from .svm import (
    Dataset,
    Disease,
    KernelKind,
    KernelSpec,
    SvmConfig,
    decision_value,
    load_model,
    save_model,
    signed_distance,
    train,
)
from .synth import SynthParams, LesionParams, generate_dataset, write_dataset

DEFAULT_SEED = 20140


def _ratio_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("ratio list is empty")
    return values


def _kernel_spec(kernel: str, sf: float) -> KernelSpec:
    return KernelSpec.linear() if kernel == "linear" else KernelSpec.rbf(sf)


def _svm_config(args, kernel: str | None = None, sf: float | None = None) -> SvmConfig:
    kernel = kernel if kernel is not None else args.kernel
    sf = sf if sf is not None else args.sf
    return SvmConfig(
        kernel=_kernel_spec(kernel, sf),
        box_constraint=args.C,
        kkt_tolerance=args.tolerance,
        max_passes=args.max_passes,
        standardize=args.standardize,
    )


def _add_svm_flags(parser: argparse.ArgumentParser, with_kernel: bool = True) -> None:
    if with_kernel:
        parser.add_argument("--kernel", choices=["linear", "rbf"], default="rbf")
        parser.add_argument("--sf", type=float, default=2.75, help="RBF scale factor")
    parser.add_argument("--C", type=float, default=1.0, help="box constraint")
    parser.add_argument("--tolerance", type=float, default=1e-3, help="KKT tolerance")
    parser.add_argument("--max-passes", type=int, default=100_000)
    parser.add_argument(
        "--standardize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="z-score features with training statistics",
    )


def _load_table(path: str) -> FeatureTable:
    return read_features(Path(path).read_bytes())


def _write_output(path: str | None, payload: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.write(payload.decode("utf-8"))
    else:
        Path(path).write_bytes(payload)


def _grid_from_args(args) -> GridSpec:
    return GridSpec(
        args.cx, args.cy, args.r1, args.r2, args.r3, Laterality.parse(args.laterality)
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_features(args) -> int:
    img = load_image(Path(args.image).read_bytes())
    grid = _grid_from_args(args)
    features = compute_features(img, grid)
    disease = Disease.parse(args.disease)
    row = FeatureRow(
        sample_id=args.id or Path(args.image).stem,
        label=args.label,
        disease=disease,
        values=features.values,
    )
    if args.out:
        out = Path(args.out)
        existing = read_features(out.read_bytes()).rows if out.exists() else ()
        table = FeatureTable((*existing, row))
        out.write_bytes(write_features(table))
    else:
        sys.stdout.write(write_features(FeatureTable((row,))).decode("utf-8"))
    return 0


def cmd_featurize_manifest(args) -> int:
    manifest_path = Path(args.manifest)
    base_dir = Path(args.images_dir) if args.images_dir else manifest_path.parent
    entries = read_manifest(manifest_path.read_bytes(), base_dir=base_dir)
    rows = []
    for entry in entries:
        img = load_image(Path(entry.filename).read_bytes())
        features = compute_features(img, entry.grid)
        rows.append(
            FeatureRow(
                sample_id=Path(entry.filename).stem,
                label=entry.label,
                disease=entry.disease,
                values=features.values,
            )
        )
    _write_output(args.out, write_features(FeatureTable(tuple(rows))))
    return 0


def cmd_train(args) -> int:
    data = _load_table(args.features).to_dataset()
    model = train(data, _svm_config(args), seed=args.seed)
    Path(args.out).write_bytes(save_model(model))
    return 0


def cmd_predict(args) -> int:
    model = load_model(Path(args.model).read_bytes())
    table = _load_table(args.features)
    lines = ["id,label,decision_value,signed_distance"]
    for row in table.rows:
        x = np.array(row.values, dtype=np.float64)
        f = decision_value(model, x)
        dist = signed_distance(model, x)
        label = 1 if f >= 0.0 else -1
        lines.append(f"{row.sample_id},{label},{format_float(f)},{format_float(dist)}")
    _write_output(args.out, ("\n".join(lines) + "\n").encode("utf-8"))
    return 0


def cmd_mccv(args) -> int:
    data = _load_table(args.features).to_dataset()
    rows = []
    for ratio in args.ratios:
        split = SplitSpec(train_fraction=ratio, iterations=args.iterations, base_seed=args.seed)
        row: dict = {"split_ratio": ratio}
        if args.kernel in ("linear", "both"):
            row["linear"] = run_mccv(
                data, _svm_config(args, kernel="linear"), split, threads=args.threads
            )
        if args.kernel in ("rbf", "both"):
            if args.sf_grid:
                sweep = scale_factor_sweep(
                    data, args.sf_grid, split,
                    box_constraint=args.C, kkt_tolerance=args.tolerance,
                    max_passes=args.max_passes, standardize=args.standardize,
                    threads=args.threads,
                )
                best = next(r for r in sweep.rows if r.scale_factor == sweep.best_scale_factor)
                row["sf"] = best.scale_factor
                row["rbf"] = best.report
            else:
                row["sf"] = args.sf
                row["rbf"] = run_mccv(
                    data, _svm_config(args, kernel="rbf"), split, threads=args.threads
                )
        rows.append(row)
    _write_output(args.out_table, reports_to_table_csv(rows))
    if args.out_confusion:
        Path(args.out_confusion).write_bytes(mccv_outputs_to_json(rows))
    return 0


def cmd_sweep_sf(args) -> int:
    data = _load_table(args.features).to_dataset()
    split = SplitSpec(train_fraction=args.ratio, iterations=args.iterations, base_seed=args.seed)
    sweep = scale_factor_sweep(
        data, args.sf_list, split,
        box_constraint=args.C, kkt_tolerance=args.tolerance,
        max_passes=args.max_passes, standardize=args.standardize, threads=args.threads,
    )
    lines = ["sf,train_acc_mean,train_acc_std,test_acc_mean,test_acc_std,best"]
    for row in sweep.rows:
        rep = row.report
        lines.append(
            ",".join(
                [
                    format_float(row.scale_factor),
                    format_float(rep.train_acc_mean), format_float(rep.train_acc_std),
                    format_float(rep.test_acc_mean), format_float(rep.test_acc_std),
                    "1" if row.scale_factor == sweep.best_scale_factor else "0",
                ]
            )
        )
    _write_output(args.out, ("\n".join(lines) + "\n").encode("utf-8"))
    return 0


def cmd_analyze(args) -> int:
    data = _load_table(args.features).to_dataset()
    cfg = _svm_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    profile_split = SplitSpec(
        train_fraction=args.profile_ratio, iterations=args.iterations, base_seed=args.seed
    )
    profile = distance_profile(data, cfg, profile_split, threads=args.threads)
    (out_dir / "distance_profile.csv").write_bytes(profile.to_csv())

    curve = hd_curve(
        data, cfg, args.ratios, args.iterations, args.seed, bins=args.bins, threads=args.threads
    )
    (out_dir / "hd_curve.csv").write_bytes(curve.to_csv())

    checks = []
    violations = 0
    for pt in curve.points:
        for membership, h, pe_root, check in (
            ("train", pt.h_train, pt.root_acc_train, pt.chernoff_train),
            ("test", pt.h_test, pt.root_acc_test, pt.chernoff_test),
        ):
            if not check.holds:
                violations += 1
            checks.append(
                {
                    "split_ratio": pt.train_fraction,
                    "membership": membership,
                    "h": h,
                    "root_accuracy": pe_root,
                    "fraction": h / pe_root,
                    "holds": check.holds,
                    "margin": check.margin,
                }
            )
    report = {"bins": args.bins, "violations": violations, "checks": checks}
    (out_dir / "chernoff.json").write_bytes((dumps_json(report, indent=2) + "\n").encode("utf-8"))
    return 0


def cmd_monitor(args) -> int:
    model = load_model(Path(args.model).read_bytes())
    table = _load_table(args.visits)
    visits = [np.array(row.values, dtype=np.float64) for row in table.rows]
    result = monitor_trajectory(model, visits, epsilon=args.epsilon)
    doc = {
        "distances": list(result.distances),
        "slope": result.slope,
        "trend": result.trend.value,
    }
    sys.stdout.write(dumps_json(doc, indent=2) + "\n")
    return 0


def _params_from_json(path: str | None, seed_override: int | None) -> SynthParams:
    kwargs: dict = {}
    if path:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise SchemaError("synth params JSON must be an object")
        simple = {
            "image_size", "n_healthy", "n_diseased", "background_level",
            "foveal_dip_depth", "noise_sigma", "outer_radius", "seed",
        }
        for key, value in doc.items():
            if key in simple:
                kwargs[key] = value
            elif key == "disease_mix":
                kwargs["disease_mix"] = {Disease.parse(k): float(v) for k, v in value.items()}
            elif key == "lesions":
                kwargs["lesions"] = {
                    Disease.parse(k): LesionParams(
                        count_range=tuple(v["count_range"]),
                        radius_range=tuple(v["radius_range"]),
                        contrast_range=tuple(v["contrast_range"]),
                    )
                    for k, v in value.items()
                }
            else:
                raise SchemaError(f"unknown synth parameter {key!r}")
    if seed_override is not None:
        kwargs["seed"] = seed_override
    try:
        return SynthParams(**kwargs)
    except TypeError as exc:
        raise SchemaError(f"bad synth parameters: {exc}") from None


def cmd_synth(args) -> int:
    params = _params_from_json(args.params, args.seed)
    dataset = generate_dataset(params)
    manifest = write_dataset(dataset, args.out)
    sys.stdout.write(f"{manifest}\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        Path(args.data),
        frontend_dir=Path(args.frontend) if args.frontend else None,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fafscreen",
        description="FAF-image screening: sector features, SVM training, MCCV evaluation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="compute the 18 sector statistics of one image")
    p.add_argument("--image", required=True)
    p.add_argument("--cx", type=float, required=True)
    p.add_argument("--cy", type=float, required=True)
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--r3", type=float, required=True)
    p.add_argument("--laterality", required=True, help="OD or OS")
    p.add_argument("--id", default=None, help="sample id (default: image stem)")
    p.add_argument("--label", type=int, choices=[1, -1], default=-1)
    p.add_argument("--disease", default="NONE")
    p.add_argument("--out", default=None, help="append to this feature CSV instead of stdout")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("featurize-manifest", help="batch feature extraction from a manifest CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--images-dir", default=None, help="base directory for manifest filenames")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize_manifest)

    p = sub.add_parser("train", help="train an SVM on a feature CSV")
    p.add_argument("--features", required=True)
    _add_svm_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify feature rows with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("mccv", help="Monte Carlo cross-validation over split ratios")
    p.add_argument("--features", required=True)
    p.add_argument("--ratios", type=_ratio_list, default=[0.8])
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--kernel", choices=["linear", "rbf", "both"], default="both")
    p.add_argument("--sf", type=float, default=2.75)
    p.add_argument(
        "--sf-grid", type=_ratio_list, default=None,
        help="pick the best test-accuracy SF from this grid per ratio",
    )
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=100_000)
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-table", default=None, help="Table-style CSV (default stdout)")
    p.add_argument("--out-confusion", default=None, help="confusion JSON path")
    p.set_defaults(func=cmd_mccv)

    p = sub.add_parser("sweep-sf", help="RBF scale-factor sweep at one split ratio")
    p.add_argument("--features", required=True)
    p.add_argument("--sf-list", type=_ratio_list, required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=100_000)
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep_sf)

    p = sub.add_parser("analyze", help="distance profiles, HD curves, Chernoff report")
    p.add_argument("--features", required=True)
    p.add_argument("--ratios", type=_ratio_list, default=[0.3, 0.5, 0.8])
    p.add_argument("--profile-ratio", type=float, default=0.8)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--bins", type=int, default=64)
    _add_svm_flags(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("monitor", help="signed-distance trajectory over ordered visits")
    p.add_argument("--model", required=True)
    p.add_argument("--visits", required=True, help="feature CSV, rows in visit order")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("synth", help="generate a synthetic labeled image set")
    p.add_argument("--params", default=None, help="JSON file of generator parameters")
    p.add_argument("--seed", type=int, default=None, help="override the params seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the screening HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data", required=True, help="session/model storage directory")
    p.add_argument("--frontend", default=None, help="static UI directory to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        sys.stderr.write(dumps_json({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 4
    except (FafScreenError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(dumps_json({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
