"""Command line entry point: ``eloss {estimate,train,profile,compare,gen-data}``.

Exit codes: 0 success, 2 invalid arguments, 3 data or degeneracy errors,
1 anything else.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .data import DATASET_KINDS, DatasetSpec, atomic_write_text, generate_dataset, read_dump, read_points, write_dataset
from .entropy import Jitter, entropy_knn, parse_policy
from .errors import DegenerateSampleError, InvalidArgument, InvalidData
from .experiment import (
    ExperimentConfig,
    compare_runs,
    dumps,
    load_config,
    load_record,
    profile_dump,
    run_experiment,
    run_sweep,
    trajectory_table,
)
from .loss import CONVENTIONS, EntropyLossConfig, samples_of

EXIT_OK, EXIT_INTERNAL, EXIT_ARGS, EXIT_DATA = 0, 1, 2, 3


def _policy(text: str, seed: int):
    policy = parse_policy(text)
    if isinstance(policy, Jitter):
        policy = dataclasses.replace(policy, seed=seed)
    return policy


def _emit(obj, out_dir, name):
    text = dumps(obj)
    sys.stdout.write(text)
    if out_dir:
        atomic_write_text(Path(out_dir) / name, text)


def cmd_estimate(args) -> int:
    points = samples_of(read_points(args.file), args.convention)
    est = entropy_knn(points, args.k, _policy(args.duplicates, args.seed))
    _emit(
        {
            "entropy_nats": est.value,
            "n": est.n,
            "d": est.d,
            "k": est.k,
            "sample_convention": args.convention,
            "file": str(args.file),
        },
        args.out_dir,
        "estimate.json",
    )
    return EXIT_OK


def cmd_gen_data(args) -> int:
    spec = DatasetSpec(
        kind=args.kind,
        n_train=args.n_train,
        n_val=args.n_val,
        noise=args.noise,
        seed=args.seed,
        n_classes=args.n_classes,
        input_dim=args.input_dim,
        separation=args.separation,
    )
    train, val = generate_dataset(spec)
    out = Path(args.out_dir or ".")
    note = [f"dataset: {json.dumps(dataclasses.asdict(spec), sort_keys=True)}", "columns: features then target"]
    write_dataset(out / "train.txt", train, note + ["split: train"])
    write_dataset(out / "val.txt", val, note + ["split: validation"])
    atomic_write_text(out / "dataset.json", dumps(dataclasses.asdict(spec)))
    print(dumps({"train": str(out / "train.txt"), "val": str(out / "val.txt"), "n_train": len(train), "n_val": len(val)}), end="")
    return EXIT_OK


_OVERRIDES = {
    # flag dest -> (section, field)
    "kind": ("dataset", "kind"),
    "n_train": ("dataset", "n_train"),
    "n_val": ("dataset", "n_val"),
    "noise": ("dataset", "noise"),
    "n_classes": ("dataset", "n_classes"),
    "input_dim": ("dataset", "input_dim"),
    "separation": ("dataset", "separation"),
    "hidden_width": ("network", "hidden_width"),
    "hidden_count": ("network", "hidden_count"),
    "activation": ("network", "activation"),
    "optimizer": ("optimizer", "kind"),
    "lr": ("optimizer", "lr"),
    "momentum": ("optimizer", "momentum"),
    "k": ("entropy", "k"),
    "w_variance": ("entropy", "w_variance"),
    "w_direction": ("entropy", "w_direction"),
    "convention": ("entropy", "sample_convention"),
    "duplicates": ("entropy", "duplicate_policy"),
    "layers": ("entropy", "layers"),
    "preactivation": ("entropy", "preactivation"),
    "epochs": (None, "epochs"),
    "batch_size": (None, "batch_size"),
}


def build_config(args) -> ExperimentConfig:
    raw = load_config(args.config).to_dict() if args.config else ExperimentConfig().to_dict()
    for dest, (section, name) in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        (raw[section] if section else raw)[name] = value
    if args.no_entropy:
        raw["entropy"].update(w_variance=0.0, w_direction=0.0)
    cfg = ExperimentConfig.from_dict(raw)
    return dataclasses.replace(cfg, out_dir=args.out_dir)


def cmd_train(args) -> int:
    cfg = build_config(args)
    seeds = args.seeds if args.seeds else [args.seed if args.seed is not None else cfg.seed]
    if not args.seeds:
        records = [run_experiment(cfg.with_seed(seeds[0]))]
    else:
        records = run_sweep(cfg, seeds, workers=args.workers)
    summary = []
    for rec in records:
        last = rec.entries[-1]
        summary.append(
            {"seed": rec.seed, "epochs": len(rec.entries), f"final_{rec.metric}": last.val_metric, "final_l1": last.l1}
        )
    if cfg.out_dir:
        atomic_write_text(Path(cfg.out_dir) / "config.json", dumps(cfg.to_dict()))
    print(dumps({"runs": summary, "out_dir": cfg.out_dir}), end="")
    return EXIT_OK


def cmd_profile(args) -> int:
    dump = read_dump(args.dump)
    cfg = EntropyLossConfig(
        k=args.k,
        sample_convention=args.convention,
        duplicate_policy=_policy(args.duplicates, args.seed),
    )
    report = profile_dump(dump, cfg)
    report["file"] = str(args.dump)
    _emit(report, args.out_dir, "profile.json")
    if args.pca:
        table = trajectory_table(dump, 2)
        if args.out_dir:
            atomic_write_text(Path(args.out_dir) / "trajectory.csv", table)
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = load_record(args.record_a), load_record(args.record_b)
    report = compare_runs(a, b, labels=(args.label_a, args.label_b))
    report["files"] = [str(args.record_a), str(args.record_b)]
    _emit(report, args.out_dir, "compare.json")
    return EXIT_OK


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (jitter noise, data, init)")
    p.add_argument("--out-dir", default=None, help="directory for written artifacts")


def _entropy_flags(p, defaults=True):
    p.add_argument("--k", type=int, default=1 if defaults else None, help="neighbor order")
    p.add_argument("--convention", choices=CONVENTIONS, default="batch_rows" if defaults else None)
    p.add_argument(
        "--duplicates",
        default="reject" if defaults else None,
        help="'reject', 'jitter' or 'jitter:<half-width>'",
    )


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eloss", description="Entropy Loss toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="kNN differential entropy of a point file, in nats")
    p.add_argument("file", type=Path)
    _entropy_flags(p)
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as text files")
    p.add_argument("--kind", choices=DATASET_KINDS, default="gaussian_blobs")
    p.add_argument("--n-train", type=int, default=512)
    p.add_argument("--n-val", type=int, default=256)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--n-classes", type=int, default=2)
    p.add_argument("--input-dim", type=int, default=2)
    p.add_argument("--separation", type=float, default=6.0)
    _common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the toy network and write run records")
    p.add_argument("--config", type=Path, default=None, help="JSON experiment config; flags override it")
    p.add_argument("--seeds", type=int, nargs="+", default=None, help="run a sweep, one run per seed")
    p.add_argument("--workers", type=int, default=1, help="parallel threads for a sweep")
    p.add_argument("--no-entropy", action="store_true", help="set both entropy weights to zero")
    p.add_argument("--kind", choices=DATASET_KINDS, default=None)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--n-val", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--n-classes", type=int, default=None)
    p.add_argument("--input-dim", type=int, default=None)
    p.add_argument("--separation", type=float, default=None)
    p.add_argument("--hidden-width", type=int, default=None)
    p.add_argument("--hidden-count", type=int, default=None)
    p.add_argument("--activation", choices=("relu", "tanh"), default=None)
    p.add_argument("--optimizer", choices=("sgd", "momentum", "adam"), default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--w-variance", type=float, default=None)
    p.add_argument("--w-direction", type=float, default=None)
    p.add_argument("--layers", type=int, nargs="+", default=None, help="hidden layers the loss covers")
    p.add_argument("--preactivation", action="store_true", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    _entropy_flags(p, defaults=False)
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("profile", help="per-layer entropy report for an activation dump")
    p.add_argument("dump", type=Path)
    p.add_argument("--pca", action="store_true", help="also write trajectory.csv (shared 2-D PCA basis)")
    _entropy_flags(p)
    _common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("compare", help="compare two run records")
    p.add_argument("record_a", type=Path)
    p.add_argument("record_b", type=Path)
    p.add_argument("--label-a", default="a")
    p.add_argument("--label-b", default="b")
    _common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command != "train" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except InvalidArgument as exc:
        print(f"error: invalid argument: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except DegenerateSampleError as exc:
        print(f"error: degenerate sample: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidData as exc:
        print(f"error: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"error: internal: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
