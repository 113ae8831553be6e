"""Paired baseline / Entropy Loss runs on the default blobs experiment.

    python scripts/desk_study.py --seeds 0 1 2 3 4 --out-dir runs/study

Prints one line per seed with the final-50-epoch L1 of both conditions and
writes every run plus a comparison report under ``--out-dir``.
"""

import argparse
import dataclasses
import json
import time
from pathlib import Path

from eloss.experiment import ExperimentConfig, NetworkSpec, OptimizerSpec, compare_runs, dumps, run_experiment
from eloss.loss import EntropyLossConfig
from eloss.entropy import Jitter


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--activation", default="relu")
    p.add_argument("--optimizer", default="adam")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--w-variance", type=float, default=1.0)
    p.add_argument("--w-direction", type=float, default=0.1)
    p.add_argument("--out-dir", default=None)
    args = p.parse_args()

    base = ExperimentConfig(
        network=NetworkSpec(activation=args.activation),
        optimizer=OptimizerSpec(kind=args.optimizer, lr=args.lr),
        entropy=EntropyLossConfig(w_variance=args.w_variance, w_direction=args.w_direction, duplicate_policy=Jitter()),
        epochs=args.epochs,
    )
    wins = 0
    for seed in args.seeds:
        cfg = base.with_seed(seed)
        t0 = time.perf_counter()
        off = run_experiment(cfg.baseline(), write=False)
        on = run_experiment(cfg, write=False)
        report = compare_runs(off, on, labels=("baseline", "entropy_loss"))
        runs = report["runs"]
        lower = runs["entropy_loss"]["final_l1"] < runs["baseline"]["final_l1"]
        wins += lower
        print(
            f"seed {seed}: L1 baseline {runs['baseline']['final_l1']:.4g} "
            f"entropy {runs['entropy_loss']['final_l1']:.4g} lower={lower} "
            f"acc {off.entries[-1].val_metric:.3f}/{on.entries[-1].val_metric:.3f} "
            f"H_final {[round(h, 1) for h in on.entries[-1].layer_entropies]} "
            f"({time.perf_counter() - t0:.1f}s)",
            flush=True,
        )
        if args.out_dir:
            out = Path(args.out_dir) / f"seed_{seed}"
            from eloss.experiment import save_run

            save_run(off, out / "baseline")
            save_run(on, out / "entropy_loss")
            (out / "compare.json").write_text(dumps(report))
    print(f"entropy-loss L1 lower in {wins}/{len(args.seeds)} seeds")


if __name__ == "__main__":
    main()
