"""Mean AE per method while one pipeline setting varies, on a fixed synthetic benchmark.

    python scripts/sweep.py --param drift_threshold --values 0.1,0.3,0.5,0.7,0.9
    python scripts/sweep.py --param feature_scaling --values l2,standardize,none
"""

import argparse
import dataclasses
from pathlib import Path

from cltq.corpus import generate_synthetic_bilingual, write_corpus, write_dictionary
from cltq.pipeline import ExperimentConfig, make_config, run_experiment

NAMES = ("source_labeled", "source_unlabeled", "target_unlabeled", "target_test")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--param", required=True,
                        choices=[f.name for f in dataclasses.fields(ExperimentConfig)])
    parser.add_argument("--values", required=True, help="comma-separated")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--samples-per-level", type=int, default=20)
    parser.add_argument("--out", default="runs/sweep")
    args = parser.parse_args()

    out = Path(args.out)
    data_dir = out / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    data = generate_synthetic_bilingual(args.seed)
    for name, corpus in zip(NAMES, data):
        write_corpus(corpus, data_dir / f"{name}.txt")
    write_dictionary(data.dictionary, data_dir / "dictionary.tsv")

    rows = []
    for value in (v.strip() for v in args.values.split(",")):
        # string values are converted like config-file values; the cache is shared across runs
        cfg = make_config(**{n: data_dir / f"{n}.txt" for n in NAMES},
                          dictionary=data_dir / "dictionary.tsv", seed=args.seed,
                          samples_per_level=args.samples_per_level, cache_dir=out / "cache",
                          out=out / f"{args.param}={value}", **{args.param: value})
        result = run_experiment(cfg)
        rows.append((value, {r.method: r.means["ae"] for r in result.summary}))

    methods = sorted(rows[0][1])
    print(f"{args.param:>16}  " + "  ".join(f"{m:>9}" for m in methods))
    for value, means in rows:
        print(f"{value:>16}  " + "  ".join(f"{means[m]:9.4f}" for m in methods))


if __name__ == "__main__":
    main()
