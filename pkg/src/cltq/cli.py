"""Command line: ``cltq synth``, ``cltq run`` and ``cltq report``.

Exit codes: 0 success, 1 pipeline failure, 2 configuration or file error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .corpus import generate_synthetic_bilingual, write_corpus, write_dictionary
from .evaluation import ResultsFormatError, format_table, read_results, summarize, write_summary
from .pipeline import PATH_KEYS, ConfigError, PipelineError, make_config, run_experiment, write_config

EXIT_OK, EXIT_PIPELINE, EXIT_CONFIG = 0, 1, 2

SYNTH_FILES = {
    "source_labeled": "source_labeled.txt",
    "source_unlabeled": "source_unlabeled.txt",
    "target_unlabeled": "target_unlabeled.txt",
    "target_test": "target_test.txt",
}


def cmd_synth(args) -> int:
    if args.seed is None:
        print("synth: --seed is required (runs must be reproducible)", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        print(f"synth: cannot create {out}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    data = generate_synthetic_bilingual(args.seed, args.n_labeled, args.n_unlabeled, args.vocab_size)
    try:
        for key, name in SYNTH_FILES.items():
            write_corpus(getattr(data, key), out / name)
        write_dictionary(data.dictionary, out / "dictionary.tsv")
        write_config({**SYNTH_FILES, "dictionary": "dictionary.tsv",
                      "source_language": data.source_labeled.language,
                      "target_language": data.target_test.language,
                      "domain": data.source_labeled.domain,
                      "seed": args.seed}, out / "experiment.cfg")
    except OSError as err:
        print(f"synth: cannot write to {out}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote synthetic benchmark (seed {args.seed}) to {out}")
    return EXIT_OK


OVERRIDES = ("source_labeled", "source_unlabeled", "target_unlabeled", "target_test", "dictionary",
             "projection", "methods", "pivots", "min_support", "k", "alpha", "drift_threshold",
             "oracle_budget", "min_df", "seed", "jobs", "out", "folds_rates", "folds_grid",
             "samples_per_level", "sample_size", "scl_iterations", "feature_scaling")


def cmd_run(args) -> int:
    overrides = {k: getattr(args, k) for k in OVERRIDES}
    if args.no_cache:
        overrides["cache"] = False
    try:
        cfg = make_config(args.config, **overrides)
        output = run_experiment(cfg)
    except ConfigError as err:
        print(f"run: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as err:
        print(f"run: {err}", file=sys.stderr)
        return EXIT_PIPELINE
    print(format_table(output.summary))
    print(f"results: {output.results_path}\nsummary: {output.summary_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    records, seen = [], {}
    try:
        for path in args.results:
            file_records = read_results(path)
            rename = {}
            for method in sorted({r.method for r in file_records}):
                # the same method name in two files is kept apart by file stem
                rename[method] = f"{Path(path).stem}/{method}" if method in seen else method
                seen.setdefault(method, path)
            records += [dataclasses.replace(r, method=rename[r.method]) for r in file_records]
    except OSError as err:
        print(f"report: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ResultsFormatError as err:
        print(f"report: {err}", file=sys.stderr)
        return EXIT_CONFIG
    rows = summarize(records)
    print(format_table(rows))
    if args.out:
        write_summary(rows, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cltq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic bilingual benchmark")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="synthetic")
    p.add_argument("--n-labeled", type=int, default=2000)
    p.add_argument("--n-unlabeled", type=int, default=10000)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the full pipeline and the APP protocol")
    p.add_argument("--config")
    for key in PATH_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key)
    p.add_argument("--projection", choices=("scl", "dci", "both"))
    p.add_argument("--methods", help="comma-separated subset of cc,acc,pcc,pacc")
    p.add_argument("--pivots", type=int, help="number of pivots m")
    p.add_argument("--min-support", type=int, help="minimum pivot document frequency phi")
    p.add_argument("--k", type=int, help="SCL dimensionality")
    p.add_argument("--alpha", type=float, help="Elastic Net mixing for the SCL hard classifier")
    p.add_argument("--drift-threshold", type=float)
    p.add_argument("--oracle-budget", type=int)
    p.add_argument("--min-df", type=int)
    p.add_argument("--scl-iterations", type=int)
    p.add_argument("--feature-scaling", choices=("auto", "l2", "standardize", "none"),
                   help="scaling of projected features before training")
    p.add_argument("--folds-rates", type=int)
    p.add_argument("--folds-grid", type=int)
    p.add_argument("--samples-per-level", type=int)
    p.add_argument("--sample-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="compare results files with significance marks")
    p.add_argument("results", nargs="+")
    p.add_argument("--out", help="also write the summary TSV here")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
