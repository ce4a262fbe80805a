"""Exact per-level bias of clipped and unclipped ACC for a classifier with known rates.

The count of positive decisions in a sample of n documents with k true
positives is Binomial(k, tpr) + Binomial(n - k, fpr); its distribution is
convolved exactly, so no sampling noise enters the numbers.

    python scripts/clipping_bias.py --tpr 0.8 --fpr 0.2 --n 200
"""

import argparse

import numpy as np
from scipy.stats import binom

from cltq.evaluation import DEFAULT_LEVELS, positives_for


def decision_count_pmf(k, n, tpr, fpr):
    return np.convolve(binom.pmf(np.arange(k + 1), k, tpr), binom.pmf(np.arange(n - k + 1), n - k, fpr))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tpr", type=float, default=0.8)
    parser.add_argument("--fpr", type=float, default=0.2)
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--samples", type=int, default=100, help="samples per level, for the standard error")
    args = parser.parse_args()

    print(f"{'level':>6} {'bias(clipped)':>14} {'bias(raw)':>10} {'se(mean)':>9}")
    for p in DEFAULT_LEVELS:
        k = positives_for(p, args.n)
        pmf = decision_count_pmf(k, args.n, args.tpr, args.fpr)
        raw = (np.arange(args.n + 1) / args.n - args.fpr) / (args.tpr - args.fpr)
        clipped = np.clip(raw, 0, 1)
        mean = pmf @ clipped
        se = np.sqrt(pmf @ (clipped - mean) ** 2 / args.samples)
        print(f"{p:6.2f} {mean - k / args.n:+14.5f} {pmf @ raw - k / args.n:+10.1e} {se:9.4f}")


if __name__ == "__main__":
    main()
