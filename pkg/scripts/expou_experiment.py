"""Posterior of all five parameters for simulated exp-OU paths.

The drift parameters m and mu are weakly informed over a unit horizon; their
marginals are compared with the uniform priors by a Kolmogorov-Smirnov
distance.
"""

import numpy as np
from scipy import stats

from _common import parser, run_experiment
from svfourier import io
from svfourier.inference import PriorSpec


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    run_experiment("expou", args)
    if args.out:
        prior = PriorSpec()
        for seed in args.seeds:
            draws = io.read_chains(f"{args.out}/expou_seed{seed}_chains.csv")
            for p in ("m", "mu"):
                lo, hi = prior.bounds[p]
                ks = stats.kstest(np.asarray(draws[p]), stats.uniform(lo, hi - lo).cdf).statistic
                print(f"seed {seed}: KS distance of {p} to its prior {ks:.3f}")


if __name__ == "__main__":
    main()
