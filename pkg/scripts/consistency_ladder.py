"""Spot-variance error along the schedule N ~ sqrt(n).

One Heston path per seed is simulated at the finest n and subsampled, so
every rung sees the same latent path.
"""

import argparse

import numpy as np

from svfourier.models import make_heston
from svfourier.simulate import PathSample, SimConfig, simulate
from svfourier.spotvol import EstimatorConfig, estimate_spot_vol

LADDER = ((2**13, 2**6), (2**15, 2**7), (2**17, 2**8), (2**19, 2**9))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4, 5])
    args = p.parse_args()
    model = make_heston()
    n_max = LADDER[-1][0]
    print("seed " + " ".join(f"{f'n=2^{n.bit_length() - 1}':>9}" for n, _ in LADDER))
    for seed in args.seeds:
        full = simulate(model, SimConfig(n=n_max, seed=seed))
        row = []
        for n, N in LADDER:
            step = n_max // n
            sub = PathSample.from_arrays(full.times[::step], full.x[::step], full.v_true[::step])
            est = estimate_spot_vol(sub, model, EstimatorConfig(N=N))
            v = sub.v_true[est.grid_index]
            row.append(np.sqrt(np.mean((est.v_hat - v) ** 2)) / np.sqrt(np.mean(v**2)))
        print(f"{seed:>4} " + " ".join(f"{e:9.3f}" for e in row))


if __name__ == "__main__":
    main()
