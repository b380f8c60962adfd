"""Posterior of (rho, xi, kappa) for simulated Heston paths at the reference parameters.

    python scripts/heston_experiment.py --seeds 0 1 2
    python scripts/heston_experiment.py --n 524288 --N 512   # full scale
"""

from _common import parser, run_experiment


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    summaries = run_experiment("heston", args)
    covered = sum(s["rho"].q025 <= -0.3 <= s["rho"].q975 for s in summaries)
    print(f"rho = -0.3 inside the 95% interval for {covered}/{len(summaries)} seeds")


if __name__ == "__main__":
    main()
