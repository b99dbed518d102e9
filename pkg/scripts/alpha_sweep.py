"""Sweep alpha and report every constant behind the theorem, for the
unbounded example and for a range of ceilings.

Writes ``alpha_sweep.csv`` plus ``alpha_max.csv``.
"""
import argparse
import hashlib
import json
from pathlib import Path

import numpy as np

from markovup import ExampleLaw, alpha_max, audit, sweep
from markovup.artifacts import write_csv

SWEEP_COLUMNS = ("law", "alpha", "m1", "m2", "m3", "mu", "product", "c1", "feasible")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ceilings", type=int, nargs="*", default=[4, 6, 8, 12])
    ap.add_argument("--alpha-hi", type=float, default=0.08)
    ap.add_argument("--points", type=int, default=33)
    ap.add_argument("--out", type=Path, default=Path("out/experiments"))
    args = ap.parse_args(argv)

    laws = {"unbounded": ExampleLaw()}
    laws.update({f"ceiling={c}": ExampleLaw(ceiling=c) for c in args.ceilings})
    alphas = np.linspace(0.0, args.alpha_hi, args.points).tolist()
    rows, stars = [], []
    for name, law in laws.items():
        profile = audit(law)
        for r in sweep(profile, alphas):
            rows.append({"law": name, "alpha": r.alpha, "m1": r.m1_2a, "m2": r.m2_2a,
                         "m3": r.m3_2a, "mu": r.mu_2a, "product": r.product, "c1": r.c1,
                         "feasible": r.feasible})
        stars.append({"law": name, "q_bar": profile.q_bar, "alpha_max": alpha_max(profile)})
        print(f"{name:>12}: q_bar = {profile.q_bar:.6f}, alpha* = {stars[-1]['alpha_max']:.7f}")

    digest = hashlib.sha256(json.dumps(vars(args), default=str, sort_keys=True).encode()).hexdigest()
    write_csv(args.out / "alpha_sweep.csv", SWEEP_COLUMNS, rows, digest)
    write_csv(args.out / "alpha_max.csv", ("law", "q_bar", "alpha_max"), stars, digest)
    print(f"wrote {args.out / 'alpha_sweep.csv'} and {args.out / 'alpha_max.csv'}")


if __name__ == "__main__":
    main()
