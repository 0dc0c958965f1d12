#!/usr/bin/env python3
"""Print planner outputs across their main knobs.

Three tables: balanced-estimator sample sizes over (epsilon, eta),
LSH band/row plans over (lambda, delta), and EM sample/iteration plans
over (tau, epsilon).  Useful for sizing an experiment before running it.
"""

from __future__ import annotations

import argparse

from entity_sampler.balanced import plan_sample_size
from entity_sampler.blocking import BandWidthError, choose_bands_rows
from entity_sampler.gmm import plan_gmm


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--entities", type=int, default=10)
    ap.add_argument("--delta", type=float, default=0.1)
    args = ap.parse_args()

    print(f"balanced sample size m (n_entities={args.entities}, delta={args.delta})")
    etas = [0.05, 0.1, 0.2]
    print("eps\\eta " + " ".join(f"{h:>12g}" for h in etas))
    for eps in [0.05, 0.1, 0.2]:
        cells = [
            plan_sample_size(eps, args.delta, h, n_entities=args.entities).m
            for h in etas
        ]
        print(f"{eps:>7g} " + " ".join(f"{m:>12d}" for m in cells))

    print(f"\nLSH plan (rows r, bands s) at delta={args.delta}")
    for lam in [0.05, 0.1, 0.2, 0.3, 0.4]:
        try:
            r, s = choose_bands_rows(lam, args.delta)
            print(f"  lambda={lam:<5g} r={r} s={s}  signature length {r * s}")
        except BandWidthError as exc:
            print(f"  lambda={lam:<5g} {exc}")

    print(f"\nEM plan (d=2, k=2, eta_min=0.2, delta={args.delta})")
    print("tau\\eps " + " ".join(f"{e:>12g}" for e in [0.05, 0.1, 0.2]))
    for tau in [0.01, 0.05, 0.1]:
        cells = [
            plan_gmm(e, args.delta, tau, eta_min=0.2, dim=2, k=2)
            for e in [0.05, 0.1, 0.2]
        ]
        print(
            f"{tau:>7g} "
            + " ".join(f"{p.m:>9d}/T{p.iterations}" for p in cells)
        )


if __name__ == "__main__":
    main()
