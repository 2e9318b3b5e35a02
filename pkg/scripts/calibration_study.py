#!/usr/bin/env python3
"""Fit polynomial degrees 1..4 on one synthetic calibration run and print R^2."""

import argparse

import numpy as np

from mast.temperature import (CalibrationDataset, fit_temperature_model,
                              r_squared, synthesize_calibration)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=4000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    data = synthesize_calibration(args.samples, args.seed)
    hold = np.arange(len(data)) % 10 == 9
    train = CalibrationDataset(data.deltas[~hold], data.tau_stars[~hold])
    print(f"{args.samples} samples (seed {args.seed}), 10% held out")
    print(f"{'degree':>6} {'R2 train':>10} {'R2 holdout':>11}  coefficients")
    for degree in (1, 2, 3, 4):
        model, r2_train = fit_temperature_model(train, degree)
        r2_hold = r_squared(model, data.deltas[hold], data.tau_stars[hold])
        coeffs = ", ".join(f"{c:+.5f}" for c in model.coefficients)
        print(f"{degree:>6} {r2_train:>10.4f} {r2_hold:>11.4f}  [{coeffs}]")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
