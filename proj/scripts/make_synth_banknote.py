#!/usr/bin/env python3
"""Generate a synthetic stand-in for the UCI banknote authentication dataset.

The real dataset (1372 instances, 4 numeric attributes, binary label) is not
redistributable inside this repository, so we ship a synthetic surrogate with
the same shape: two nearly-separable classes with a mildly nonlinear boundary,
class counts 762/610 matching the original. Feature ranges are scaled to
resemble the wavelet-statistics attributes of the original.

Usage: python3 scripts/make_synth_banknote.py > data/banknote_synth.csv
"""
import numpy as np

N0, N1 = 762, 610  # label 0 / label 1 counts, matching the original file
SEED = 20240817

rng = np.random.default_rng(SEED)


def sample_class(n, t_mean):
    # latent discriminant t, nuisance u
    t = rng.normal(t_mean, 1.0, n)
    u = rng.normal(0.0, 1.5, n)
    eps = rng.normal(0.0, 0.3, (4, n))
    f1 = 1.0 * t + 0.25 * t * u + 0.3 * u + eps[0]
    f2 = 2.0 * t - 0.25 * t**2 + 1.5 * u + eps[1]
    f3 = -1.0 * t + 0.5 * t**2 - u + 0.2 * t * u + eps[2]
    f4 = 0.8 * u + eps[3]
    return np.stack([f1, f2, f3, f4], axis=1)


def main():
    x0 = sample_class(N0, +3.3)
    x1 = sample_class(N1, -3.3)
    x = np.vstack([x0, x1])
    y = np.concatenate([np.zeros(N0), np.ones(N1)])
    perm = rng.permutation(len(y))
    x, y = x[perm], y[perm]
    for row, label in zip(x, y):
        print(",".join(f"{v:.5f}" for v in row) + f",{int(label)}")


if __name__ == "__main__":
    main()
