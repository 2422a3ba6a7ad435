"""Shared oracles for decoder verification."""
import itertools
import math

import numpy as np

from latseq.lattice import build_basis


def random_basis(rng, m, min_sv=0.3):
    """Random Gaussian basis, resampled until reasonably conditioned so the
    brute-force boxes stay small."""
    G = rng.normal(size=(m, m))
    while np.linalg.svd(G, compute_uv=False)[-1] < min_sv:
        G = rng.normal(size=(m, m))
    return build_basis(G)


def brute_force_cvp(A, y):
    """Exhaustive closest point over a provably sufficient integer box.

    The box is centered on the rounded least-squares solution with
    half-width K chosen so that sigma_min (K + 0.5) exceeds the rounding
    point's distance: any integer vector outside the box is then farther
    than the best inside, which the final assertion re-checks.
    """
    center = np.rint(np.linalg.solve(A, y)).astype(int)
    d_round = np.linalg.norm(y - A @ center)
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    K = int(np.ceil(d_round / smin - 0.5)) + 1
    best, zbest = np.inf, None
    for ztup in itertools.product(*(range(c - K, c + K + 1) for c in center)):
        z = np.array(ztup)
        d = y - A @ z
        dd = float(d @ d)
        if dd < best:
            best, zbest = dd, z
    assert smin * (K + 0.5) > math.sqrt(best)
    return zbest, best
