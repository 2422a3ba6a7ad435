"""Seeded unconstrained-AWGN channel in the normalized form y = sqrt(mu_c) x + w.

Every trial draws its randomness from a stream derived deterministically
from (seed, stream label, trial index), so trials are reproducible and
independent of execution order across workers.  The plain y = x + w form
is recovered by setting mu_c = 1 and choosing the noise variance freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeBasis

# Stream labels for deriving independent per-trial generators from one seed.
STREAM_NOISE = 0
STREAM_MESSAGE = 1
STREAM_CODE = 2

# The only supported Gaussian source: numpy's PCG64 bit generator with the
# ziggurat standard-normal sampler.  Named in configs so that recorded runs
# pin the algorithm.
GAUSSIAN_ALGORITHM = "pcg64-ziggurat"


class DimensionMismatchError(ValueError):
    """Vector length disagrees with the lattice dimension."""


@dataclass(frozen=True)
class ChannelInstance:
    """Channel parameters plus the seed all trial streams derive from."""

    dimension: int
    mu_c: float
    noise_variance: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.mu_c <= 0:
            raise ValueError("mu_c must be positive")
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")


@dataclass(frozen=True)
class TransmissionRecord:
    """One channel use: integers z, lattice point x = G z, received y."""

    sent_integers: np.ndarray
    sent_point: np.ndarray
    received: np.ndarray


def stream_rng(seed: int, stream: int, trial_index: int = 0) -> np.random.Generator:
    """Generator for (seed, stream label, trial); bit-identical across runs."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, trial_index)))


def noise_vector(channel: ChannelInstance, trial_index: int) -> np.ndarray:
    """The i.i.d. Gaussian noise realization of one trial."""
    rng = stream_rng(channel.rng_seed, STREAM_NOISE, trial_index)
    return math.sqrt(channel.noise_variance) * rng.standard_normal(channel.dimension)


def transmit(basis: LatticeBasis, z, channel: ChannelInstance,
             trial_index: int) -> TransmissionRecord:
    """Send lattice point G z through the channel for the given trial.

    Returns x = G z and y = sqrt(mu_c) x + w, with w drawn from the
    (seed, trial) noise stream.
    """
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (basis.dimension,):
        raise DimensionMismatchError(
            f"z has shape {z.shape}, expected ({basis.dimension},)"
        )
    if basis.dimension != channel.dimension:
        raise DimensionMismatchError(
            f"basis dimension {basis.dimension} != channel dimension {channel.dimension}"
        )
    x = basis.generator @ z
    y = math.sqrt(channel.mu_c) * x + noise_vector(channel, trial_index)
    return TransmissionRecord(sent_integers=z, sent_point=x, received=y)


def draw_message(m: int, span: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform integer vector over [-span, span]^m.

    Decoding is translation invariant, so a small span loses no generality
    while keeping intermediate magnitudes small.
    """
    if span < 0:
        raise ValueError("span must be nonnegative")
    return rng.integers(-span, span + 1, size=m, dtype=np.int64)
