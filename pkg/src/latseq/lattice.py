"""Lattice bases, QR geometry, and the mod-p (Construction A) ensemble.

A lattice is the set {G z : z integer} for a full-rank m x m generator
matrix G whose columns are the basis vectors.  The QR factors of G drive
the tree-search decoders, so they are computed once at construction and
cached on the (immutable) basis object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


class SingularBasisError(ValueError):
    """Generator matrix is rank deficient to tolerance."""


class InvalidSpecError(ValueError):
    """Mod-p code specification violates its constraints."""


@dataclass(frozen=True)
class LatticeBasis:
    """Full-rank generator matrix with cached QR factors and cell volume.

    Immutable after construction; safe to share across worker threads or
    processes.  ``generator = q_factor @ r_factor`` with ``r_factor`` upper
    triangular and a strictly positive diagonal, and ``volume`` equal to
    the product of that diagonal (= |det G|).
    """

    dimension: int
    generator: np.ndarray
    q_factor: np.ndarray
    r_factor: np.ndarray
    volume: float

    def __post_init__(self):
        for name in ("generator", "q_factor", "r_factor"):
            getattr(self, name).setflags(write=False)


def build_basis(generator) -> LatticeBasis:
    """Factor a generator matrix into an immutable :class:`LatticeBasis`.

    The QR sign convention (positive R diagonal, enforced by flipping
    columns of Q) fixes the decoders' child ordering deterministically.

    Raises ``SingularBasisError`` if the matrix is not square or is rank
    deficient to tolerance (smallest singular value <= 1e-12 times the
    largest; heavily skewed bases remain acceptable at any dimension).
    """
    G = np.array(generator, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise SingularBasisError(f"generator must be square, got shape {G.shape}")
    m = G.shape[0]
    singular_values = np.linalg.svd(G, compute_uv=False)
    if singular_values[-1] <= 1e-12 * singular_values[0]:
        raise SingularBasisError("generator is rank deficient to tolerance")
    Q, R = np.linalg.qr(G)
    flip = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q = Q * flip
    R = R * flip[:, None]
    volume = float(np.prod(np.diag(R)))
    return LatticeBasis(dimension=m, generator=G, q_factor=Q, r_factor=R, volume=volume)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class ModPCodeSpec:
    """Parameters of a mod-p lattice: kappa * (C + p Z^m).

    C is the linear code over Z_p with systematic generator [I; P]
    (identity on the first ``k_info`` coordinates, ``parity`` rows below).
    ``kappa`` may be left ``None`` and resolved against a target volume at
    construction time.
    """

    m: int
    p: int
    k_info: int
    parity: np.ndarray
    kappa: float | None = None

    def __post_init__(self):
        if not _is_prime(self.p):
            raise InvalidSpecError(f"p={self.p} is not prime")
        if not 0 < self.k_info < self.m:
            raise InvalidSpecError(f"k_info must be in (0, m), got {self.k_info}")
        P = np.asarray(self.parity)
        if P.shape != (self.m - self.k_info, self.k_info):
            raise InvalidSpecError(
                f"parity must be {(self.m - self.k_info, self.k_info)}, got {P.shape}"
            )
        if np.any(P < 0) or np.any(P >= self.p):
            raise InvalidSpecError("parity entries must lie in [0, p)")
        if self.kappa is not None and self.kappa <= 0:
            raise InvalidSpecError("kappa must be positive")
        object.__setattr__(self, "parity", P.astype(np.int64))
        self.parity.setflags(write=False)


def random_parity(m: int, k_info: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform parity matrix over Z_p, fixed once per experiment."""
    return rng.integers(0, p, size=(m - k_info, k_info), dtype=np.int64)


def mod_p_kappa(m: int, p: int, k_info: int, target_volume: float) -> float:
    """Scaling coefficient giving cell volume kappa^m * p^(m-k_info) = target."""
    if target_volume <= 0:
        raise InvalidSpecError("target_volume must be positive")
    return target_volume ** (1.0 / m) / p ** ((m - k_info) / m)


def construct_mod_p(spec: ModPCodeSpec, target_volume: float,
                    reduce_basis: bool = True) -> LatticeBasis:
    """Build a basis of kappa * (C + p Z^m) with the requested cell volume.

    The integer lattice C + p Z^m is spanned (systematic-first ordering) by
    the lifted code columns [e_j; P e_j] followed by p e_i on the parity
    coordinates.  Any volume-correct integer basis of the same lattice is
    acceptable; by default the raw basis is LLL-reduced, which leaves the
    lattice and its volume untouched but keeps the decoders' enumeration
    tractable.  Pass ``reduce_basis=False`` for the raw systematic-first
    basis.
    """
    m, p, k = spec.m, spec.p, spec.k_info
    kappa = mod_p_kappa(m, p, k, target_volume)
    if spec.kappa is not None and not math.isclose(spec.kappa, kappa, rel_tol=1e-9):
        raise InvalidSpecError(
            f"spec kappa {spec.kappa} inconsistent with target volume (need {kappa})"
        )
    B = np.zeros((m, m), dtype=np.int64)
    B[:k, :k] = np.eye(k, dtype=np.int64)
    B[k:, :k] = spec.parity
    B[k:, k:] = p * np.eye(m - k, dtype=np.int64)
    if reduce_basis:
        B = lll_reduce(B)
    return build_basis(kappa * B.astype(float))


def lll_reduce(basis_int: np.ndarray, delta: float = 0.99) -> np.ndarray:
    """LLL-reduce the columns of an integer basis (unimodular transform).

    Returns another integer basis of the same lattice, so the determinant
    is preserved up to sign.  Gram-Schmidt data is kept in floats, which
    is adequate for the dimensions (m <= 64) and entry sizes (p < 2^31)
    used here.
    """
    B = np.array(basis_int, dtype=np.int64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("basis must be square")
    m = B.shape[1]

    def gso():
        Bf = B.astype(float)
        ortho = np.zeros((m, m))
        mu = np.eye(m)
        for i in range(m):
            v = Bf[:, i].copy()
            for j in range(i):
                mu[i, j] = (Bf[:, i] @ ortho[:, j]) / (ortho[:, j] @ ortho[:, j])
                v -= mu[i, j] * ortho[:, j]
            ortho[:, i] = v
        return ortho, mu

    ortho, mu = gso()
    k = 1
    while k < m:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[:, k] -= q * B[:, j]
                mu[k, :j + 1] -= q * mu[j, :j + 1]
        norm_k = ortho[:, k] @ ortho[:, k]
        norm_prev = ortho[:, k - 1] @ ortho[:, k - 1]
        if norm_k >= (delta - mu[k, k - 1] ** 2) * norm_prev:
            k += 1
        else:
            B[:, [k, k - 1]] = B[:, [k - 1, k]]
            ortho, mu = gso()
            k = max(k - 1, 1)
    return B


def vnr(basis: LatticeBasis, noise_variance: float) -> float:
    """Per-dimension volume-to-noise ratio V^(2/m) / (2 pi e sigma^2).

    Equals 1 at the capacity point of the unconstrained AWGN channel.
    """
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    m = basis.dimension
    return math.exp((2.0 / m) * math.log(basis.volume)) / (2.0 * math.pi * math.e * noise_variance)


def effective_radius_sq(basis: LatticeBasis) -> float:
    """Squared radius of the sphere whose volume equals the cell volume.

    Exact finite-m form Gamma(m/2+1)^(2/m) V^(2/m) / pi; approaches
    mu_c sigma^2 m from above as the dimension grows.
    """
    m = basis.dimension
    log_r2 = (2.0 / m) * (gammaln(m / 2.0 + 1.0) + math.log(basis.volume)) - math.log(math.pi)
    return math.exp(log_r2)


def save_basis(basis: LatticeBasis, path) -> None:
    """Write a basis as plain text: first line m, then m rows of m numbers."""
    G = basis.generator
    lines = [str(basis.dimension)]
    for row in G:
        lines.append(" ".join(format(v, ".17g") for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_basis(path) -> LatticeBasis:
    """Read a basis written by :func:`save_basis`."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"empty basis file: {path}")
    m = int(tokens[0])
    vals = [float(t) for t in tokens[1:]]
    if len(vals) != m * m:
        raise ValueError(f"basis file {path}: expected {m * m} entries, got {len(vals)}")
    return build_basis(np.array(vals).reshape(m, m))
