"""Closed-form performance and complexity formulas for lattice decoding.

Covers the Poltyrev error exponent of exact lattice decoding, the
bias-penalized exponent of the stack sequential decoder (fixed and
VNR-scaled bias), the cut-off VNR below which sequential decoding
complexity blows up, and volume-ratio estimates of the search effort.

All logarithms are natural; exponents are in nats per dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .lattice import LatticeBasis

FIXED_BIAS = "fixed"
SCALED_BIAS = "scaled"


class DomainError(ValueError):
    """Argument outside the region where a formula is defined."""


@dataclass(frozen=True)
class ExponentQuery:
    """Arguments of the sequential-decoding exponent.

    ``normalized_bias`` is b/sigma^2 (used in fixed-bias mode); ``delta``
    in (0, 1] parameterizes the scaled-bias mode b_n = (1 - sqrt(delta)) mu_c.
    ``mu_c`` may be a scalar or an array.
    """

    mu_c: float | np.ndarray
    normalized_bias: float = 0.0
    delta: float = 1.0


def _as_positive_array(mu_c, name="mu_c"):
    mu = np.asarray(mu_c, dtype=float)
    if np.any(mu <= 0):
        raise DomainError(f"{name} must be positive")
    return mu


def _scalar_like(value: np.ndarray, template) -> float | np.ndarray:
    return float(value) if np.ndim(template) == 0 else value


def poltyrev_exponent(mu_c):
    """Error exponent of exact lattice decoding at volume-to-noise ratio mu_c.

    Piecewise: 0 for mu_c <= 1 (no reliable decoding below capacity),
    [(mu_c - 1) - ln mu_c]/2 on (1, 2], ln(e mu_c / 4)/2 on (2, 4], and
    mu_c/8 beyond; continuous at the joints.
    """
    mu = _as_positive_array(mu_c)
    out = np.select(
        [mu <= 1.0, mu <= 2.0, mu <= 4.0],
        [
            np.zeros_like(mu),
            0.5 * ((mu - 1.0) - np.log(mu)),
            0.5 * np.log(np.e * mu / 4.0),
        ],
        default=mu / 8.0,
    )
    return _scalar_like(out, mu_c)


def effective_vnr(mu_c, b_n):
    """VNR of the amplified-noise channel seen by the biased stack decoder.

    mu_c (1 - b_n/mu_c)^2; defined for 0 <= b_n <= mu_c.
    """
    mu = _as_positive_array(mu_c)
    bn = np.asarray(b_n, dtype=float)
    if np.any(bn < 0) or np.any(bn > mu):
        raise DomainError("need 0 <= b_n <= mu_c")
    out = mu * (1.0 - bn / mu) ** 2
    return _scalar_like(out, mu_c)


def sequential_exponent(query: ExponentQuery, mode: str):
    """Error exponent of the stack decoder under the given bias mode.

    Fixed bias: the lattice-decoding exponent evaluated at the effective
    VNR (requires b_n < mu_c).  Scaled bias b_n = (1 - sqrt(delta)) mu_c:
    piecewise in delta*mu_c with thresholds 1/delta, 2/delta, 4/delta --
    zero up to 1/delta, so 1/delta is the largest VNR at which reliable
    sequential decoding fails outright.
    """
    mu = _as_positive_array(query.mu_c)
    if mode == FIXED_BIAS:
        bn = float(query.normalized_bias)
        if bn < 0 or np.any(bn >= mu):
            raise DomainError("fixed-bias mode needs 0 <= b_n < mu_c")
        out = np.asarray(poltyrev_exponent(mu * (1.0 - bn / mu) ** 2))
        return _scalar_like(out, query.mu_c)
    if mode == SCALED_BIAS:
        d = float(query.delta)
        if not 0.0 < d <= 1.0:
            raise DomainError("scaled-bias mode needs 0 < delta <= 1")
        x = d * mu
        out = np.select(
            [mu <= 1.0 / d, mu <= 2.0 / d, mu <= 4.0 / d],
            [
                np.zeros_like(x),
                0.5 * ((x - 1.0) - np.log(x)),
                0.5 * np.log(np.e * x / 4.0),
            ],
            default=x / 8.0,
        )
        return _scalar_like(out, query.mu_c)
    raise ValueError(f"unknown bias mode: {mode!r}")


def high_vnr_shift(b_n: float, m: int) -> float:
    """Multiplicative error-bound shift exp(m b_n / 4) of a fixed bias.

    At high VNR the biased exponent is the unbiased one minus b_n/4, so a
    fixed bias right-shifts the error curve by at most this factor (the
    realized shift is smaller at finite VNR).
    """
    if b_n < 0:
        raise DomainError("b_n must be nonnegative")
    return math.exp(m * b_n / 4.0)


def cutoff_vnr(b_n):
    """Smallest VNR with both vanishing error and bounded search effort.

    Closed form b_n + (2/e)(1 + sqrt(b_n e + 1)); the root of
    mu (1 - b_n/mu)^2 = 4/e.  Equals 4/e when the bias is zero.
    """
    bn = np.asarray(b_n, dtype=float)
    if np.any(bn < 0):
        raise DomainError("b_n must be nonnegative")
    out = bn + (2.0 / np.e) * (1.0 + np.sqrt(bn * np.e + 1.0))
    return _scalar_like(out, b_n)


def sk_estimate(basis: LatticeBasis, bias: float, noise_variance: float, depth: int) -> float:
    """Volume-ratio estimate of the depth-k partial points the search can reach.

    Ratio of the k-sphere of squared radius (bias*k + sigma^2 m) to the cell
    volume of the depth-k subtree lattice, i.e. the product of the last k
    diagonal entries of R.  An order-of-magnitude estimator, not a bound.
    """
    m = basis.dimension
    if not 1 <= depth <= m:
        raise ValueError(f"depth must be in [1, {m}]")
    if bias < 0 or noise_variance <= 0:
        raise ValueError("need bias >= 0 and noise_variance > 0")
    k = depth
    log_det = float(np.sum(np.log(np.diag(basis.r_factor)[m - k:])))
    log_sk = (
        0.5 * k * math.log(math.pi)
        - gammaln(0.5 * k + 1.0)
        + 0.5 * k * math.log(bias * k + noise_variance * m)
        - log_det
    )
    return math.exp(log_sk)


@dataclass(frozen=True)
class ComplexityEstimate:
    """Per-depth node estimates s_k and their total m + sum(s_k)."""

    per_depth: np.ndarray
    total: float


def complexity_estimate(basis: LatticeBasis, b_n: float, mu_c: float) -> ComplexityEstimate:
    """Estimated total nodes visited by the stack decoder at VNR mu_c.

    Normalized form of the volume-ratio estimate, intended for a basis
    scaled so the cell volume is (2 pi e)^(m/2): each depth contributes
    pi^(k/2)/Gamma(k/2+1) (b_n k + m)^(k/2) / (mu_c^(k/2) det R_kk),
    and the total adds the m nodes of the decoded path itself.  Tends to
    m as mu_c grows, for any bias.
    """
    if mu_c <= 0:
        raise DomainError("mu_c must be positive")
    if b_n < 0:
        raise DomainError("b_n must be nonnegative")
    m = basis.dimension
    diag = np.diag(basis.r_factor)
    ks = np.arange(1, m + 1, dtype=float)
    # cumulative log det of the bottom-right k x k blocks of R
    log_dets = np.cumsum(np.log(diag[::-1]))
    log_sk = (
        0.5 * ks * math.log(math.pi)
        - gammaln(0.5 * ks + 1.0)
        + 0.5 * ks * np.log(b_n * ks + m)
        - 0.5 * ks * math.log(mu_c)
        - log_dets
    )
    per_depth = np.exp(log_sk)
    return ComplexityEstimate(per_depth=per_depth, total=float(m + per_depth.sum()))
