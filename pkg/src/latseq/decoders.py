"""Tree-search decoders over a QR-triangularized lattice.

``sphere_decode`` solves the closest-point problem exactly; ``stack_decode``
is the best-first sequential decoder whose bias trades error rate against
search effort.  Both fix integer coordinates starting from the last basis
coordinate, and both report how many nodes they examined: the sphere
decoder counts every node whose partial distance it evaluates, the stack
decoder counts every path it extends (pops from the stack).  The stack
count tends to m per decode as the VNR grows.

Decoders are pure functions of (basis, y, config); concurrent decodes may
share one immutable basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .channel import DimensionMismatchError
from .lattice import LatticeBasis


class DecodeStatus(Enum):
    COMPLETED = "completed"
    STACK_OVERFLOW = "stack_overflow"
    NODE_BUDGET_EXCEEDED = "node_budget_exceeded"


_STATUS_FROM_CODE = {
    _kernels.STATUS_COMPLETED: DecodeStatus.COMPLETED,
    _kernels.STATUS_STACK_OVERFLOW: DecodeStatus.STACK_OVERFLOW,
    _kernels.STATUS_NODE_BUDGET: DecodeStatus.NODE_BUDGET_EXCEEDED,
}


@dataclass(frozen=True)
class StackConfig:
    """Bias and budgets for the stack decoder.

    A stack entry beyond ``max_stack_entries`` evicts the minimum-metric
    entry (the search continues, flagged).  ``max_visited_nodes`` bounds
    path extensions; when spent, the best current path is completed by
    successive rounding and the outcome flagged.
    """

    bias: float = 0.0
    max_stack_entries: int = 2 ** 20
    max_visited_nodes: int = 10 ** 6

    def __post_init__(self):
        if self.bias < 0:
            raise ValueError("bias must be nonnegative")
        if self.max_stack_entries < 1 or self.max_visited_nodes < 1:
            raise ValueError("budgets must be positive")


@dataclass(frozen=True)
class DecodeOutcome:
    """Decoded integers, search-effort count, and termination status."""

    decoded: np.ndarray
    visited_nodes: int
    status: DecodeStatus
    distance_sq: float
    best_metric: float | None = None

    def __post_init__(self):
        self.decoded.setflags(write=False)


def _check_inputs(basis: LatticeBasis, y, scale: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (basis.dimension,):
        raise DimensionMismatchError(
            f"y has shape {y.shape}, expected ({basis.dimension},)"
        )
    if scale <= 0:
        raise ValueError("scale must be positive")
    return y


def sphere_decode(basis: LatticeBasis, y, scale: float,
                  max_visited_nodes: int = 10 ** 6) -> DecodeOutcome:
    """Exact argmin of ||y - scale*G z||^2 over integer z.

    ``scale`` is applied to the basis before the search (sqrt(mu_c) in the
    normalized channel model).
    """
    y = _check_inputs(basis, y, scale)
    yprime = basis.q_factor.T @ y
    rmat = scale * basis.r_factor
    z, dist, nodes, code = _kernels.sphere_search(rmat, yprime, max_visited_nodes)
    return DecodeOutcome(
        decoded=z.copy(),
        visited_nodes=int(nodes),
        status=_STATUS_FROM_CODE[code],
        distance_sq=float(dist),
    )


def stack_decode(basis: LatticeBasis, y, scale: float,
                 config: StackConfig) -> DecodeOutcome:
    """Best-first sequential decoding with metric bias*k - residual.

    With zero bias the metric is monotone along paths and the first leaf
    popped is the exact closest point; positive bias favors depth, cutting
    the node count at some cost in error rate.
    """
    y = _check_inputs(basis, y, scale)
    yprime = basis.q_factor.T @ y
    rmat = scale * basis.r_factor
    z, metric, pops, code = _kernels.stack_search(
        rmat, yprime, float(config.bias),
        config.max_stack_entries, config.max_visited_nodes,
    )
    resid = y - scale * (basis.generator @ z)
    return DecodeOutcome(
        decoded=z.copy(),
        visited_nodes=int(pops),
        status=_STATUS_FROM_CODE[code],
        distance_sq=float(resid @ resid),
        best_metric=float(metric),
    )


# ---------------------------------------------------------------------------
# Path bookkeeping in plain Python.  The compiled kernels keep equivalent
# state in flat arrays; these helpers exist for inspection and for testing
# the metric and enumeration contracts directly.

def se_first(center: float) -> tuple[int, int]:
    """First enumeration value (nearest integer, ties toward the smaller
    integer) and the initial zig-zag offset."""
    n0 = math.ceil(center - 0.5)
    return n0, (1 if center > n0 else -1)


def se_next(current: int, step: int) -> tuple[int, int]:
    """Advance the zig-zag cursor: next value and the offset after it."""
    return current + step, -step - (1 if step > 0 else -1)


@dataclass(frozen=True)
class PathNode:
    """A partial path: the last ``depth`` integer coordinates plus search state.

    ``partial[0]`` is the coordinate fixed first (the last basis
    coordinate).  ``metric`` equals bias*depth - residual_prefix for the
    bias it was built with; ``se_center``/``se_current``/``se_step`` hold
    the sibling-enumeration cursor at this node's level.
    """

    depth: int
    partial: tuple[int, ...]
    metric: float
    residual_prefix: float
    parent_residual: float
    se_center: float
    se_current: int
    se_step: int


def root_node() -> PathNode:
    return PathNode(0, (), 0.0, 0.0, 0.0, 0.0, 0, 0)


def path_metric(node: PathNode, bias: float) -> float:
    """bias*k minus the accumulated squared residual of the k fixed rows."""
    return bias * node.depth - node.residual_prefix


def _level_target(rmat: np.ndarray, yprime: np.ndarray, row: int,
                  prefix: tuple[int, ...]) -> float:
    # y'_row minus the contributions of the already-fixed coordinates
    m = rmat.shape[0]
    acc = float(yprime[row])
    for col in range(row + 1, m):
        acc -= float(rmat[row, col]) * prefix[m - 1 - col]
    return acc


def first_child(rmat: np.ndarray, yprime: np.ndarray, node: PathNode,
                bias: float) -> PathNode:
    """Best child of ``node`` in enumeration order, with its metric."""
    m = rmat.shape[0]
    row = m - node.depth - 1
    acc = _level_target(rmat, yprime, row, node.partial)
    center = acc / float(rmat[row, row])
    zval, step = se_first(center)
    inc = (acc - float(rmat[row, row]) * zval) ** 2
    resid = node.residual_prefix + inc
    return PathNode(
        depth=node.depth + 1,
        partial=node.partial + (zval,),
        metric=bias * (node.depth + 1) - resid,
        residual_prefix=resid,
        parent_residual=node.residual_prefix,
        se_center=center,
        se_current=zval,
        se_step=step,
    )


def next_sibling(rmat: np.ndarray, yprime: np.ndarray, node: PathNode,
                 bias: float) -> PathNode:
    """The node after ``node`` at the same level in enumeration order."""
    m = rmat.shape[0]
    row = m - node.depth
    zval, step = se_next(node.se_current, node.se_step)
    acc = _level_target(rmat, yprime, row, node.partial[:-1])
    inc = (acc - float(rmat[row, row]) * zval) ** 2
    resid = node.parent_residual + inc
    return PathNode(
        depth=node.depth,
        partial=node.partial[:-1] + (zval,),
        metric=bias * node.depth - resid,
        residual_prefix=resid,
        parent_residual=node.parent_residual,
        se_center=node.se_center,
        se_current=zval,
        se_step=step,
    )


def residual_from_scratch(rmat: np.ndarray, yprime: np.ndarray,
                          partial: tuple[int, ...]) -> float:
    """Recompute ||y'_(last k rows) - R_kk z|| ^2 directly from the prefix."""
    m = rmat.shape[0]
    k = len(partial)
    z = np.zeros(m)
    for offset, zval in enumerate(partial):
        z[m - 1 - offset] = zval
    resid = yprime[m - k:] - rmat[m - k:, :] @ z
    return float(resid @ resid)
