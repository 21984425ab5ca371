"""Rectangular linear assignment with forbidden entries.

Shared by tracklet linking, cross-camera association, and the identity
metrics. The solver is scipy's Jonker-Volgenant-style shortest augmenting
path implementation; forbidden cells are handled by mapping them to a large
finite cost and filtering any pair that lands on one, which keeps the
arithmetic finite and yields a maximum-cardinality feasible matching of
minimum total cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class CostMatrix:
    """Costs plus a same-shape feasibility mask. Feasible costs must be
    finite and non-negative."""

    cost: np.ndarray
    feasible: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.cost = np.asarray(self.cost, dtype=np.float64)
        if self.cost.ndim != 2:
            raise ValueError(f"cost must be 2-D, got shape {self.cost.shape}")
        if self.feasible is None:
            self.feasible = np.ones(self.cost.shape, dtype=bool)
        else:
            self.feasible = np.asarray(self.feasible, dtype=bool)
            if self.feasible.shape != self.cost.shape:
                raise ValueError("feasibility mask shape must match cost shape")
        masked = self.cost[self.feasible]
        if masked.size and (not np.all(np.isfinite(masked)) or np.any(masked < 0)):
            raise ValueError("feasible costs must be finite and >= 0")

    @property
    def rows(self) -> int:
        return self.cost.shape[0]

    @property
    def cols(self) -> int:
        return self.cost.shape[1]


@dataclass(frozen=True)
class Assignment:
    """One-to-one pairing of rows to columns and its total cost."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float

    def pair_set(self) -> set[tuple[int, int]]:
        return set(self.pairs)


def solve(matrix: CostMatrix) -> Assignment:
    """Minimum-cost maximum-cardinality matching over the feasible cells.

    Among all matchings of maximum feasible cardinality, the returned one has
    minimum total cost. Deterministic for a fixed input; the empty matrix
    yields an empty assignment.
    """
    rows, cols = matrix.rows, matrix.cols
    if rows == 0 or cols == 0 or not matrix.feasible.any():
        return Assignment(pairs=(), total_cost=0.0)

    feasible_costs = matrix.cost[matrix.feasible]
    # Exceeds any feasible matching total, so the solver uses as few
    # forbidden cells as possible and, among those, minimizes feasible cost.
    big = float(feasible_costs.max()) * min(rows, cols) + 1.0
    work = np.where(matrix.feasible, matrix.cost, big)

    row_ind, col_ind = linear_sum_assignment(work)
    pairs = sorted(
        (int(r), int(c)) for r, c in zip(row_ind, col_ind) if matrix.feasible[r, c]
    )
    total = float(sum(matrix.cost[r, c] for r, c in pairs))
    return Assignment(pairs=tuple(pairs), total_cost=total)
