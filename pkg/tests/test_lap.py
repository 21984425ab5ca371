import itertools

import numpy as np
import pytest

from tracklinker.lap import Assignment, CostMatrix, solve


def brute_force(cost: np.ndarray, feasible: np.ndarray) -> tuple[int, float]:
    """Exhaustive maximum-cardinality minimum-cost matching over feasible
    cells: (cardinality, total cost)."""
    rows, cols = cost.shape
    best = (0, 0.0)
    k_max = min(rows, cols)
    for k in range(k_max, 0, -1):
        best_cost = None
        for row_subset in itertools.combinations(range(rows), k):
            for col_perm in itertools.permutations(range(cols), k):
                if all(feasible[r, c] for r, c in zip(row_subset, col_perm)):
                    total = sum(cost[r, c] for r, c in zip(row_subset, col_perm))
                    if best_cost is None or total < best_cost:
                        best_cost = total
        if best_cost is not None:
            return (k, best_cost)
    return best


class TestSolveExamples:
    def test_zero_diagonal(self):
        result = solve(CostMatrix(cost=np.array([[0.0, 1.0], [1.0, 0.0]])))
        assert result.pair_set() == {(0, 0), (1, 1)}
        assert result.total_cost == 0.0

    def test_two_by_two(self):
        result = solve(CostMatrix(cost=np.array([[1.0, 2.0], [3.0, 1.0]])))
        assert result.pair_set() == {(0, 0), (1, 1)}
        assert result.total_cost == 2.0

    def test_single_row(self):
        result = solve(CostMatrix(cost=np.array([[5.0, 3.0]])))
        assert result.pair_set() == {(0, 1)}
        assert result.total_cost == 3.0

    def test_empty(self):
        result = solve(CostMatrix(cost=np.zeros((0, 3))))
        assert result.pairs == ()
        assert result.total_cost == 0.0

    def test_all_forbidden(self):
        result = solve(CostMatrix(cost=np.ones((2, 2)),
                                  feasible=np.zeros((2, 2), dtype=bool)))
        assert result.pairs == ()

    def test_forbidden_forces_partial_matching(self):
        feasible = np.array([[True, False], [True, False]])
        cost = np.array([[3.0, 0.0], [1.0, 0.0]])
        result = solve(CostMatrix(cost=cost, feasible=feasible))
        assert result.pair_set() == {(1, 0)}
        assert result.total_cost == 1.0


class TestSolveValidation:
    def test_rejects_negative_feasible_cost(self):
        with pytest.raises(ValueError):
            CostMatrix(cost=np.array([[-1.0]]))

    def test_rejects_non_finite_feasible_cost(self):
        with pytest.raises(ValueError):
            CostMatrix(cost=np.array([[np.inf]]))

    def test_infinite_cost_allowed_on_forbidden_cell(self):
        m = CostMatrix(cost=np.array([[np.inf, 1.0]]),
                       feasible=np.array([[False, True]]))
        assert solve(m).pair_set() == {(0, 1)}

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            CostMatrix(cost=np.zeros((2, 2)), feasible=np.zeros((2, 3), dtype=bool))


class TestOracle:
    def test_small_random_instances_match_brute_force(self):
        rng = np.random.default_rng(7)
        for trial in range(300):
            rows = int(rng.integers(1, 6))
            cols = int(rng.integers(1, 6))
            cost = rng.uniform(0.0, 10.0, size=(rows, cols))
            feasible = rng.random((rows, cols)) < 0.8
            result = solve(CostMatrix(cost=cost, feasible=feasible))
            card, best = brute_force(cost, feasible)
            assert len(result.pairs) == card, f"trial {trial}"
            assert result.total_cost == pytest.approx(best, abs=1e-9), f"trial {trial}"

    def test_permutation_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            cost = rng.uniform(0.0, 5.0, size=(5, 4))
            perm = rng.permutation(5)
            inverse = np.argsort(perm)
            base = solve(CostMatrix(cost=cost))
            permuted = solve(CostMatrix(cost=cost[perm]))
            remapped = {(int(inverse[r]), c) for r, c in base.pairs}
            assert {(r, c) for r, c in permuted.pairs} == remapped
            assert permuted.total_cost == pytest.approx(base.total_cost)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(13)
        cost = rng.uniform(0.0, 5.0, size=(6, 6))
        base = solve(CostMatrix(cost=cost))
        scaled = solve(CostMatrix(cost=cost * 3.5))
        assert scaled.pair_set() == base.pair_set()
        assert scaled.total_cost == pytest.approx(3.5 * base.total_cost)

    def test_determinism(self):
        rng = np.random.default_rng(17)
        cost = rng.uniform(0.0, 5.0, size=(7, 5))
        feasible = rng.random((7, 5)) < 0.7
        first = solve(CostMatrix(cost=cost, feasible=feasible))
        for _ in range(5):
            again = solve(CostMatrix(cost=cost, feasible=feasible))
            assert again == first


def test_assignment_is_frozen():
    a = Assignment(pairs=((0, 0),), total_cost=1.0)
    with pytest.raises(AttributeError):
        a.total_cost = 2.0
