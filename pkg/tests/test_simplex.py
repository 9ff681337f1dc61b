import itertools

import numpy as np
import pytest

from src.errors import Infeasible
from src.simplex import DenseSimplex, independent_rows


def brute_force_max(A, b, c):
    """Best basic feasible solution by enumerating every column basis."""
    m, n = A.shape
    best = -np.inf
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.min(xb) < -1e-10:
            continue
        x = np.zeros(n)
        x[list(cols)] = xb
        best = max(best, float(c @ x))
    return best


class TestIndependentRows:
    def test_drops_multiples(self):
        A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
        assert independent_rows(A, np.array([1.0, 2.0, 1.0])) == [0, 2]

    def test_contradiction(self):
        A = np.array([[1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(Infeasible):
            independent_rows(A, np.array([1.0, 3.0]))

    def test_earlier_rows_win(self):
        A = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
        assert independent_rows(A, np.array([1.0, 0.5, 0.5])) == [0, 1]


class TestDenseSimplex:
    def test_unconstrained_simplex_vertex(self):
        lp = DenseSimplex(np.ones((1, 3)), np.ones(1))
        assert np.allclose(lp.maximize(np.array([3.0, 1.0, 2.0])), [1.0, 0.0, 0.0])

    def test_forced_tie(self):
        A = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]])
        lp = DenseSimplex(A, np.array([1.0, 0.0]))
        assert np.allclose(lp.maximize(np.array([1.0, 0.0, 0.0])), [0.5, 0.5, 0.0])

    def test_phase_one_infeasible(self):
        A = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 0.0]])
        with pytest.raises(Infeasible):
            DenseSimplex(A, np.array([1.0, 2.0]))

    def test_point_is_feasible(self):
        A = np.array([[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 0.0, 0.0]])
        lp = DenseSimplex(A, np.array([1.0, 0.0]))
        assert lp.residual(lp.point()) < 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_vertex_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 7))
        m = int(rng.integers(1, n))
        A = np.vstack([np.ones(n), rng.normal(size=(m - 1, n))]) if m > 1 else np.ones((1, n))
        x0 = rng.dirichlet(np.ones(n))
        b = A @ x0
        lp = DenseSimplex(A, b)
        for _ in range(3):
            c = rng.normal(size=n)
            x = lp.maximize(c)
            assert lp.residual(x) < 1e-9
            assert c @ x == pytest.approx(brute_force_max(A, b, c), abs=1e-9)

    def test_warm_start_agrees_with_fresh_solve(self):
        rng = np.random.default_rng(42)
        A = np.vstack([np.ones(6), rng.normal(size=(2, 6))])
        b = A @ rng.dirichlet(np.ones(6))
        warm = DenseSimplex(A, b)
        for _ in range(5):
            c = rng.normal(size=6)
            assert c @ warm.maximize(c) == pytest.approx(c @ DenseSimplex(A, b).maximize(c), abs=1e-10)

    def test_redundant_rows_are_ignored(self):
        A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
        lp = DenseSimplex(A, np.array([1.0, 2.0]))
        assert lp.m == 1
        assert np.allclose(lp.maximize(np.array([0.0, 0.0, 1.0])), [0.0, 0.0, 1.0])
