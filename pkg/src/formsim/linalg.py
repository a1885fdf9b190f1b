"""Small dense least-squares solves and pentadiagonal machinery.

The Gram matrix of the chain-graph coupling matrix is pentadiagonal with
a fixed sparsity pattern, which admits an O(m) determinant recursion with
provable pivot bounds. That recursion doubles as an invertibility
certificate for the control law; a general pentadiagonal determinant and
a dense solver path provide independent cross-checks.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "COND_LIMIT",
    "PIVOT_FLOOR",
    "RankDeficient",
    "PivotBreakdown",
    "LeastSquaresResult",
    "least_squares_solve",
    "Pentadiagonal",
    "pentadiagonal_determinant",
    "chain_gram_pentadiagonal",
    "chain_gram_determinant",
    "chain_pivot_bounds",
]

COND_LIMIT = 1e12
PIVOT_FLOOR = 1e-14


class RankDeficient(RuntimeError):
    """Normal-equations matrix too ill conditioned to trust."""


class PivotBreakdown(RuntimeError):
    """A determinant-recursion pivot fell below double-precision meaning."""


@dataclass(frozen=True)
class LeastSquaresResult:
    """Minimizer of ||A x - b||, the residual A x - b, and cond(A^T A)."""

    solution: np.ndarray
    residual: np.ndarray
    condition: float


def least_squares_solve(A, b):
    """Solve min_x ||A x - b|| for a tall (or square) full-rank A.

    Parameters
    ----------
    A : ndarray, shape (rows, cols) with rows >= cols
        Coefficient matrix with full column rank.
    b : ndarray, shape (rows,)
        Right-hand side.

    Returns
    -------
    LeastSquaresResult
        Minimizer, residual A x - b, and the condition number of A^T A.

    Normal equations with one step of iterative refinement, which keeps
    the orthogonality defect ||A^T r|| at rounding level across the whole
    admitted conditioning range. Raises RankDeficient when cond(A^T A)
    exceeds COND_LIMIT.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError(f"need rows >= cols, got shape {A.shape}")
    G = A.T @ A
    condition = float(np.linalg.cond(G))
    if not np.isfinite(condition) or condition > COND_LIMIT:
        raise RankDeficient(f"cond(A^T A) = {condition:.3e}")
    c = A.T @ b
    x = np.linalg.solve(G, c)
    x += np.linalg.solve(G, c - G @ x)
    return LeastSquaresResult(solution=x, residual=A @ x - b,
                              condition=condition)


@dataclass(frozen=True)
class Pentadiagonal:
    """Banded matrix with nonzeros only on the main diagonal and the two
    diagonals on each side. Diagonals are stored dense: main (m,),
    super1/sub1 (m-1,), super2/sub2 (m-2,).
    """

    main: np.ndarray
    super1: np.ndarray
    super2: np.ndarray
    sub1: np.ndarray
    sub2: np.ndarray

    def __post_init__(self):
        m = self.order
        if m < 1:
            raise ValueError("order must be at least 1")
        want = (m, max(m - 1, 0), max(m - 2, 0))
        got = (len(self.main), len(self.super1), len(self.super2))
        if got != want or (len(self.sub1), len(self.sub2)) != want[1:]:
            raise ValueError(f"inconsistent diagonal lengths {got} for m={m}")

    @property
    def order(self):
        return len(self.main)

    def dense(self):
        m = self.order
        out = np.zeros((m, m))
        out[np.arange(m), np.arange(m)] = self.main
        if m > 1:
            idx = np.arange(m - 1)
            out[idx, idx + 1] = self.super1
            out[idx + 1, idx] = self.sub1
        if m > 2:
            idx = np.arange(m - 2)
            out[idx, idx + 2] = self.super2
            out[idx + 2, idx] = self.sub2
        return out


def pentadiagonal_determinant(penta):
    """Determinant of a pentadiagonal matrix by the linear-recurrence
    elimination: det = prod(x_i) with x, y, z sequences built in O(m).

    Raises PivotBreakdown when some |x_i| < PIVOT_FLOOR, the regime where
    the recurrence divides by a value without double-precision meaning.
    """
    a = np.asarray(penta.main, dtype=float)
    b = np.asarray(penta.super1, dtype=float)
    c = np.asarray(penta.super2, dtype=float)
    d = np.asarray(penta.sub1, dtype=float)
    e = np.asarray(penta.sub2, dtype=float)
    m = len(a)

    x = np.empty(m)
    y = np.empty(max(m - 1, 1))
    z = np.empty(max(m, 2))

    def _checked(value, i):
        if abs(value) < PIVOT_FLOOR:
            raise PivotBreakdown(f"pivot x_{i + 1} = {value:.3e}")
        return value

    x[0] = _checked(a[0], 0)
    if m == 1:
        return float(x[0])
    y[0] = b[0]
    z[1] = d[0] / x[0]
    x[1] = _checked(a[1] - y[0] * z[1], 1)
    if m > 2:
        y[1] = b[1] - z[1] * c[0]
    for i in range(2, m):
        z[i] = (d[i - 1] - e[i - 2] * y[i - 2] / x[i - 2]) / x[i - 1]
        x[i] = _checked(
            a[i] - y[i - 1] * z[i] - e[i - 2] * c[i - 2] / x[i - 2], i
        )
        if i < m - 1:
            y[i] = b[i] - z[i] * c[i - 1]
    return float(np.prod(x))


def chain_gram_pentadiagonal(headings):
    """Pentadiagonal form of the chain coupling matrix's Gram matrix.

    For a chain of n robots the Gram matrix is 2n x 2n with main diagonal
    (2, ..., 2, 1, 1), empty first off-diagonals, and second off-diagonals
    alternating -cos(heading difference across an edge) and -1.
    """
    th = np.asarray(headings, dtype=float)
    n = len(th)
    if n < 1:
        raise ValueError("need at least one robot")
    m = 2 * n
    main = np.full(m, 2.0)
    main[m - 2:] = 1.0
    super1 = np.zeros(max(m - 1, 0))
    super2 = np.empty(max(m - 2, 0))
    for ic in range(m - 2):
        if ic % 2 == 0:
            k = ic // 2
            super2[ic] = -np.cos(th[k] - th[k + 1])
        else:
            super2[ic] = -1.0
    return Pentadiagonal(main=main, super1=super1, super2=super2,
                         sub1=super1.copy(), sub2=super2.copy())


def chain_gram_determinant(headings):
    """Determinant of the chain Gram matrix by the simplified recursion.

    Returns (determinant, pivots): even pivots are the exact closed forms
    (2, then 1 + 2/i, ending with 2/m), odd pivots follow the two-step
    recursion in the squared cosine of each edge's heading difference.
    No pivot can vanish, so this path never breaks down.
    """
    th = np.asarray(headings, dtype=float)
    n = len(th)
    if n < 2:
        raise ValueError("chain recursion needs at least two robots")
    m = 2 * n
    x = np.empty(m)
    x[0] = 2.0
    x[1] = 2.0
    for i in range(3, m - 2, 2):  # 1-based odd i in 3..m-3
        cos2 = np.cos(th[(i - 3) // 2] - th[(i - 1) // 2]) ** 2
        x[i - 1] = 2.0 - cos2 / x[i - 3]
    for i in range(4, m - 1, 2):  # 1-based even i in 4..m-2
        x[i - 1] = 1.0 + 2.0 / i
    cos2 = np.cos(th[n - 2] - th[n - 1]) ** 2
    x[m - 2] = 1.0 - cos2 / x[m - 4]
    x[m - 1] = 2.0 / m
    return float(np.prod(x)), x


def chain_pivot_bounds(x):
    """Closed-form bounds certifying every chain-recursion pivot.

    Returns (lower, upper) arrays: odd positions up to m-3 lie in
    [(i+3)/(i+1), 2], the next-to-last in [2/m, 1], and even positions
    are pinned to their exact values.
    """
    x = np.asarray(x, dtype=float)
    m = len(x)
    lower = np.empty(m)
    upper = np.empty(m)
    for i in range(1, m + 1):  # 1-based
        if i == m:
            lower[i - 1] = upper[i - 1] = 2.0 / m
        elif i == m - 1:
            lower[i - 1], upper[i - 1] = 2.0 / m, 1.0
        elif i % 2 == 1:
            lower[i - 1], upper[i - 1] = (i + 3) / (i + 1), 2.0
        elif i == 2:
            lower[i - 1] = upper[i - 1] = 2.0
        else:
            lower[i - 1] = upper[i - 1] = 1.0 + 2.0 / i
    return lower, upper
