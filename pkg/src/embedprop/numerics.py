"""Dense numeric primitives backing the graph construction.

Everything works on plain float64 numpy arrays. Episode batches are at most a
few hundred rows, so direct dense factorizations are the right tool; there is
deliberately no sparse or iterative path here.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonFiniteInput, NotPositiveDefinite, NotSymmetric

# Relative asymmetry tolerated before a matrix is rejected as not symmetric.
SYMMETRY_RTOL = 1e-9


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce `a` to a float64 2-D array with >= 1 row/column and finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(
            f"{name} must be 2-D with at least one row and column, got shape {m.shape}"
        )
    if not np.isfinite(m).all():
        raise NonFiniteInput(f"{name} contains NaN or Inf entries")
    return m


def symmetry_defect(m: np.ndarray) -> float:
    """Largest absolute difference between `m` and its transpose."""
    return float(np.abs(m - m.T).max())


def solve_spd(m, b) -> np.ndarray:
    """Solve M X = B for symmetric positive definite M.

    Uses a Cholesky factorization, which doubles as the positive-definiteness
    check: any nonpositive pivot aborts the solve. The result is a pure
    function of the inputs (same bits in, same bits out).

    Parameters
    ----------
    m : (n, n) array
        Symmetric positive definite coefficient matrix.
    b : (n,) or (n, k) array
        Right-hand side(s).

    Raises
    ------
    DimensionMismatch, NotSymmetric, NotPositiveDefinite
    """
    m = np.asarray(m, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"M must be square, got shape {m.shape}")
    if b.ndim not in (1, 2) or b.shape[0] != m.shape[0]:
        raise DimensionMismatch(
            f"B must have {m.shape[0]} rows, got shape {b.shape}"
        )
    defect = symmetry_defect(m)
    tol = SYMMETRY_RTOL * max(1.0, float(np.abs(m).max()))
    # `not <=` instead of `>` so NaN defects (non-finite input) are rejected too.
    if not defect <= tol:
        raise NotSymmetric(f"asymmetry {defect:.3e} exceeds tolerance {tol:.3e}")
    try:
        factor = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)
