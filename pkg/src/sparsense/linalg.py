"""Least-squares solves on column subsets and projection residuals.

These are the inner kernels of every greedy algorithm here: fit y on a
selected column subset, and measure what remains of y outside the subset's
span. Solves go through an orthogonal decomposition (SVD-backed lstsq),
never the normal equations.
"""

from collections.abc import Sequence

import numpy as np

from .errors import RankDeficient
from .matgen import MeasurementMatrix

RANK_RTOL = 1e-10  # smallest/largest singular value ratio below this is rank deficient


def _entries(d) -> np.ndarray:
    return d.entries if isinstance(d, MeasurementMatrix) else np.asarray(d, dtype=np.float64)


def check_support(support: Sequence[int], n: int) -> list[int]:
    """Validate an ordered support: distinct integer indices in [0, n)."""
    out = []
    seen = set()
    for idx in support:
        i = int(idx)
        if i != idx:
            raise ValueError(f"support index {idx!r} is not an integer")
        if not 0 <= i < n:
            raise ValueError(f"support index {i} out of range [0, {n})")
        if i in seen:
            raise ValueError(f"duplicate support index {i}")
        seen.add(i)
        out.append(i)
    return out


def _solve_on_support(e: np.ndarray, y: np.ndarray, support: list[int]) -> np.ndarray:
    """Coefficients of the least-squares fit of y on the support columns."""
    m = e.shape[0]
    if len(support) > m:
        raise RankDeficient(f"support size {len(support)} exceeds row count {m}")
    sub = e[:, support]
    coef, _, _, svals = np.linalg.lstsq(sub, y, rcond=None)
    if svals.size and svals[-1] < RANK_RTOL * svals[0]:
        raise RankDeficient(
            f"columns {support} are numerically dependent "
            f"(singular value ratio {svals[-1] / svals[0]:.3e})"
        )
    return coef


def least_squares_on_support(d, y, support: Sequence[int]) -> np.ndarray:
    """N-vector that is zero off the support and minimizes ||y - Dx|| on it."""
    e = _entries(d)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (e.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({e.shape[0]},)")
    sup = check_support(support, e.shape[1])
    x = np.zeros(e.shape[1])
    if sup:
        x[sup] = _solve_on_support(e, y, sup)
    return x


def projection_residual_norm_sq(d, y, support: Sequence[int]) -> float:
    """Squared norm of y minus its orthogonal projection onto the support columns."""
    e = _entries(d)
    y = np.asarray(y, dtype=np.float64)
    sup = check_support(support, e.shape[1])
    if not sup:
        return float(y @ y)
    coef = _solve_on_support(e, y, sup)
    r = y - e[:, sup] @ coef
    return float(r @ r)


def residual(d, y, x_hat) -> np.ndarray:
    """Exact vector difference y - D @ x_hat."""
    e = _entries(d)
    y = np.asarray(y, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if y.shape != (e.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({e.shape[0]},)")
    if x_hat.shape != (e.shape[1],):
        raise ValueError(f"x_hat has shape {x_hat.shape}, expected ({e.shape[1]},)")
    return y - e @ x_hat
