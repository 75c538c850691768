"""Shared dense linear-algebra helpers."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DegenerateSourcesError

# Relative diagonal jitter applied once when a Gram matrix fails to factor.
JITTER_SCALE = 1e-12


def solve_spd(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``gram @ x = rhs`` for a symmetric positive-definite Gram matrix.

    Uses a Cholesky factorization. If that fails, retries once with relative
    jitter ``JITTER_SCALE * trace/n`` added to the diagonal; failure beyond
    that raises :class:`DegenerateSourcesError` rather than silently falling
    back to a pseudo-inverse.
    """
    try:
        cf = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(cf, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    n = gram.shape[0]
    jitter = JITTER_SCALE * np.trace(gram) / n
    try:
        cf = scipy.linalg.cho_factor(
            gram + jitter * np.eye(n), lower=True, check_finite=False
        )
        return scipy.linalg.cho_solve(cf, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSourcesError(
            f"source Gram matrix ({n}x{n}) is singular beyond jitter {jitter:g}"
        ) from exc
