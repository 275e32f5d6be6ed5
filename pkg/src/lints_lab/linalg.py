"""Dense PSD linear algebra and the Gaussian posterior carried by LinTS.

Matrices are plain ``numpy`` arrays; the helpers here validate symmetry and
shape rather than wrapping them in a class.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, InvalidCovariance, InvalidParam, NonSymmetric, ZeroMatrix

SYM_TOL = 1e-10
PIVOT_FLOOR = 1e-12


def _frozen(x: np.ndarray) -> np.ndarray:
    x = np.array(x, dtype=float, copy=True)
    x.setflags(write=False)
    return x


def check_symmetric(m: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    gap = np.abs(m - m.T)
    if gap.size and gap.max() > tol:
        i, j = np.unravel_index(np.argmax(gap), gap.shape)
        raise NonSymmetric(int(i), int(j), float(gap[i, j]))
    return m


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _cholesky_clamped(m: np.ndarray) -> tuple[np.ndarray, int]:
    d = m.shape[0]
    L = np.zeros_like(m)
    clamped = 0
    for j in range(d):
        row = L[j, :j]
        pivot = m[j, j] - row @ row
        if pivot < PIVOT_FLOOR:
            pivot = PIVOT_FLOOR
            clamped += 1
        L[j, j] = np.sqrt(pivot)
        if j + 1 < d:
            L[j + 1:, j] = (m[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L, clamped


def cholesky_jitter(m: np.ndarray) -> tuple[np.ndarray, int]:
    """Lower Cholesky factor with pivot clamping.

    Returns ``(L, n_clamped)`` where ``n_clamped`` counts pivots that fell
    below ``PIVOT_FLOOR`` and were raised to it.  LAPACK handles the common
    well-conditioned case; the column-by-column routine takes over when a
    pivot is tiny or LAPACK rejects the matrix.
    """
    m = check_symmetric(m)
    try:
        L = np.linalg.cholesky(m)
        if np.all(np.diag(L) ** 2 >= PIVOT_FLOOR):
            return L, 0
    except np.linalg.LinAlgError:
        pass
    return _cholesky_clamped(m)


def cholesky(m: np.ndarray) -> np.ndarray:
    return cholesky_jitter(m)[0]


def psd_norms(m: np.ndarray) -> tuple[float, float]:
    """Operator norm (largest eigenvalue) and nuclear norm (trace) of a PSD matrix."""
    m = check_symmetric(m)
    op = float(np.linalg.eigvalsh(m)[-1])
    return op, float(np.trace(m))


def thinness(m: np.ndarray) -> float:
    """sqrt(d * ||m||_op / ||m||_*), clipped to its range [1, sqrt(d)]."""
    op, nuc = psd_norms(m)
    if nuc <= 1e-300:
        raise ZeroMatrix("thinness undefined for a zero-trace matrix")
    d = m.shape[0]
    return float(np.clip(np.sqrt(d * op / nuc), 1.0, np.sqrt(d)))


def quad_norm(a: np.ndarray, m: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    m = np.asarray(m, dtype=float)
    if a.ndim != 1 or m.shape != (a.size, a.size):
        raise DimensionMismatch(f"vector of length {a.size} against matrix {m.shape}")
    q = float(a @ m @ a)
    if q < 0:
        scale = max(1.0, float(a @ a) * float(np.abs(m).max(initial=0.0)))
        if q < -1e-12 * scale:
            raise InvalidParam(f"quadratic form is negative ({q:.3e}); matrix is not PSD")
        q = 0.0
    return float(np.sqrt(q))


@dataclass(frozen=True)
class PosteriorState:
    """Gaussian belief N(mean, covariance) over the parameter vector.

    ``precision`` and ``covariance`` are both kept current so that sampling
    and precision-based diagnostics stay O(d^2) per round.  ``jittered``
    records whether the Cholesky factor needed pivot clamping.
    """

    dim: int
    lam: float
    precision: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray
    info: np.ndarray
    mean: np.ndarray
    t: int = 1
    jittered: bool = False

    @classmethod
    def from_moments(cls, mean, covariance, lam: float = 1.0, t: int = 1) -> "PosteriorState":
        """Build a state directly from a mean and covariance (used for scenarios)."""
        cov = symmetrize(check_symmetric(covariance))
        mean = np.asarray(mean, dtype=float)
        if mean.shape != (cov.shape[0],):
            raise DimensionMismatch(f"mean {mean.shape} vs covariance {cov.shape}")
        try:
            prec = symmetrize(np.linalg.inv(cov))
        except np.linalg.LinAlgError as exc:
            raise InvalidCovariance("covariance is singular") from exc
        L, clamped = cholesky_jitter(cov)
        return cls(
            dim=cov.shape[0], lam=float(lam), precision=_frozen(prec), covariance=_frozen(cov),
            chol=_frozen(L), info=_frozen(prec @ mean), mean=_frozen(mean), t=t,
            jittered=clamped > 0,
        )


def posterior_init(d: int, lam: float) -> PosteriorState:
    if d < 1 or int(d) != d:
        raise InvalidParam(f"dimension must be a positive integer, got {d}")
    if not lam > 0:
        raise InvalidParam(f"prior scale must be positive, got {lam}")
    d = int(d)
    eye = np.eye(d)
    return PosteriorState(
        dim=d, lam=float(lam), precision=_frozen(eye / lam), covariance=_frozen(eye * lam),
        chol=_frozen(eye * np.sqrt(lam)), info=_frozen(np.zeros(d)), mean=_frozen(np.zeros(d)),
    )


def posterior_update(state: PosteriorState, a, y: float) -> PosteriorState:
    """Condition on one observation ``y = <theta, a> + N(0, 1)``.

    The covariance is downdated with Sherman-Morrison; both matrices are
    re-symmetrized afterwards to stop drift over long horizons.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (state.dim,):
        raise DimensionMismatch(f"action of shape {a.shape} for a {state.dim}-dim posterior")
    cov_a = state.covariance @ a
    cov = symmetrize(state.covariance - np.outer(cov_a, cov_a) / (1.0 + a @ cov_a))
    prec = symmetrize(state.precision + np.outer(a, a))
    info = state.info + a * y
    L, clamped = cholesky_jitter(cov)
    return replace(
        state, precision=_frozen(prec), covariance=_frozen(cov), chol=_frozen(L),
        info=_frozen(info), mean=_frozen(cov @ info), t=state.t + 1, jittered=clamped > 0,
    )


def posterior_perturbation(state: PosteriorState, iota: float, z: np.ndarray) -> np.ndarray:
    """iota * L @ z, the zero-mean part of a posterior sample."""
    return iota * (state.chol @ z)


def posterior_sample(state: PosteriorState, iota: float, rng: np.random.Generator) -> np.ndarray:
    """Draw theta ~ N(mean, iota^2 * covariance) using exactly ``dim`` standard normals."""
    if not iota > 0:
        raise InvalidParam(f"inflation must be positive, got {iota}")
    z = rng.standard_normal(state.dim)
    return state.mean + posterior_perturbation(state, iota, z)


def logdet_from_chol(L: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))
