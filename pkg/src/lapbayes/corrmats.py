"""Correlation-matrix machinery: unconstrained parameterization, LKJ
densities, concordance probabilities and Fisher's z transformation.

The unconstrained parameterization maps a length k(k-1)/2 real vector to a
positive-definite correlation matrix via canonical partial correlations:
each entry passes through tanh and a Cholesky factor is assembled row by
row.  The log-Jacobian of the full map is accumulated during construction
so targets can be sampled on the unconstrained scale.

Pair order everywhere is (1,2), (1,3), (2,3), (1,4), (2,4), (3,4), ...:
for each new component, its pairs with all earlier components.
"""

from __future__ import annotations

import math

import numpy as np

from lapbayes.errors import DomainError, NotPositiveDefiniteError, ParameterDomainError


def n_pairs(k: int) -> int:
    return k * (k - 1) // 2


def pair_order(k: int) -> list[tuple[int, int]]:
    """Canonical (i, j) pairs, 1-based, i < j."""
    return [(j + 1, i + 1) for i in range(1, k) for j in range(i)]


def vector_from_matrix_entries(R: np.ndarray) -> np.ndarray:
    """Off-diagonal entries of R in canonical pair order."""
    k = R.shape[0]
    return np.array([R[i, j] for i in range(1, k) for j in range(i)])


# ---------------------------------------------------------------------------
# Concordance probability <-> correlation
# ---------------------------------------------------------------------------

def concordance_to_correlation(p: float) -> float:
    """r = sin(pi * (p - 0.5)).

    Under a bivariate normal, the probability that both components fall on
    the same side of their means is 0.5 + arcsin(r)/pi; this is its inverse.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"concordance probability must be in (0, 1), got {p}")
    return math.sin(math.pi * (p - 0.5))


def correlation_to_concordance(r: float) -> float:
    if not -1.0 < r < 1.0:
        raise DomainError(f"correlation must be in (-1, 1), got {r}")
    return 0.5 + math.asin(r) / math.pi


# ---------------------------------------------------------------------------
# Fisher's z
# ---------------------------------------------------------------------------

def fisher_z(r: float) -> float:
    """artanh(r)."""
    if not -1.0 < r < 1.0:
        raise DomainError(f"correlation must be in (-1, 1), got {r}")
    return math.atanh(r)


def fisher_z_inv(z: float) -> float:
    return math.tanh(z)


def fisher_se(n_e: float) -> float:
    """Standard error 1/sqrt(n_e - 3) of the z-transformed correlation."""
    if n_e <= 3:
        raise ParameterDomainError(f"fisher_se requires n_e > 3, got {n_e}")
    return 1.0 / math.sqrt(n_e - 3.0)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_correlation_matrix(R: np.ndarray, tol: float = 1e-8) -> None:
    """Raise unless R is symmetric with unit diagonal and positive definite."""
    R = np.asarray(R, dtype=float)
    k = R.shape[0]
    if R.ndim != 2 or R.shape[1] != k or k < 2:
        raise ParameterDomainError("correlation matrix must be square with k >= 2")
    if not np.allclose(R, R.T, atol=tol):
        raise ParameterDomainError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(R), 1.0, atol=tol):
        raise ParameterDomainError("correlation matrix must have unit diagonal")
    off = R[~np.eye(k, dtype=bool)]
    if np.any(np.abs(off) > 1.0 + tol):
        raise ParameterDomainError("off-diagonal entries must lie in [-1, 1]")
    if smallest_eigenvalue(R) <= 0:
        raise NotPositiveDefiniteError("correlation matrix is not positive definite")


def smallest_eigenvalue(R: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(np.asarray(R, dtype=float))[0])


# ---------------------------------------------------------------------------
# Unconstrained vector <-> correlation matrix
# ---------------------------------------------------------------------------

def corr_transform_detailed(v: np.ndarray, k: int):
    """Full transform record: (R, z, log|J_tanh|, log|J_cholesky|).

    ``z`` are the canonical partial correlations tanh(v); the two Jacobian
    pieces compose the exact log-Jacobian of v -> R.  Saturated entries
    (|tanh(v)| rounding to 1 in float64) yield -inf Jacobians, marking the
    degenerate boundary rather than raising.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (n_pairs(k),):
        raise ParameterDomainError(
            f"expected vector of length {n_pairs(k)} for k={k}, got {v.shape}"
        )
    if not np.all(np.isfinite(v)):
        raise DomainError("unconstrained vector must be finite")
    z = np.tanh(v)
    saturated = bool(np.any(np.abs(z) >= 1.0))  # |v| ~ 19 rounds tanh to +/-1
    if saturated:
        z = np.clip(z, -1.0 + 1e-16, 1.0 - 1e-16)
    L = np.zeros((k, k))
    L[0, 0] = 1.0
    jac_tanh = -math.inf if saturated else float(np.sum(np.log1p(-z * z)))
    jac_chol = 0.0
    idx = 0
    for i in range(1, k):
        rem = 1.0
        for j in range(i):
            # d sigma_ij / d z_ij = L_jj * (remainder before entry j)
            jac_chol += math.log(L[j, j]) + math.log(rem)
            L[i, j] = z[idx] * rem
            rem *= math.sqrt(max(1.0 - z[idx] * z[idx], 1e-32))
            idx += 1
        L[i, i] = rem
    R = L @ L.T
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return R, z, jac_tanh, jac_chol


def corr_transform(v: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Map an unconstrained vector to (R, log |J|).

    The Jacobian is that of the composite map v -> tanh(v) -> R and is exact;
    the output is positive definite for every finite v.
    """
    R, _, jac_tanh, jac_chol = corr_transform_detailed(v, k)
    return R, jac_tanh + jac_chol


def corr_transform_inverse(R: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Recover the unconstrained vector; raises if R is not PD."""
    R = np.asarray(R, dtype=float)
    k = R.shape[0]
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    v = np.empty(n_pairs(k))
    idx = 0
    for i in range(1, k):
        rem = 1.0
        for j in range(i):
            z = L[i, j] / rem
            z = min(max(z, -1.0 + 1e-15), 1.0 - 1e-15)
            v[idx] = math.atanh(z)
            rem *= math.sqrt(max(1.0 - z * z, 0.0))
            idx += 1
    return v


def corr_cholesky(v: np.ndarray, k: int) -> np.ndarray:
    """Cholesky factor of the matrix corr_transform(v, k) produces."""
    z = np.tanh(np.asarray(v, dtype=float))
    L = np.zeros((k, k))
    L[0, 0] = 1.0
    idx = 0
    for i in range(1, k):
        rem = 1.0
        for j in range(i):
            L[i, j] = z[idx] * rem
            rem *= math.sqrt(1.0 - z[idx] * z[idx])
            idx += 1
        L[i, i] = rem
    return L


# ---------------------------------------------------------------------------
# LKJ densities
# ---------------------------------------------------------------------------

def lkj_log_density(R: np.ndarray, eta: float) -> float:
    """Unnormalized log LKJ density, (eta - 1) * log det(R)."""
    if eta <= 0:
        raise ParameterDomainError(f"LKJ shape must be positive, got {eta}")
    if eta == 1.0:
        # still validates positive definiteness
        smallest = smallest_eigenvalue(R)
        if smallest <= 0:
            raise NotPositiveDefiniteError("matrix is not positive definite")
        return 0.0
    sign, logdet = np.linalg.slogdet(np.asarray(R, dtype=float))
    if sign <= 0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return (eta - 1.0) * float(logdet)


def symmetric_beta_log_pdf(z: float, a: float) -> float:
    """Log density at z of 2X - 1 with X ~ Beta(a, a), supported on (-1, 1)."""
    from scipy.special import betaln

    if a <= 0:
        raise ParameterDomainError(f"Beta shape must be positive, got {a}")
    norm = -float(betaln(a, a)) - math.log(2.0)
    if a == 1.0:
        return norm if -1.0 <= z <= 1.0 else -math.inf
    # (1 +/- z)/2 computed separately to keep precision at the endpoints
    xp = (1.0 + z) / 2.0
    xm = (1.0 - z) / 2.0
    if xp <= 0.0 or xm <= 0.0:
        return -math.inf
    return (a - 1.0) * (math.log(xp) + math.log(xm)) + norm


def lkj_marginal_log_density(r: float, eta: float, k: int) -> float:
    """Log density on [-1, 1] of one correlation under LkjCorr(eta) in dim k.

    The marginal is Beta(a, a) with a = eta - 1 + k/2, stretched from (0, 1)
    to (-1, 1).
    """
    a = eta - 1.0 + k / 2.0
    if a <= 0:
        raise ParameterDomainError(
            f"marginal Beta shape eta - 1 + k/2 must be positive, got {a}"
        )
    return symmetric_beta_log_pdf(r, a)


def cpc_vine_levels(k: int) -> list[int]:
    """Vine tree level (1-based) of each canonical-order CPC entry."""
    return [j + 1 for i in range(1, k) for j in range(i)]


def lkj_vine_shape(eta: float, k: int, level: int) -> float:
    """Beta shape of the level-m canonical partial correlation under LKJ(eta).

    Sampling each CPC at tree level m as 2X-1, X ~ Beta(a_m, a_m) with
    a_m = eta + (k - 1 - m)/2 yields exactly LkjCorr(eta).
    """
    return eta + (k - 1 - level) / 2.0
