"""Exact restricted-isometry estimation by exhaustive subset enumeration.

Every width-k column subset is examined, so the reported constants are
exact up to floating point; nothing is sampled or merely bounded.  Cost
grows as C(n, k), which is why every enumerating operation takes a
subset budget and refuses work beyond it instead of silently crawling.

Subsets are enumerated in lexicographic order and ties between equally
extreme subsets are resolved in favor of the first one seen, so results
are deterministic.  Per-subset extreme singular values are obtained from
a symmetric eigendecomposition of the subset Gram matrix, evaluated in
chunks so thousands of small subsets cost one LAPACK call, not thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidOrder,
    PreconditionViolated,
    SubsetBudgetExceeded,
    ZeroReference,
)
from .model import SupportSet, as_matrix, as_support

DEFAULT_SUBSET_BUDGET = 2_000_000

# Subsets processed per batched eigendecomposition.
_CHUNK = 8192

# Absolute-plus-relative slack used when float comparisons decide a
# mathematically exact inequality.
_SLACK = 1e-12


@dataclass(frozen=True)
class RicEstimate:
    """Exact isometry constant at one order, with the subset attaining it."""

    order: int
    delta: float
    witness_subset: SupportSet
    subsets_examined: int


@dataclass(frozen=True)
class PerturbationLevels:
    """Relative perturbation levels measured against clean references.

    ``eps0`` is the full spectral-norm ratio of the sensing perturbation,
    ``eps`` the largest such ratio over column submatrices of width
    1..order, and ``epsb`` the Frobenius ratio of the measurement
    perturbation.
    """

    eps0: float
    eps: float
    epsb: float
    order: int


@dataclass(frozen=True)
class InequalityDiagnostic:
    """One-sided check ``lhs <= rhs`` with both sides recorded."""

    lhs: float
    rhs: float
    passed: bool


@dataclass(frozen=True)
class SandwichDiagnostic:
    """Two-sided check ``lower <= middle <= upper`` with all sides recorded."""

    lower: float
    middle: float
    upper: float
    passed: bool


def _check_enumeration(n: int, order: int, subset_budget: int) -> int:
    if not 1 <= order <= n:
        raise InvalidOrder(f"order {order} outside 1..{n}")
    count = math.comb(n, order)
    if count > subset_budget:
        raise SubsetBudgetExceeded(
            f"C({n}, {order}) = {count} subsets exceed the budget of {subset_budget}"
        )
    return count


def _subset_gram_extremes(A: np.ndarray, order: int):
    """Yield (index block, min eigenvalue, max eigenvalue) per chunk.

    Eigenvalues are those of the order x order Gram submatrices, i.e. the
    squared extreme singular values of the column submatrices, enumerated
    lexicographically.
    """
    n = A.shape[1]
    gram = A.T @ A
    combos = combinations(range(n), order)
    while True:
        block = list(islice(combos, _CHUNK))
        if not block:
            return
        idx = np.asarray(block, dtype=np.intp)
        sub = gram[idx[:, :, None], idx[:, None, :]]
        w = np.linalg.eigvalsh(sub)
        yield idx, w[:, 0], w[:, -1]


def ric_exact(A, order: int, subset_budget: int = DEFAULT_SUBSET_BUDGET) -> RicEstimate:
    """Exact restricted isometry constant of ``A`` at the given order.

    The constant is the largest deviation of a squared extreme singular
    value from 1 over all width-``order`` column submatrices:
    ``max(sigma_max^2 - 1, 1 - sigma_min^2)``.  Columns are taken as
    given; nothing is normalized on the caller's behalf.

    Raises InvalidOrder when ``order`` is outside 1..n and
    SubsetBudgetExceeded when C(n, order) exceeds ``subset_budget``.
    """
    A = as_matrix(A, "sensing matrix")
    examined = _check_enumeration(A.shape[1], order, subset_budget)
    best = -math.inf
    witness: SupportSet = ()
    for idx, lo, hi in _subset_gram_extremes(A, order):
        dev = np.maximum(hi - 1.0, 1.0 - lo)
        j = int(np.argmax(dev))
        if float(dev[j]) > best:
            best = float(dev[j])
            witness = tuple(int(i) for i in idx[j])
    return RicEstimate(order=order, delta=best, witness_subset=witness,
                       subsets_examined=examined)


def submatrix_spectral_norm(A, width: int,
                            subset_budget: int = DEFAULT_SUBSET_BUDGET) -> float:
    """Largest spectral norm over all width-``width`` column submatrices."""
    A = as_matrix(A, "matrix")
    _check_enumeration(A.shape[1], width, subset_budget)
    top = 0.0
    for _idx, _lo, hi in _subset_gram_extremes(A, width):
        top = max(top, float(hi.max()))
    return math.sqrt(max(top, 0.0))


def measure_perturbation_levels(Phi, E, Y, B, order: int,
                                subset_budget: int = DEFAULT_SUBSET_BUDGET) -> PerturbationLevels:
    """Measure relative perturbation levels of (E, B) against (Phi, Y).

    ``eps`` maximizes the submatrix spectral-norm ratio over widths
    1..order, because the solver only ever applies width-at-most-order
    column submatrices.  Raises ZeroReference when Phi or Y has zero
    norm, since the ratios are then undefined.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    E = as_matrix(E, "sensing perturbation")
    Y = as_matrix(Y, "measurements")
    B = as_matrix(B, "measurement perturbation")
    if E.shape != Phi.shape:
        raise DimensionMismatch(f"perturbation shape {E.shape} != sensing shape {Phi.shape}")
    if B.shape != Y.shape:
        raise DimensionMismatch(f"perturbation shape {B.shape} != measurement shape {Y.shape}")
    spectral_phi = float(np.linalg.norm(Phi, 2))
    frob_y = float(np.linalg.norm(Y))
    if spectral_phi == 0.0:
        raise ZeroReference("sensing matrix has zero spectral norm")
    if frob_y == 0.0:
        raise ZeroReference("measurements have zero Frobenius norm")
    eps0 = float(np.linalg.norm(E, 2)) / spectral_phi
    epsb = float(np.linalg.norm(B)) / frob_y
    eps = 0.0
    for width in range(1, order + 1):
        num = submatrix_spectral_norm(E, width, subset_budget)
        den = submatrix_spectral_norm(Phi, width, subset_budget)
        if den == 0.0:
            raise ZeroReference(f"all width-{width} submatrices of the sensing matrix are zero")
        eps = max(eps, num / den)
    return PerturbationLevels(eps0=eps0, eps=eps, epsb=epsb, order=order)


def selected_span_projector(Phi, support) -> np.ndarray:
    """Orthogonal projector onto the span of the selected columns.

    Built from an orthonormal basis of the selected columns (singular
    vectors above a small relative rank cutoff), independent of any
    least-squares path that may have produced the support.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    support = as_support(support, Phi.shape[1])
    m = Phi.shape[0]
    if not support:
        return np.zeros((m, m))
    U, s, _ = np.linalg.svd(Phi[:, support], full_matrices=False)
    keep = s > (s[0] * 1e-12 if s.size and s[0] > 0 else 0.0)
    Uk = U[:, keep]
    return Uk @ Uk.T


def residual_sensing_matrix(Phi, support) -> np.ndarray:
    """Every column of ``Phi`` projected off the selected columns' span."""
    Phi = as_matrix(Phi, "sensing matrix")
    support = as_support(support, Phi.shape[1])
    if not support:
        return Phi.copy()
    U, s, _ = np.linalg.svd(Phi[:, support], full_matrices=False)
    keep = s > (s[0] * 1e-12 if s.size and s[0] > 0 else 0.0)
    Uk = U[:, keep]
    return Phi - Uk @ (Uk.T @ Phi)


def inner_product_check(Phi, u, v, delta: float) -> InequalityDiagnostic:
    """Check that sensing nearly preserves the inner product of u and v.

    With ``delta`` a valid isometry constant at order
    ``max(||u - v||_0, ||u + v||_0)``, the deviation
    ``|<Phi u, Phi v> - <u, v>|`` cannot exceed ``delta ||u|| ||v||``.
    The caller supplies ``delta``; this function only evaluates both
    sides, with a tiny float slack on the comparison.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != Phi.shape[1] or v.size != Phi.shape[1]:
        raise DimensionMismatch(
            f"vectors of length {u.size}, {v.size} against {Phi.shape[1]} columns")
    lhs = abs(float((Phi @ u) @ (Phi @ v)) - float(u @ v))
    scale = float(np.linalg.norm(u) * np.linalg.norm(v))
    rhs = float(delta) * scale
    passed = lhs <= rhs + _SLACK * max(1.0, scale)
    return InequalityDiagnostic(lhs=lhs, rhs=rhs, passed=passed)


def projected_isometry_check(Phi, support, u, delta: float) -> SandwichDiagnostic:
    """Check the two-sided energy bound for columns projected off a span.

    For ``A`` = ``residual_sensing_matrix(Phi, support)`` and a vector u
    supported away from ``support``, with ``delta`` a valid isometry
    constant at order ``|support| + ||u||_0`` or higher (and below 1):

        (1 - delta/(1 - delta)) ||u||^2  <=  ||A u||^2  <=  (1 + delta) ||u||^2

    Raises PreconditionViolated when u touches the selected support.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    support = as_support(support, Phi.shape[1])
    u = np.asarray(u, dtype=float).ravel()
    if u.size != Phi.shape[1]:
        raise DimensionMismatch(f"vector of length {u.size} against {Phi.shape[1]} columns")
    if set(np.flatnonzero(u).tolist()) & set(support):
        raise PreconditionViolated("vector support overlaps the selected support")
    delta = float(delta)
    energy = float(u @ u)
    middle = float(np.linalg.norm(residual_sensing_matrix(Phi, support) @ u) ** 2)
    lower = -math.inf if delta >= 1.0 else (1.0 - delta / (1.0 - delta)) * energy
    upper = (1.0 + delta) * energy
    slack = _SLACK * max(1.0, energy)
    passed = (lower - slack <= middle) and (middle <= upper + slack)
    return SandwichDiagnostic(lower=lower, middle=middle, upper=upper, passed=passed)
