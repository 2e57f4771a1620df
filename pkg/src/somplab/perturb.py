"""Deterministic instance and perturbation generators.

All randomness flows through numpy's PCG64 bit generator seeded via
SeedSequence, so identical seeds and configurations reproduce matrices
bit for bit.  Sub-streams are labeled to keep draws independent:
(seed, 0) drives the sensing matrix and (seed, 1) the signal; for
perturbations, (seed, 0) drives the sensing noise and (seed, 1) the
measurement noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidConfig,
    PreconditionViolated,
    ZeroReference,
)
from .model import as_matrix
from .rip import DEFAULT_SUBSET_BUDGET, PerturbationLevels, measure_perturbation_levels

ENSEMBLES = ("gaussian", "identity-embedded", "user-supplied")
B_MODES = ("gaussian", "column-skewed")

_MATRIX_STREAM = 0
_SIGNAL_STREAM = 1
_SENSING_NOISE_STREAM = 0
_MEASUREMENT_NOISE_STREAM = 1
_FRAME_STREAM = 7


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass(frozen=True)
class InstanceConfig:
    """One synthetic problem instance: sizes, ensemble, and seed.

    ``matrix`` must be given exactly for the "user-supplied" ensemble.
    ``embed_overlap`` controls the identity-embedded construction: each
    padding column spreads its unit mass so no inner product against an
    identity column exceeds roughly that value.
    """

    m: int
    n: int
    L: int
    k: int
    signal_row_norm_min: float = 0.0
    matrix_ensemble: str = "gaussian"
    seed: int = 0
    matrix: np.ndarray | None = None
    embed_overlap: float = 0.5

    def __post_init__(self):
        if min(self.m, self.n, self.L) < 1:
            raise InvalidConfig(f"m, n, L must be positive, got {(self.m, self.n, self.L)}")
        if not 0 <= self.k <= min(self.m, self.n):
            raise InvalidConfig(f"k = {self.k} outside 0..min({self.m}, {self.n})")
        if self.signal_row_norm_min < 0:
            raise InvalidConfig("signal_row_norm_min must be nonnegative")
        if self.matrix_ensemble not in ENSEMBLES:
            raise InvalidConfig(f"unknown ensemble {self.matrix_ensemble!r}; expected {ENSEMBLES}")
        if self.matrix_ensemble == "user-supplied":
            if self.matrix is None:
                raise InvalidConfig("user-supplied ensemble needs an explicit matrix")
            if np.shape(self.matrix) != (self.m, self.n):
                raise InvalidConfig(
                    f"supplied matrix has shape {np.shape(self.matrix)}, expected {(self.m, self.n)}")
        elif self.matrix is not None:
            raise InvalidConfig(f"ensemble {self.matrix_ensemble!r} does not take a matrix")
        if not 0 < self.embed_overlap <= 1:
            raise InvalidConfig("embed_overlap must lie in (0, 1]")


def gen_sensing_matrix(cfg: InstanceConfig) -> np.ndarray:
    """Draw (or echo) the sensing matrix described by ``cfg``.

    gaussian: i.i.d. normal entries with variance 1/m, so columns have
    unit expected norm.  identity-embedded: the identity on the first
    min(m, n) columns; any further column spreads its unit mass evenly
    over a window of ceil(1/overlap^2) rows, giving inner products of
    about ``embed_overlap`` against the identity columns it touches.
    """
    if cfg.matrix_ensemble == "user-supplied":
        return np.array(as_matrix(cfg.matrix, "supplied matrix"))
    if cfg.matrix_ensemble == "gaussian":
        rng = _rng(cfg.seed, _MATRIX_STREAM)
        return rng.standard_normal((cfg.m, cfg.n)) / math.sqrt(cfg.m)
    # identity-embedded; deterministic, no randomness involved
    A = np.zeros((cfg.m, cfg.n))
    lead = min(cfg.m, cfg.n)
    A[np.arange(lead), np.arange(lead)] = 1.0
    width = min(cfg.m, max(1, round(1.0 / cfg.embed_overlap ** 2)))
    for j in range(lead, cfg.n):
        rows = [((j - lead) * width + i) % cfg.m for i in range(width)]
        A[rows, j] = 1.0 / math.sqrt(width)
    return A


def gen_sparse_signal(cfg: InstanceConfig) -> np.ndarray:
    """Draw an exactly k-row-sparse signal with a guaranteed row floor.

    The support is a uniform draw of k distinct rows; entries on it are
    standard normal, and any support row whose norm falls below
    ``signal_row_norm_min`` is rescaled up to exactly that floor.  k = 0
    yields the zero signal.
    """
    X = np.zeros((cfg.n, cfg.L))
    if cfg.k == 0:
        return X
    rng = _rng(cfg.seed, _SIGNAL_STREAM)
    support = np.sort(rng.choice(cfg.n, size=cfg.k, replace=False))
    rows = rng.standard_normal((cfg.k, cfg.L))
    norms = np.linalg.norm(rows, axis=1)
    while np.any(norms == 0):  # measure-zero, but keep the floor honest
        dead = norms == 0
        rows[dead] = rng.standard_normal((int(dead.sum()), cfg.L))
        norms = np.linalg.norm(rows, axis=1)
    if cfg.signal_row_norm_min > 0:
        weak = norms < cfg.signal_row_norm_min
        rows[weak] *= (cfg.signal_row_norm_min / norms[weak])[:, None]
    X[support] = rows
    return X


@dataclass(frozen=True)
class PerturbationSpec:
    """Target levels plus, after calibration, the realized perturbations.

    Generated mode: leave E and B as None; ``calibrate_perturbation``
    draws them from ``seed`` and scales them so the realized eps0/epsb
    hit the targets exactly.  User-supplied mode: pass E and/or B
    explicitly; they are kept as given and only measured.  ``b_mode``
    "column-skewed" concentrates the whole measurement perturbation on
    the weakest measurement column, so one column's relative corruption
    far exceeds the global level.
    """

    target_eps0: float = 0.0
    target_epsb: float = 0.0
    seed: int = 0
    b_mode: str = "gaussian"
    E: np.ndarray | None = None
    B: np.ndarray | None = None
    realized: PerturbationLevels | None = None

    def __post_init__(self):
        if self.target_eps0 < 0 or self.target_epsb < 0:
            raise InvalidConfig("target levels must be nonnegative")
        if self.b_mode not in B_MODES:
            raise InvalidConfig(f"unknown b_mode {self.b_mode!r}; expected {B_MODES}")


def calibrate_perturbation(Phi, Y, spec: PerturbationSpec, order: int = 1,
                           subset_budget: int = DEFAULT_SUBSET_BUDGET) -> PerturbationSpec:
    """Realize a perturbation spec against concrete clean observations.

    Generated perturbations are scaled in one multiplication
    (E = E0 * target_eps0 ||Phi||_2 / ||E0||_2, and likewise for B with
    Frobenius norms), so the realized full-matrix levels match the
    targets to rounding.  The submatrix level eps is then measured up to
    width ``order``, never targeted.  Returns a new spec carrying E, B
    and the measured levels.
    """
    Phi = as_matrix(Phi, "sensing matrix")
    Y = as_matrix(Y, "measurements")
    if Phi.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"sensing matrix has {Phi.shape[0]} rows, measurements {Y.shape[0]}")
    spectral_phi = float(np.linalg.norm(Phi, 2))
    frob_y = float(np.linalg.norm(Y))
    if spectral_phi == 0.0:
        raise ZeroReference("sensing matrix has zero spectral norm")
    if frob_y == 0.0:
        raise ZeroReference("measurements have zero Frobenius norm")

    if spec.E is not None or spec.B is not None:
        E = as_matrix(spec.E, "sensing perturbation") if spec.E is not None else np.zeros_like(Phi)
        B = as_matrix(spec.B, "measurement perturbation") if spec.B is not None else np.zeros_like(Y)
    else:
        if spec.target_eps0 == 0.0:
            E = np.zeros_like(Phi)
        else:
            E0 = _rng(spec.seed, _SENSING_NOISE_STREAM).standard_normal(Phi.shape)
            E = E0 * (spec.target_eps0 * spectral_phi / float(np.linalg.norm(E0, 2)))
        if spec.target_epsb == 0.0:
            B = np.zeros_like(Y)
        elif spec.b_mode == "gaussian":
            B0 = _rng(spec.seed, _MEASUREMENT_NOISE_STREAM).standard_normal(Y.shape)
            B = B0 * (spec.target_epsb * frob_y / float(np.linalg.norm(B0)))
        else:  # column-skewed: all of the budget lands on the weakest column
            j = int(np.argmin(np.linalg.norm(Y, axis=0)))
            b = _rng(spec.seed, _MEASUREMENT_NOISE_STREAM).standard_normal(Y.shape[0])
            B = np.zeros_like(Y)
            B[:, j] = b * (spec.target_epsb * frob_y / float(np.linalg.norm(b)))
    if E.shape != Phi.shape:
        raise DimensionMismatch(f"sensing perturbation shape {E.shape} != {Phi.shape}")
    if B.shape != Y.shape:
        raise DimensionMismatch(f"measurement perturbation shape {B.shape} != {Y.shape}")
    realized = measure_perturbation_levels(Phi, E, Y, B, order, subset_budget)
    return replace(spec, E=E, B=B, realized=realized)


def apply_perturbation(Y, Phi, spec: PerturbationSpec):
    """Return the perturbed observations (Y + B, Phi + E)."""
    Phi = as_matrix(Phi, "sensing matrix")
    Y = as_matrix(Y, "measurements")
    if spec.E is None or spec.B is None:
        raise PreconditionViolated("spec not realized; call calibrate_perturbation first")
    if spec.E.shape != Phi.shape or spec.B.shape != Y.shape:
        raise DimensionMismatch("realized perturbation shapes do not match the observations")
    return Y + spec.B, Phi + spec.E


def coherent_pair_matrix(n: int, rho: float, m: int | None = None) -> np.ndarray:
    """Unit-norm columns where exactly one pair has inner product rho.

    Columns 0 and 1 span an angle with cosine rho; every other column is
    a fresh standard basis vector orthogonal to everything else.  The
    order-2 isometry constant of this matrix is exactly rho, which makes
    it a handy analytic test case.
    """
    if n < 2:
        raise InvalidConfig("need at least two columns")
    m = n if m is None else m
    if m < n:
        raise InvalidConfig("need m >= n so the extra columns can stay orthogonal")
    if not 0 <= rho < 1:
        raise InvalidConfig("rho must lie in [0, 1)")
    A = np.zeros((m, n))
    A[0, 0] = 1.0
    A[0, 1] = rho
    A[1, 1] = math.sqrt(1.0 - rho ** 2)
    for j in range(2, n):
        A[j, j] = 1.0
    return A


def low_coherence_frame(m: int, n: int, seed: int = 0, order: int = 3,
                        stage1_iters: int = 800, stage2_iters: int = 300) -> np.ndarray:
    """Unit-norm frame tuned so every ``order``-column submatrix is well
    conditioned.

    Stage 1 alternates between clipping Gram off-diagonals at an annealed
    ceiling and projecting back to rank m with a unit diagonal.  Stage 2
    then shrinks the pair couplings inside the currently worst
    ``order``-subsets directly.  The best iterate (smallest exact
    order-``order`` isometry constant) is returned.  Deterministic per
    seed; at overcomplete desk sizes such as (20, 25) the result lands
    well below the constants random draws achieve.
    """
    if not 1 <= order <= n:
        raise InvalidConfig(f"order {order} outside 1..{n}")
    rng = _rng(seed, _FRAME_STREAM)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0, keepdims=True)
    idx = np.asarray(list(combinations(range(n), order)), dtype=np.intp)

    def deviations(M):
        G = M.T @ M
        sub = G[idx[:, :, None], idx[:, None, :]]
        w = np.linalg.eigvalsh(sub)
        return np.maximum(w[:, -1] - 1.0, 1.0 - w[:, 0])

    def project_rank_m(G):
        w, V = np.linalg.eigh(G)
        lam = np.clip(w[-m:], 0.0, None)
        M = (V[:, -m:] * np.sqrt(lam)).T
        norms = np.linalg.norm(M, axis=0, keepdims=True)
        norms[norms == 0] = 1.0
        return M / norms

    best_dev = float(deviations(A).max())
    best = A.copy()
    mu = 0.35
    for t in range(stage1_iters):
        mu = max(0.10, mu * 0.99)
        G = A.T @ A
        off = G - np.diag(np.diag(G))
        G2 = np.sign(off) * np.minimum(np.abs(off), mu) + np.eye(n)
        A = project_rank_m(G2)
        if t % 10 == 9:
            d = float(deviations(A).max())
            if d < best_dev:
                best_dev, best = d, A.copy()

    A = best.copy()
    for _ in range(stage2_iters):
        dev = deviations(A)
        d = float(dev.max())
        if d < best_dev:
            best_dev, best = d, A.copy()
        shrink = np.ones((n, n))
        worst = np.flatnonzero(dev >= d * 0.98)[:200]
        for row in idx[worst]:
            cols = np.asarray(row)
            shrink[np.ix_(cols, cols)] = 0.97
        G = (A.T @ A) * shrink
        np.fill_diagonal(G, 1.0)
        A = project_rank_m(G)
    return best
