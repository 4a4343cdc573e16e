"""Birman-Schwinger operators and the two-way bound-state count.

For ``A >= 0`` self-adjoint, ``B`` symmetric and a spectral shift
``epsilon > 0`` the Birman-Schwinger operator is

    K(eps) = -(A + eps)^(-1/2) B (A + eps)^(-1/2)

and the counting identity says the eigenvalues of ``A + B`` below ``-eps``
are in bijection with the eigenvalues of ``K(eps)`` above 1 (an exact
equality when ``A`` is strictly positive, an inequality ``>=`` when ``A``
merely has a kernel).  This module realizes the operator, both counts, the
critical-coupling locator, and the Hilbert-Schmidt and rank-one-domination
bounds as checkable procedures.

Sign convention: the leading minus is part of the definition here, so
attractive perturbations ``B <= 0`` give ``K(eps) >= 0`` and binding shows
up as eigenvalues crossing +1.  A common variant absorbs the sign into the
perturbation and writes the kernel without the minus; this package uses the
signed form everywhere, including the ``eps = 0`` bounded case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linop import (
    DEFAULT_SEED,
    SymOperator,
    count_evs,
    count_guard,
    hs_norm,
    rank_one_projection,
    spectral_decompose,
    sym,
)

LAMBDA_CAP = 1e6  # largest coupling probed before declaring "never binds"


class ThresholdCollisionError(RuntimeError):
    """An eigenvalue of ``A + B`` sits on the counting threshold ``-eps``."""


class NeverBindsError(RuntimeError):
    """``A + lambda*B`` stays positive semidefinite for all probed couplings."""


@dataclass(frozen=True)
class BsProblem:
    """A counting problem ``(A, B, eps)`` with ``A >= 0`` and ``eps > 0``."""

    a: SymOperator
    b: SymOperator
    epsilon: float

    def __post_init__(self):
        a, b = sym(self.a), sym(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.dim != b.dim:
            raise ValueError(f"dimension mismatch: A is {a.dim}, B is {b.dim}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        min_eig = float(np.linalg.eigvalsh(a.entries)[0])
        floor = -1e-10 * (1.0 + np.linalg.norm(a.entries))
        if min_eig < floor:
            raise ValueError(
                f"A must be positive semidefinite: min eigenvalue {min_eig:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.a.dim


@dataclass(frozen=True)
class CriticalCouplingResult:
    """Location of the coupling at which ``A + lambda*B`` first loses positivity."""

    lambda_star: float
    bracket: tuple[float, float]
    iterations: int
    residual_min_eig: float


def bs_operator(p: BsProblem) -> SymOperator:
    """The operator ``K(eps) = -(A+eps)^(-1/2) B (A+eps)^(-1/2)``, symmetrized."""
    dec = spectral_decompose(p.a)
    shifted = dec.eigenvalues + p.epsilon
    if np.min(shifted) <= 0:
        raise ValueError(
            f"A + eps*I is not positive definite: min shifted eigenvalue "
            f"{np.min(shifted):.3e} with eps={p.epsilon:g}"
        )
    v = dec.eigenvectors
    s = (v * shifted**-0.5) @ v.T
    k = -s @ p.b.entries @ s
    return SymOperator(0.5 * (k + k.T))


def count_direct(p: BsProblem) -> int:
    """Number of eigenvalues of ``A + B`` below ``-eps``, multiplicities included."""
    h = SymOperator(p.a.entries + p.b.entries)
    return count_evs(h, "<", -p.epsilon)


def count_bs(p: BsProblem) -> int:
    """Number of eigenvalues of ``K(eps)`` above 1.

    Raises ThresholdCollisionError when an eigenvalue of ``A + B`` lies
    within the guard band of ``-eps``; the identity with count_direct is
    only asserted off thresholds, so the caller should perturb ``eps``.
    """
    h = SymOperator(p.a.entries + p.b.entries)
    lam = spectral_decompose(h).eigenvalues
    eta = count_guard(h)
    gap = np.min(np.abs(lam + p.epsilon))
    if gap < eta:
        raise ThresholdCollisionError(
            f"an eigenvalue of A+B lies within {gap:.3e} of -eps (guard {eta:.3e}); "
            f"perturb eps (e.g. by a factor 1 +/- 1e-6) and retry"
        )
    return count_evs(bs_operator(p), ">", 1.0)


def mu_max(p: BsProblem) -> float:
    """Largest eigenvalue of the Birman-Schwinger operator ``K(eps)``."""
    return float(spectral_decompose(bs_operator(p)).eigenvalues[-1])


def critical_coupling(a: SymOperator, b: SymOperator, tol: float) -> CriticalCouplingResult:
    """Largest coupling keeping ``A + lambda*B`` positive semidefinite.

    Brackets by doubling lambda from 1 until the smallest eigenvalue drops
    below the guard band, then bisects to a bracket of width <= tol.  Raises
    NeverBindsError if no coupling up to ``LAMBDA_CAP`` binds (which covers
    ``B >= 0``).
    """
    a, b = sym(a), sym(b)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: A is {a.dim}, B is {b.dim}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")

    def min_eig(lam: float) -> tuple[float, float]:
        m = a.entries + lam * b.entries
        return float(np.linalg.eigvalsh(m)[0]), 1e-10 * (1.0 + np.linalg.norm(m))

    iterations = 0
    lo, hi = 0.0, 1.0
    while True:
        e, eta = min_eig(hi)
        iterations += 1
        if e < -eta:
            break
        lo = hi
        hi *= 2.0
        if hi > LAMBDA_CAP:
            raise NeverBindsError(
                f"A + lambda*B stays positive semidefinite up to lambda={LAMBDA_CAP:g}"
            )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        e, eta = min_eig(mid)
        iterations += 1
        if e >= -eta:
            lo = mid
        else:
            hi = mid
    lambda_star = 0.5 * (lo + hi)
    residual, _ = min_eig(lambda_star)
    return CriticalCouplingResult(
        lambda_star=lambda_star,
        bracket=(lo, hi),
        iterations=iterations,
        residual_min_eig=residual,
    )


def hs_count_bound_check(a: SymOperator, delta: float, vectors: np.ndarray) -> tuple[bool, float]:
    """Check ``n <= |A|_HS^2 / delta^2`` for an orthonormal set of test vectors.

    ``vectors`` holds the set as columns; every vector must satisfy
    ``|(phi_i, A phi_i)| >= delta``.  Returns (holds, bound).
    """
    a = sym(a)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != a.dim:
        raise ValueError(f"vectors have length {v.shape[0]}, operator dim is {a.dim}")
    n = v.shape[1]
    gram_defect = float(np.max(np.abs(v.T @ v - np.eye(n))))
    if gram_defect > 1e-10:
        raise ValueError(f"vector set is not orthonormal: Gram defect {gram_defect:.3e}")
    expectations = np.einsum("ij,ij->j", v, a.entries @ v)
    # boundary slack so the extremal equality family is not rejected by rounding
    slack = 1e-12 * (1.0 + delta + np.linalg.norm(a.entries))
    small = np.abs(expectations) < delta - slack
    if np.any(small):
        i = int(np.argmax(small))
        raise ValueError(
            f"|(phi_{i}, A phi_{i})| = {abs(expectations[i]):.6e} < delta = {delta:g}"
        )
    bound = hs_norm(a) ** 2 / delta**2
    return n <= bound + 1e-9 * (1.0 + bound), bound


def rank_one_domination(f: np.ndarray, a: SymOperator, epsilon0: float, c: float) -> float:
    """Constant ``L`` with ``max eig(f f^T - L (A+eps0)^(-1)) <= c``.

    Follows the spectral-cutoff construction: pick the smallest cutoff ``k0``
    in the spectrum of ``A`` with ``|f - P_[0,k0] f| < c/2`` and return
    ``L = 2 (k0 + eps0)``.  The bound is re-verified numerically before
    returning; a failure indicates a guard-band misconfiguration.
    """
    a = sym(a)
    if not epsilon0 > 0:
        raise ValueError(f"epsilon0 must be positive, got {epsilon0}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    proj = rank_one_projection(f)  # validates and normalizes f
    dec = spectral_decompose(a)
    if dec.eigenvalues[0] < -1e-10 * (1.0 + np.linalg.norm(a.entries)):
        raise ValueError(
            f"A must be positive semidefinite: min eigenvalue {dec.eigenvalues[0]:.3e}"
        )
    u = np.linalg.eigh(proj.entries)[1][:, -1]  # normalized copy of f
    coeffs = dec.eigenvectors.T @ u
    # tail norm above each candidate cutoff, scanning cutoffs in ascending order
    tail_sq = np.concatenate(([np.sum(coeffs**2)], np.sum(coeffs**2) - np.cumsum(coeffs**2)))
    cutoffs = np.concatenate(([0.0], np.maximum(dec.eigenvalues, 0.0)))
    ok = np.sqrt(np.maximum(tail_sq, 0.0)) < c / 2.0
    if not np.any(ok):
        raise RuntimeError("no spectral cutoff keeps the tail below c/2")
    k0 = float(cutoffs[int(np.argmax(ok))])
    big_l = 2.0 * (k0 + epsilon0)

    inv = (dec.eigenvectors / (dec.eigenvalues + epsilon0)) @ dec.eigenvectors.T
    top = float(np.linalg.eigvalsh(proj.entries - big_l * inv)[-1])
    if top > c + 1e-10 * (1.0 + big_l):
        raise RuntimeError(
            f"verification failed: max eigenvalue {top:.6e} exceeds c={c:g} "
            f"for L={big_l:g} (guard-band misconfiguration?)"
        )
    return big_l


def random_problem(dim: int, rng=DEFAULT_SEED, *, singular_a: bool = False,
                   indefinite_b: bool = False, epsilon: float | None = None,
                   noise: float = 0.3) -> BsProblem:
    """Seeded random counting problem for property corpora.

    ``A = Q^T D Q`` with ``D`` uniform on [0, 5] (first entry zeroed when
    ``singular_a``), ``B = -G^T G`` with optional symmetric noise making it
    sign-indefinite.  When a drawn ``eps`` collides with the spectrum of
    ``A + B`` it is jittered by 1e-6 relative until the guard band clears.
    """
    rng = np.random.default_rng(rng)
    q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    d = rng.uniform(0.0, 5.0, size=dim)
    if singular_a:
        d[0] = 0.0
    a = SymOperator((q.T * d) @ q)
    g = rng.standard_normal((dim, dim)) / np.sqrt(dim)
    b_mat = -(g.T @ g)
    if indefinite_b:
        w = rng.standard_normal((dim, dim))
        b_mat = b_mat + noise * 0.5 * (w + w.T) / np.sqrt(dim)
    b = SymOperator(0.5 * (b_mat + b_mat.T))

    eps = float(rng.uniform(0.05, 1.0)) if epsilon is None else float(epsilon)
    h = SymOperator(a.entries + b.entries)
    lam = spectral_decompose(h).eigenvalues
    eta = count_guard(h)
    for _ in range(64):
        if np.min(np.abs(lam + eps)) >= eta:
            break
        eps *= 1.0 + 1e-6
    return BsProblem(a=a, b=b, epsilon=eps)
