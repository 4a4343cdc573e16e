"""Dense self-adjoint operator algebra on a finite-dimensional state space.

Everything downstream (counting identities, projection subtraction, radial
kernels) is built from the five primitives here: spectral decomposition,
scalar functional calculus, guarded eigenvalue counting, Hilbert-Schmidt
norms, and rank-one projections.  All values are immutable after
construction and every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Relative tolerance for accepting a matrix as symmetric.
SYMMETRY_RTOL = 1e-12

# Default 64-bit seed threaded through every randomized routine.
DEFAULT_SEED = 0xB5C0

# Smallest vector norm rank_one_projection will normalize away.
MIN_PROJECTION_NORM = 1e-8

_RELATIONS = (">", ">=", "<", "<=")
_RELATION_ALIASES = {"≥": ">=", "≤": "<="}  # accept the unicode forms


@dataclass(frozen=True)
class SymOperator:
    """A dense real symmetric matrix standing for a self-adjoint operator.

    Entries are validated for symmetry at construction and frozen; use
    ``entries`` for the raw ndarray and ``dim`` for the dimension.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("operator dimension must be at least 1")
        asym = np.linalg.norm(a - a.T)
        scale = 1.0 + np.linalg.norm(a)
        if asym > SYMMETRY_RTOL * scale:
            max_asym = float(np.max(np.abs(a - a.T)))
            raise ValueError(
                f"matrix is not symmetric: max |A - A^T| entry = {max_asym:.3e}, "
                f"Frobenius asymmetry {asym:.3e} exceeds {SYMMETRY_RTOL:g}*(1+|A|_F)"
            )
        a = 0.5 * (a + a.T)  # kill representation-level rounding asymmetry
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self):
        return f"SymOperator(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a SymOperator."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym(entries) -> SymOperator:
    """Shorthand constructor, accepting anything array-like."""
    if isinstance(entries, SymOperator):
        return entries
    return SymOperator(np.asarray(entries, dtype=float))


def spectral_decompose(a: SymOperator) -> SpectralDecomp:
    """Full eigendecomposition of a symmetric operator.

    Returns eigenvalues in ascending order with orthonormal eigenvector
    columns.  The residual invariants ``|A V - V diag(lam)|_F`` and
    ``|V^T V - I|_F`` are checked before returning.
    """
    a = sym(a)
    try:
        lam, vec = np.linalg.eigh(a.entries)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigendecomposition did not converge: {exc}") from exc
    scale = 1.0 + np.linalg.norm(a.entries)
    residual = np.linalg.norm(a.entries @ vec - vec * lam)
    if residual > 1e-10 * scale:
        raise RuntimeError(
            f"eigendecomposition residual {residual:.3e} exceeds 1e-10*(1+|A|_F)"
        )
    ortho = np.linalg.norm(vec.T @ vec - np.eye(a.dim))
    if ortho > 1e-10:
        raise RuntimeError(f"eigenvector orthonormality defect {ortho:.3e} exceeds 1e-10")
    lam.setflags(write=False)
    vec.setflags(write=False)
    return SpectralDecomp(eigenvalues=lam, eigenvectors=vec)


def op_function(a: SymOperator, f: Callable[[float], float]) -> SymOperator:
    """Scalar functional calculus: apply ``f`` to the spectrum of ``a``.

    Computes ``V diag(f(lam)) V^T`` from the spectral decomposition.  ``f``
    must be finite at every eigenvalue; otherwise a ValueError names the
    offending eigenvalue.
    """
    a = sym(a)
    dec = spectral_decompose(a)
    values = np.empty(a.dim)
    with np.errstate(all="ignore"):
        for i, lam in enumerate(dec.eigenvalues):
            try:
                y = float(f(lam))
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise ValueError(
                    f"function undefined at eigenvalue {lam!r}: {exc}"
                ) from exc
            if not np.isfinite(y):
                raise ValueError(
                    f"function value {y!r} at eigenvalue {lam!r} is not finite"
                )
            values[i] = y
    v = dec.eigenvectors
    out = (v * values) @ v.T
    return SymOperator(0.5 * (out + out.T))


def count_guard(a: SymOperator) -> float:
    """Comparison guard band used by count_evs: 1e-10 * (1 + |A|_F)."""
    return 1e-10 * (1.0 + float(np.linalg.norm(sym(a).entries)))


def count_evs(a: SymOperator, relation: str, threshold: float,
              guard: float | None = None) -> int:
    """Count eigenvalues satisfying ``relation threshold``, with multiplicities.

    Strict relations exclude a guard band around the threshold and non-strict
    ones include it, so counts are exact whenever spectral gaps are large
    compared to the band (default ``1e-10 * (1 + |A|_F)``).
    """
    a = sym(a)
    relation = _RELATION_ALIASES.get(relation, relation)
    if relation not in _RELATIONS:
        raise ValueError(f"unknown relation {relation!r}, expected one of {_RELATIONS}")
    eta = count_guard(a) if guard is None else float(guard)
    lam = spectral_decompose(a).eigenvalues
    if relation == ">":
        return int(np.count_nonzero(lam > threshold + eta))
    if relation == ">=":
        return int(np.count_nonzero(lam >= threshold - eta))
    if relation == "<":
        return int(np.count_nonzero(lam < threshold - eta))
    return int(np.count_nonzero(lam <= threshold + eta))


def hs_norm(a: SymOperator) -> float:
    """Hilbert-Schmidt (Frobenius) norm of the operator."""
    return float(np.linalg.norm(sym(a).entries))


def rank_one_projection(f: np.ndarray) -> SymOperator:
    """Orthogonal projection onto the span of a vector: ``P = f f^T``.

    The input is normalized internally; vectors with norm below
    ``MIN_PROJECTION_NORM`` are rejected rather than silently amplified.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(f))
    if norm < MIN_PROJECTION_NORM:
        raise ValueError(
            f"vector norm {norm:.3e} below {MIN_PROJECTION_NORM:g}; refusing to normalize"
        )
    u = f / norm
    return SymOperator(np.outer(u, u))
