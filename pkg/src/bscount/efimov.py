"""Three identical bosons with a rank-one separable pair force.

The pair interaction is ``v = -lam |g><g|`` with the Yamaguchi form factor
``g(p) = 1/(p^2 + beta^2)`` acting on the pair momentum of each two-body
subsystem, in mass-scaled Jacobi coordinates that keep the kinetic operator
a flat Laplacian.  Projecting the bound-state problem on the form factor
reduces it to a one-dimensional integral kernel in the spectator momentum;
trimer energies are the points where an eigenvalue of that kernel crosses 1.

The kernel's mass coefficients come from the orthogonal Jacobi rotation
between spectator frames (see docs/three_boson_kernel.md for the full
derivation); they are validated against independent oracles (weak-coupling
absence of trimers, two-body counting at the unitarity coupling, and the
geometric accumulation ratio at unitarity) rather than asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.integrate
from scipy.special import roots_legendre

from .linop import SymOperator

EQUAL_MASS_TOL = 1e-12
UNITARITY_RTOL = 1e-8


@dataclass(frozen=True)
class JacobiCoeffs:
    """2x2 orthogonal rotation between two spectator Jacobi frames."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
        defect = np.linalg.norm(a.T @ a - np.eye(2))
        if defect > 1e-12:
            raise ValueError(f"coefficient matrix is not orthogonal: defect {defect:.3e}")
        if abs(a[1, 1] + a[0, 0]) > 1e-12 or abs(a[0, 1] - a[1, 0]) > 1e-12:
            raise ValueError("expected the symmetric rotation structure "
                             "a22 = -a11, a12 = a21")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True, eq=False)
class SeparableModel:
    """Yamaguchi separable model: form-factor range, coupling, momentum grid.

    ``grid_c`` controls the node map ``p = p_max * t / (1 + c (1 - t))``
    concentrating Gauss-Legendre nodes at small momenta, where the trimer
    accumulation lives.
    """

    beta: float
    lam: float
    p_max: float
    n_p: int
    masses: tuple[float, float, float] = (1.0, 1.0, 1.0)
    grid_c: float = 3.0

    def __post_init__(self):
        if not (self.beta > 0 and self.p_max > 0):
            raise ValueError("beta and p_max must be positive")
        if self.lam < 0:
            raise ValueError(f"coupling must be >= 0, got {self.lam}")
        if self.n_p < 64:
            raise ValueError(f"need n_p >= 64 quadrature points, got {self.n_p}")
        if any(m <= 0 for m in self.masses):
            raise ValueError("masses must be positive")

    def momentum_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Mapped Gauss-Legendre nodes and weights on (0, p_max)."""
        x, w = roots_legendre(self.n_p)
        t = 0.5 * (x + 1.0)
        wt = 0.5 * w
        denom = 1.0 + self.grid_c * (1.0 - t)
        p = self.p_max * t / denom
        dp = self.p_max * (1.0 + self.grid_c) / denom**2
        return p, wt * dp

    def with_lam(self, lam: float) -> "SeparableModel":
        return replace(self, lam=float(lam))


def jacobi_pair_coeffs(masses) -> JacobiCoeffs:
    """Rotation between the Jacobi frames of spectators 1 and 2.

    For masses ``m_1 .. m_N`` (N >= 3) with total ``M``:

        a11 = -sqrt(m1 m2 / ((M - m1)(M - m2)))
        a12 =  sqrt(M (M - m1 - m2) / ((M - m1)(M - m2)))

    with ``a21 = a12`` and ``a22 = -a11``; the matrix is orthogonal.
    """
    m = np.asarray(list(masses), dtype=float)
    if m.size < 3:
        raise ValueError(f"need at least three masses, got {m.size}")
    if np.any(m <= 0):
        raise ValueError("masses must be positive")
    total = float(np.sum(m))
    denom = (total - m[0]) * (total - m[1])
    a11 = -np.sqrt(m[0] * m[1] / denom)
    a12 = np.sqrt(total * (total - m[0] - m[1]) / denom)
    return JacobiCoeffs(a=np.array([[a11, a12], [a12, -a11]]))


def lambda_unitary(beta: float) -> float:
    """Coupling at which the two-body subsystem reaches zero binding.

    The condition ``1 = lam * 4 pi Int g^2(q) dq`` gives ``lam = beta^3/pi^2``
    in closed form; the quadrature evaluation of the integral is checked
    against the closed form to 1e-10 before returning.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    quadrature, _ = scipy.integrate.quad(
        lambda q: 1.0 / (q**2 + beta**2) ** 2, 0.0, np.inf,
        epsabs=0.0, epsrel=1e-13)
    closed = np.pi / (4.0 * beta**3)
    if abs(quadrature / closed - 1.0) > 1e-10:
        raise RuntimeError(
            f"quadrature {quadrature!r} disagrees with the closed form {closed!r}")
    return beta**3 / np.pi**2


def two_body_loop(c: float, beta: float) -> float:
    """``Int g^2(k) / (k^2 + c^2) d3k = pi^2 / (beta (beta + c)^2)``."""
    return np.pi**2 / (beta * (beta + c) ** 2)


def _pair_amplitude_denominator(model: SeparableModel, q, abs_e):
    """``D(q; E) = 1 - lam * two_body_loop(sqrt(q^2+|E|))`` on the grid."""
    c = np.sqrt(q**2 + abs_e)
    return 1.0 - model.lam * two_body_loop(c, model.beta)


def dimer_energy(model: SeparableModel) -> float:
    """Two-body binding energy of the pair subsystem (0.0 when unbound).

    The bound state sits where the pair amplitude denominator vanishes at
    zero spectator momentum: ``E_d = -(sqrt(lam pi^2 / beta) - beta)^2``
    once the coupling exceeds the zero-binding value.
    """
    kappa = np.sqrt(model.lam * np.pi**2 / model.beta) - model.beta
    if kappa <= 0:
        return 0.0
    return -float(kappa**2)


def three_boson_kernel(model: SeparableModel, energy: float, *,
                       n_angle: int = 48) -> SymOperator:
    """Spectator-momentum kernel whose unit eigenvalues mark trimer energies.

    Weight-symmetrized s-wave kernel at total energy ``energy < 0``:

        K(s,q) = C sqrt(w_s w_q) s q J(s,q) / sqrt(D(s) D(q)),
        C = 4 pi lam a12^3,
        J = Int_-1^1 du / [(q^2 - 2 a11 s q u + a11^2 s^2 + a12^2 beta^2)
                           (s^2 - 2 a11 s q u + a11^2 q^2 + a12^2 beta^2)
                           (s^2 + q^2 - 2 a11 s q u + a12^2 |E|)]

    where (a11, a12) is the orthogonal Jacobi rotation of the equal-mass
    system and ``D`` the two-body pair amplitude denominator.
    """
    if not energy < 0:
        raise ValueError(f"trimer search needs energy < 0, got {energy}")
    if max(model.masses) - min(model.masses) > EQUAL_MASS_TOL:
        raise ValueError("the symmetrized one-channel kernel needs equal masses")
    abs_e = -float(energy)
    coeffs = jacobi_pair_coeffs(model.masses).a
    a11, a12 = float(coeffs[0, 0]), float(coeffs[0, 1])
    beta2 = a12**2 * model.beta**2

    p, w = model.momentum_grid()
    d = _pair_amplitude_denominator(model, p, abs_e)
    if np.any(d <= 0):
        raise ValueError(
            "pair amplitude denominator vanishes: energy is above the "
            "two-body threshold for this coupling")

    u, wu = roots_legendre(n_angle)
    s2 = p**2
    constant = 4.0 * np.pi * model.lam * a12**3
    prefactor = np.sqrt(w * s2 / d)  # sqrt(w_i) p_i / sqrt(D_i)

    out = np.empty((model.n_p, model.n_p))
    chunk = max(1, int(2e6 / (model.n_p * n_angle)))
    for lo in range(0, model.n_p, chunk):
        hi = min(lo + chunk, model.n_p)
        si2 = s2[lo:hi, None, None]
        qj2 = s2[None, :, None]
        cross = (-2.0 * a11) * p[lo:hi, None, None] * p[None, :, None] * u[None, None, :]
        f1 = qj2 + cross + a11**2 * si2 + beta2
        f2 = si2 + cross + a11**2 * qj2 + beta2
        f3 = si2 + qj2 + cross + a12**2 * abs_e
        out[lo:hi, :] = np.einsum("ijk,k->ij", 1.0 / (f1 * f2 * f3), wu)
    kernel = constant * (prefactor[:, None] * out * prefactor[None, :])
    return SymOperator(0.5 * (kernel + kernel.T))


def kernel_top_eigenvalue(model: SeparableModel, energy: float) -> float:
    return float(np.linalg.eigvalsh(three_boson_kernel(model, energy).entries)[-1])


def _count_at_or_above_one(model: SeparableModel, energy: float) -> int:
    lam = np.linalg.eigvalsh(three_boson_kernel(model, energy).entries)
    return int(np.sum(lam >= 1.0))


@dataclass(frozen=True, eq=False)
class TrimerLevel:
    """One trimer root: energy, and whether it sits in the cutoff-stable zone."""

    energy: float
    cutoff_stable: bool


def trimer_spectrum(model: SeparableModel, e_floor: float, *,
                    rel_tol: float = 1e-10,
                    points_per_decade: int = 4) -> list[TrimerLevel]:
    """All kernel-eigenvalue-1 crossings between ``e_floor`` and the grid floor.

    Scans ``|E|`` downward from ``|e_floor|`` on a logarithmic ladder, using
    the eigenvalue count at-or-above 1 (each trimer adds one), and bisects
    every count change in ``log |E|`` to ``rel_tol`` relative.  The scan
    stops where the momentum grid can no longer resolve the states (binding
    momentum within a decade of the smallest node) or, above the two-body
    binding coupling, at the dimer threshold; levels below ten times the
    infrared node are flagged cutoff-unstable.
    """
    if not e_floor < 0:
        raise ValueError(f"e_floor must be negative, got {e_floor}")
    p_min = float(model.momentum_grid()[0][0])
    # above two-body binding, stop 1% above the dimer threshold: the pair
    # amplitude denominator vanishes there and eigenvalues pile up
    e_stop = max((10.0 * p_min) ** 2, abs(e_floor) * 1e-18,
                 abs(dimer_energy(model)) * 1.01)
    if e_stop >= abs(e_floor):
        raise ValueError("e_floor is already inside the grid-limited region; "
                         "raise n_p or lower |e_floor|")
    if _count_at_or_above_one(model, e_floor) != 0:
        raise ValueError(
            f"levels exist below e_floor = {e_floor:g}; deepen the floor")

    ratio = 10.0 ** (1.0 / points_per_decade)
    energies: list[float] = []
    abs_hi = abs(e_floor)
    count_hi = 0
    while abs_hi > e_stop * (1.0 + 1e-9):
        abs_lo = max(abs_hi / ratio, e_stop)
        count_lo = _count_at_or_above_one(model, -abs_lo)
        for level in range(count_hi, count_lo):
            # bisect in log|E| for the crossing of level index `level`
            lo, hi = np.log(abs_lo), np.log(abs_hi)
            while hi - lo > rel_tol:
                mid = 0.5 * (lo + hi)
                if _count_at_or_above_one(model, -np.exp(mid)) > level:
                    lo = mid
                else:
                    hi = mid
            energies.append(-np.exp(0.5 * (lo + hi)))
        count_hi = count_lo
        abs_hi = abs_lo
    stable_floor = (10.0 * p_min) ** 2
    return [TrimerLevel(energy=e, cutoff_stable=abs(e) >= stable_floor * 1.0)
            for e in sorted(energies)]


def efimov_spectrum(model: SeparableModel, e_floor: float) -> list[TrimerLevel]:
    """Trimer ladder at two-body unitarity.

    Requires the coupling to sit at ``lambda_unitary(beta)`` within 1e-8
    relative, and at least three resolved levels (otherwise the grid is too
    coarse: raise ``p_max`` or ``n_p``).  Energies come back ascending
    (deepest first).
    """
    lam_u = lambda_unitary(model.beta)
    if abs(model.lam - lam_u) > UNITARITY_RTOL * lam_u:
        raise ValueError(
            f"coupling {model.lam!r} is off unitarity {lam_u!r} by more than "
            f"{UNITARITY_RTOL:g} relative")
    levels = trimer_spectrum(model, e_floor)
    if len(levels) < 3:
        raise RuntimeError(
            f"only {len(levels)} trimer levels resolved; raise p_max or n_p")
    return levels


def s0_oracle() -> tuple[float, float]:
    """Scale exponent of the accumulation law and the energy ratio it implies.

    Solves ``s cosh(pi s / 2) = (8 / sqrt(3)) sinh(pi s / 6)`` for s in
    (0, 2) by bisection to 1e-12 and returns ``(s0, exp(2 pi / s0))``.
    """

    def residual(s):
        return s * np.cosh(np.pi * s / 2.0) - (8.0 / np.sqrt(3.0)) * np.sinh(np.pi * s / 6.0)

    lo, hi = 0.1, 2.0
    if not (residual(lo) < 0 < residual(hi)):
        raise RuntimeError("bisection bracket lost the transcendental root")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0:
            lo = mid
        else:
            hi = mid
    s0 = 0.5 * (lo + hi)
    return s0, float(np.exp(2.0 * np.pi / s0))
