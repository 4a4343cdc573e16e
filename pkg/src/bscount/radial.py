"""Two-body continuum experiments on a radial grid.

Units are hbar = 2m = 1 with H = -Laplacian + v, so energies carry
1/length^2.  A partial wave ``ell`` reduces H to

    -d^2/dr^2 + ell(ell+1)/r^2 + v(r)     on (0, r_max), Dirichlet ends.

Two discretization schemes coexist:

* ``uniform_fd2`` -- second-order finite differences on a half-step-offset
  uniform mesh (nodes at (j - 1/2) h), which regularizes the centrifugal
  term at the origin.  This is the route for Hamiltonian spectra, counting,
  and critical couplings.
* ``gauss_legendre`` -- quadrature nodes for integral kernels built from the
  closed-form s-wave Green function of the *semi-infinite* domain.  This is
  the route for near-threshold scaling, where any finite box would destroy
  the square-root law of the resonance channel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.integrate
import scipy.linalg
from scipy.special import gamma as gamma_fn
from scipy.special import roots_legendre

from .bsengine import CriticalCouplingResult
from .linop import SymOperator, op_function

POTENTIAL_KINDS = ("yukawa", "exponential", "gaussian", "square_well", "table")

# tail fraction above which a radial quadrature is declared divergent
TAIL_LIMIT = 1e-3


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Radial pair potential: ``v(r) = -strength * shape(r)`` plus an
    optional repulsive part of the same structure with positive sign.

    ``shape`` is a nonnegative, bounded unit profile set by ``kind`` and
    ``range``; tables interpolate linearly inside their abscissas, extend
    the first value to r = 0 and vanish beyond the last point.
    """

    kind: str
    strength: float
    range: float = 1.0
    table_r: np.ndarray | None = None
    table_v: np.ndarray | None = None
    repulsive_part: "PotentialSpec | None" = None

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not self.strength >= 0:
            raise ValueError(f"strength must be >= 0, got {self.strength}")
        if not self.range > 0:
            raise ValueError(f"range must be positive, got {self.range}")
        if self.kind == "table":
            r = np.asarray(self.table_r, dtype=float)
            v = np.asarray(self.table_v, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise ValueError("table potentials need matching 1-d r and v columns")
            if np.any(np.diff(r) <= 0):
                raise ValueError("table abscissas must be strictly increasing")
            if np.any(v < 0):
                raise ValueError("table shape values must be nonnegative")
            object.__setattr__(self, "table_r", r)
            object.__setattr__(self, "table_v", v)
        # numerical check that r^2 * shape is integrable: the [2R, 4R] tail
        # must carry a negligible fraction of what [0, 4R] carries
        probe_r = np.linspace(1e-9, 4.0 * self.support_radius(), 4097)
        mass = probe_r**2 * self.shape(probe_r)
        total = scipy.integrate.trapezoid(mass, probe_r)
        if total > 0:
            far = probe_r > 2.0 * self.support_radius()
            tail = scipy.integrate.trapezoid(mass[far], probe_r[far])
            if tail > TAIL_LIMIT * total:
                raise ValueError("r^2 * shape does not decay fast enough to integrate")

    def shape(self, r):
        """Unit attractive profile, vectorized over r >= 0."""
        r = np.asarray(r, dtype=float)
        x = r / self.range
        if self.kind == "yukawa":
            with np.errstate(divide="ignore"):
                out = np.where(x > 0, np.exp(-x) / np.maximum(x, 1e-300), np.inf)
            return out
        if self.kind == "exponential":
            return np.exp(-x)
        if self.kind == "gaussian":
            return np.exp(-(x**2))
        if self.kind == "square_well":
            return np.where(r < self.range, 1.0, 0.0)
        return np.interp(r, self.table_r, self.table_v,
                         left=self.table_v[0], right=0.0)

    def support_radius(self) -> float:
        """Radius beyond which the shape is (effectively) negligible."""
        if self.kind == "square_well":
            return self.range
        if self.kind == "table":
            return float(self.table_r[-1])
        if self.kind == "gaussian":
            return 8.0 * self.range
        return 45.0 * self.range  # yukawa / exponential tails

    def v(self, r):
        """Full potential ``-strength*shape + repulsive part`` on r."""
        out = -self.strength * self.shape(r)
        if self.repulsive_part is not None:
            out = out + self.repulsive_part.strength * self.repulsive_part.shape(r)
        return out

    def v_minus(self, r):
        return np.maximum(-self.v(r), 0.0)

    def v_plus(self, r):
        return np.maximum(self.v(r), 0.0)

    def with_strength(self, strength: float) -> "PotentialSpec":
        return replace(self, strength=float(strength))

    def breakpoints(self) -> tuple[float, ...]:
        """Radii where the shape is discontinuous (quadrature panel edges)."""
        own = (self.range,) if self.kind == "square_well" else ()
        if self.repulsive_part is not None:
            own = own + self.repulsive_part.breakpoints()
        return own


@dataclass(frozen=True)
class RadialGrid:
    """Partial-wave index, mesh and quadrature weights for one channel."""

    ell: int
    r_max: float
    n: int
    scheme: str = "uniform_fd2"

    def __post_init__(self):
        if self.ell < 0 or int(self.ell) != self.ell:
            raise ValueError(f"ell must be a nonnegative integer, got {self.ell}")
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.n < 16:
            raise ValueError(f"need n >= 16 interior points, got {self.n}")
        if self.scheme not in ("uniform_fd2", "gauss_legendre"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def h(self) -> float:
        """Mesh spacing of the uniform scheme; nodes sit at cell midpoints."""
        return self.r_max / self.n

    @property
    def nodes(self) -> np.ndarray:
        if self.scheme == "uniform_fd2":
            return (np.arange(1, self.n + 1) - 0.5) * self.h
        x, _ = roots_legendre(self.n)
        return 0.5 * self.r_max * (x + 1.0)

    @property
    def weights(self) -> np.ndarray:
        if self.scheme == "uniform_fd2":
            return np.full(self.n, self.h)
        _, w = roots_legendre(self.n)
        return 0.5 * self.r_max * w

    def refined(self, factor: int = 2, *, box_factor: int = 1) -> "RadialGrid":
        """Refined copy: ``factor`` scales n, ``box_factor`` scales r_max too.

        ``refined(2)`` halves the mesh at fixed box; ``refined(2, box_factor=2)``
        doubles the box at fixed mesh spacing (the converging family for
        threshold quantities whose error is dominated by the box).
        """
        return replace(self, n=self.n * factor,
                       r_max=self.r_max * box_factor)


@dataclass(frozen=True, eq=False)
class MuScalingReport:
    """Near-threshold scan of the largest Birman-Schwinger eigenvalue."""

    epsilons: np.ndarray
    mus: np.ndarray
    fitted_exponent: float
    fit_window: tuple[float, float]
    a_mu_estimate: float


# ---------------------------------------------------------------------------
# finite-difference Hamiltonian


def _fd_diagonals(pot: PotentialSpec | None, grid: RadialGrid):
    """Main and off diagonal of the reduced operator on the uniform mesh."""
    if grid.scheme != "uniform_fd2":
        raise ValueError("finite differences are defined on the uniform_fd2 scheme")
    r = grid.nodes
    h = grid.h
    diag = np.full(grid.n, 2.0 / h**2)
    # antisymmetric ghosts enforce u(0) = 0 and u(r_max) = 0 on the
    # cell-midpoint mesh (the discrete sine modes are exact eigenvectors)
    diag[0] += 1.0 / h**2
    diag[-1] += 1.0 / h**2
    if grid.ell > 0:
        diag += grid.ell * (grid.ell + 1) / r**2
    if pot is not None:
        diag += pot.v(r)
    off = np.full(grid.n - 1, -1.0 / h**2)
    return diag, off


def _warn_if_box_small(pot: PotentialSpec, grid: RadialGrid):
    if grid.r_max <= 10.0 * pot.range:
        warnings.warn(
            f"r_max = {grid.r_max:g} is below 10x the potential range {pot.range:g}; "
            f"box effects may be significant", stacklevel=3)


def reduced_hamiltonian(pot: PotentialSpec, grid: RadialGrid) -> SymOperator:
    """Dense second-order discretization of the reduced radial operator."""
    _warn_if_box_small(pot, grid)
    diag, off = _fd_diagonals(pot, grid)
    m = np.diag(diag)
    idx = np.arange(grid.n - 1)
    m[idx, idx + 1] = off
    m[idx + 1, idx] = off
    return SymOperator(m)


def _lowest_eigenvalue(pot: PotentialSpec, grid: RadialGrid) -> float:
    diag, off = _fd_diagonals(pot, grid)
    lam = scipy.linalg.eigvalsh_tridiagonal(diag, off, select="i",
                                            select_range=(0, 0))
    return float(lam[0])


def _negative_count(pot: PotentialSpec, grid: RadialGrid) -> int:
    diag, off = _fd_diagonals(pot, grid)
    lam = scipy.linalg.eigvalsh_tridiagonal(diag, off)
    eta = 1e-10 * (1.0 + float(np.linalg.norm(lam)))
    return int(np.sum(lam < -eta))


# ---------------------------------------------------------------------------
# Green kernels


def _green_swave(eps: float, r: np.ndarray) -> np.ndarray:
    """Closed-form s-wave kernel of the semi-infinite domain, Dirichlet at 0.

    G(r, r') = exp(-k r_>) sinh(k r_<) / k with k = sqrt(eps), written in the
    overflow-free form (exp(-k|r-r'|) - exp(-k(r+r'))) / (2k).
    """
    k = np.sqrt(eps)
    d = np.abs(r[:, None] - r[None, :])
    s = r[:, None] + r[None, :]
    return (np.exp(-k * d) - np.exp(-k * s)) / (2.0 * k)


def _green_swave_zero(r: np.ndarray) -> np.ndarray:
    """Zero-energy limit of the s-wave kernel: min(r, r')."""
    return np.minimum(r[:, None], r[None, :])


def green_kernel(eps: float, grid: RadialGrid) -> SymOperator:
    """Weight-symmetrized matrix of the reduced free Green function.

    For ell = 0 the semi-infinite closed form is evaluated on the nodes and
    multiplied by sqrt(w_i w_j), so the matrix represents (kinetic + eps)^-1
    in the weight-normalized basis.  For ell > 0 on the uniform scheme the
    discretized kinetic-plus-centrifugal operator plus eps is inverted
    directly (a banded solve).
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if grid.ell == 0:
        r = grid.nodes
        w = grid.weights
        g = _green_swave(eps, r)
        root_w = np.sqrt(w)
        return SymOperator(root_w[:, None] * g * root_w[None, :])
    if grid.scheme != "uniform_fd2":
        raise ValueError(
            "ell > 0 kernels are computed by inverting the discretized operator, "
            "which needs the uniform_fd2 scheme")
    diag, off = _fd_diagonals(None, grid)
    ab = np.zeros((2, grid.n))
    ab[0, 1:] = off
    ab[1, :] = diag + eps
    inv = scipy.linalg.solveh_banded(ab, np.eye(grid.n))
    return SymOperator(0.5 * (inv + inv.T))


# ---------------------------------------------------------------------------
# the radial Birman-Schwinger kernel


def _resolvent_halfspace_kernel(pot, grid, eps):
    """sqrt(v-) (H_w + eps)^-1 sqrt(v-) via the closed-form s-wave kernel."""
    r = grid.nodes
    if np.any(pot.v_plus(r) > 0):
        raise ValueError(
            "the gauss_legendre route absorbs no repulsive part; "
            "use the uniform_fd2 scheme for potentials with v_+ > 0")
    root_vw = np.sqrt(pot.v_minus(r) * grid.weights)
    g = _green_swave(eps, r) if eps > 0 else _green_swave_zero(r)
    return root_vw[:, None] * g * root_vw[None, :]


def _resolvent_box_kernel(pot, grid, eps):
    """sqrt(v-) (H_w + eps)^-1 sqrt(v-) via banded solves on the box."""
    r = grid.nodes
    v_plus = pot.v_plus(r)
    diag, off = _fd_diagonals(None, grid)
    ab = np.zeros((2, grid.n))
    ab[0, 1:] = off
    ab[1, :] = diag + v_plus + eps
    root_v = np.sqrt(pot.v_minus(r))
    supp = np.nonzero(root_v > 0)[0]
    rhs = np.zeros((grid.n, supp.size))
    rhs[supp, np.arange(supp.size)] = root_v[supp]
    x = scipy.linalg.solveh_banded(ab, rhs)
    out = np.zeros((grid.n, grid.n))
    out[:, supp] = root_v[:, None] * x
    return 0.5 * (out + out.T)


def bs_kernel_radial(pot: PotentialSpec, grid: RadialGrid, eps: float, *,
                     form: str = "calculus", verify: bool = False) -> SymOperator:
    """Birman-Schwinger kernel of the radial problem at spectral shift eps.

    The repulsive part of the potential is absorbed into the reference
    operator ``H_w = H_0 + v_+``, so the kernel is built from the attractive
    part only:

    * ``form="calculus"``: ``(H_w+eps)^(-1/2) v_- (H_w+eps)^(-1/2)`` by
      matrix functional calculus;
    * ``form="similarity"``: ``sqrt(v_-) (H_w+eps)^(-1) sqrt(v_-)``, a
      similarity with the same nonzero spectrum.

    ``verify=True`` checks the two spectra against each other to 1e-8.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if form not in ("calculus", "similarity"):
        raise ValueError(f"unknown form {form!r}")
    r = grid.nodes

    if grid.scheme == "gauss_legendre":
        if grid.ell != 0:
            raise ValueError("gauss_legendre kernels are s-wave only")
        sim = _resolvent_halfspace_kernel(pot, grid, eps)
        if form == "similarity" and not verify:
            return SymOperator(sim)
        g = green_kernel(eps, grid)
        root_g = op_function(g, lambda x: np.sqrt(max(x, 0.0)))
        calc = root_g.entries @ np.diag(pot.v_minus(r)) @ root_g.entries
        calc = 0.5 * (calc + calc.T)
    else:
        _warn_if_box_small(pot, grid)
        sim = _resolvent_box_kernel(pot, grid, eps)
        if form == "similarity" and not verify:
            return SymOperator(sim)
        diag, off = _fd_diagonals(None, grid)
        hw = np.diag(diag + pot.v_plus(r))
        idx = np.arange(grid.n - 1)
        hw[idx, idx + 1] = off
        hw[idx + 1, idx] = off
        lam, vec = np.linalg.eigh(hw)
        if lam[0] + eps <= 0:
            raise ValueError(
                f"H_0 + v_+ + eps is not positive definite "
                f"(min eigenvalue {lam[0]:.3e}, eps {eps:g})")
        s = (vec * (lam + eps) ** -0.5) @ vec.T
        calc = s @ np.diag(pot.v_minus(r)) @ s
        calc = 0.5 * (calc + calc.T)

    if verify:
        rank = int(np.sum(pot.v_minus(r) > 0))
        top_calc = np.sort(np.linalg.eigvalsh(calc))[-max(rank, 1):]
        top_sim = np.sort(np.linalg.eigvalsh(sim))[-max(rank, 1):]
        scale = 1.0 + float(np.max(np.abs(top_calc)))
        gap = float(np.max(np.abs(top_calc - top_sim)))
        if gap > 1e-8 * scale:
            raise RuntimeError(
                f"calculus and similarity spectra disagree by {gap:.3e}")
    return SymOperator(calc if form == "calculus" else sim)


def bs_top_eigenvalue(pot: PotentialSpec, grid: RadialGrid, eps: float) -> float:
    """Largest Birman-Schwinger eigenvalue, via the support-restricted block.

    Equal to the top eigenvalue of ``bs_kernel_radial`` (the nonzero spectra
    of the two kernel forms coincide); restricting to the support of v_-
    keeps scans cheap.
    """
    r = grid.nodes
    supp = np.nonzero(pot.v_minus(r) > 0)[0]
    if supp.size == 0:
        return 0.0
    if grid.scheme == "gauss_legendre":
        block = _resolvent_halfspace_kernel(pot, grid, eps)[np.ix_(supp, supp)]
    else:
        block = _resolvent_box_kernel(pot, grid, eps)[np.ix_(supp, supp)]
    return float(np.linalg.eigvalsh(block)[-1])


def kernel_critical_strength(pot: PotentialSpec, grid: RadialGrid) -> float:
    """Coupling at which the zero-shift kernel reaches eigenvalue one.

    The kernel is linear in the attractive coupling, so the strength that
    makes the discretized operator exactly critical is
    ``strength / mu_0(strength)``.  Uses the zero-energy closed form on the
    gauss_legendre scheme and the box inverse on uniform_fd2.
    """
    r = grid.nodes
    if not np.any(pot.v_minus(r) > 0):
        raise ValueError("potential has no attractive part on the grid")
    supp = np.nonzero(pot.v_minus(r) > 0)[0]
    if grid.scheme == "gauss_legendre":
        block = _resolvent_halfspace_kernel(pot, grid, 0.0)[np.ix_(supp, supp)]
    else:
        v_plus = pot.v_plus(r)
        diag, off = _fd_diagonals(None, grid)
        ab = np.zeros((2, grid.n))
        ab[0, 1:] = off
        ab[1, :] = diag + v_plus
        root_v = np.sqrt(pot.v_minus(r))
        rhs = np.zeros((grid.n, supp.size))
        rhs[supp, np.arange(supp.size)] = root_v[supp]
        x = scipy.linalg.solveh_banded(ab, rhs)
        block = root_v[supp, None] * x[supp, :]
        block = 0.5 * (block + block.T)
    mu0 = float(np.linalg.eigvalsh(block)[-1])
    if mu0 <= 0:
        raise ValueError("zero-shift kernel has no positive eigenvalue")
    return pot.strength / mu0


# ---------------------------------------------------------------------------
# Rollnik norm and the Schwinger-type bound


def _angular_reduced_kernel(r, rp, t):
    """Angular average of |x - y|^(-(2-t)) for radial arguments, times r r'.

    Returns r r' <k>(r, r'), i.e. the quantity entering the reduced 2-d
    integral; t = 8*gamma, with the logarithmic closed form at t = 0.
    """
    s = r + rp
    d = np.abs(r - rp)
    if t == 0.0:
        with np.errstate(divide="ignore"):
            return 0.5 * np.log(s / d)
    return (s**t - d**t) / (2.0 * t)


def _graded_panels(a, b, singular_at_a, levels=9):
    """Panel edges on [a, b], geometrically refined toward the singular end."""
    if b <= a:
        return np.array([a, b])
    fractions = 0.5 ** np.arange(levels, 0, -1)
    if singular_at_a:
        edges = a + (b - a) * np.concatenate(([0.0], fractions, [1.0]))
    else:
        edges = a + (b - a) * np.concatenate(([0.0], 1.0 - fractions[::-1], [1.0]))
    return np.unique(edges)


def _gl_on_panels(edges, m=10):
    x, w = roots_legendre(m)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _segment_edges(r_cut: float, breaks, per_unit: float) -> np.ndarray:
    """Outer panel edges on [0, r_cut]: uniform spacing, split at shape breaks."""
    edges = [0.0] + [b for b in breaks if 0.0 < b < r_cut] + [r_cut]
    edges = np.unique(edges)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(int(np.ceil((b - a) * per_unit)), 2)
        out.append(np.linspace(a, b, k + 1))
    return np.unique(np.concatenate(out))


def _rollnik_integral(pot: PotentialSpec, gamma: float, r_cut: float) -> float:
    """(4 pi)^2 double radial integral of v_- v_- r r' <kernel> over [0, r_cut]^2."""
    t = 8.0 * gamma
    breaks = pot.breakpoints()
    per_unit = 24.0 / max(pot.support_radius(), 1e-12)
    r_out, w_out = _gl_on_panels(_segment_edges(r_cut, breaks, per_unit), m=12)
    f_out = pot.v_minus(r_out) * r_out
    total = 0.0
    inner_break = np.array([b for b in breaks if 0.0 < b < r_cut])
    for r0, wf in zip(r_out, w_out * f_out):
        if wf == 0.0:
            continue
        # inner integral split at the singular diagonal point and shape breaks
        cuts = np.unique(np.concatenate([[0.0, r0, r_cut], inner_break]))
        rp_parts, wp_parts = [], []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b == r0:
                panel = _graded_panels(a, b, singular_at_a=False)
            elif a == r0:
                panel = _graded_panels(a, b, singular_at_a=True)
            else:
                panel = np.linspace(a, b, 7)
            nodes, weights = _gl_on_panels(panel)
            rp_parts.append(nodes)
            wp_parts.append(weights)
        rp = np.concatenate(rp_parts)
        wp = np.concatenate(wp_parts)
        inner = np.sum(wp * pot.v_minus(rp) * rp
                       * _angular_reduced_kernel(r0, rp, t))
        total += wf * inner
    return (4.0 * np.pi) ** 2 * total


def rollnik_norm(pot: PotentialSpec, gamma: float = 0.0) -> float:
    """Generalized Rollnik norm of the attractive part.

    Computes ``[iint v_-(x) v_-(y) / |x-y|^(2 - 8 gamma) d3x d3y]^(1/2)`` by
    reducing the angular integrals in closed form and integrating the
    remaining 2-d radial integrand with panels split at the (integrable)
    diagonal singularity.
    """
    if not 0.0 <= gamma < 0.125:
        raise ValueError(f"gamma must lie in [0, 1/8), got {gamma}")
    r_cut = pot.support_radius()
    value = _rollnik_integral(pot, gamma, r_cut)
    if value == 0.0:
        return 0.0
    extended = _rollnik_integral(pot, gamma, 2.0 * r_cut)
    if abs(extended - value) > TAIL_LIMIT * abs(extended):
        raise RuntimeError(
            f"radial quadrature tail {abs(extended - value):.3e} exceeds "
            f"{TAIL_LIMIT:g} of the accumulated value; integral looks divergent")
    return float(np.sqrt(extended))


def schwinger_bound_check(pot: PotentialSpec, *, n: int = 1500,
                          r_max: float | None = None,
                          ell_max: int = 25) -> tuple[int, float]:
    """Total bound-state count against the Rollnik-norm counting bound.

    Sums ``(2 ell + 1) x (negative eigenvalues at wave ell)`` over partial
    waves until a wave carries none, and checks the total against
    ``(4 pi)^-2 c_0^2`` with ``c_0`` the Rollnik norm of ``v_-``.
    """
    if r_max is None:
        r_max = max(25.0 * pot.range, 12.0)
    total = 0
    for ell in range(ell_max + 1):
        grid = RadialGrid(ell=ell, r_max=r_max, n=n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            count = _negative_count(pot, grid)
        if count == 0:
            break
        total += (2 * ell + 1) * count
    else:
        raise RuntimeError(
            f"bound states persist at ell = {ell_max}; raise ell_max or "
            f"check the potential")
    c0 = rollnik_norm(pot, 0.0)
    bound = c0**2 / (4.0 * np.pi) ** 2
    if total > bound:
        raise RuntimeError(
            f"count {total} exceeds the Rollnik bound {bound:.6g}; "
            f"quadrature or grid failure")
    return total, bound


# ---------------------------------------------------------------------------
# resolvent-power kernel


def resolvent_power_kernel(gamma: float, eps: float, r_dist: float, *,
                           method: str = "log") -> float:
    """Diagonal-distance kernel of ``(-Laplacian + eps)^(-(1+2 gamma))`` in 3-d.

    Evaluates

        G(eps; R) = (4 pi)^(-3/2) [p Gamma(p)]^(-1)
                    * Int_0^inf t^(-3/(2p)) exp(-eps t^(1/p) - R^2 t^(-1/p)/4) dt

    with ``p = 1 + 2 gamma in [1, 3/2)`` by adaptive quadrature after the
    substitution ``u = t^(1/p)`` (``method="log"`` additionally maps
    ``u = e^x``; ``method="direct"`` integrates in u).  The closed-form
    upper bound ``2^(-2p) Gamma(3/2-p) / (pi^(3/2) Gamma(p)) R^(2p-3)``
    is asserted before returning.
    """
    p = 1.0 + 2.0 * gamma
    if not 1.0 <= p < 1.5:
        raise ValueError(f"power p = 1 + 2*gamma = {p:g} outside [1, 3/2)")
    if not (eps > 0 and r_dist > 0):
        raise ValueError("eps and R must be positive")

    def integrand_u(u):
        return p * u ** (p - 2.5) * np.exp(-eps * u - r_dist**2 / (4.0 * u))

    if method == "log":
        # u = e^x turns the endpoint singularity into double-exponential decay
        def integrand_x(x):
            u = np.exp(x)
            return p * u ** (p - 1.5) * np.exp(-eps * u - r_dist**2 / (4.0 * u))

        x_peak = np.log(r_dist / (2.0 * np.sqrt(eps)))
        integral, _ = scipy.integrate.quad(
            integrand_x, x_peak - 60.0, x_peak + 60.0, epsabs=0.0,
            epsrel=1e-12, limit=400)
    elif method == "direct":
        integral, _ = scipy.integrate.quad(
            integrand_u, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    else:
        raise ValueError(f"unknown method {method!r}")

    value = (4.0 * np.pi) ** -1.5 / (p * gamma_fn(p)) * integral
    bound = (2.0 ** (-2.0 * p) * gamma_fn(1.5 - p)
             / (np.pi**1.5 * gamma_fn(p)) * r_dist ** (2.0 * p - 3.0))
    if value > bound * (1.0 + 1e-9):
        raise RuntimeError(
            f"kernel value {value:.6e} violates the closed-form bound {bound:.6e}")
    return float(value)


# ---------------------------------------------------------------------------
# critical coupling and the near-threshold scan


def find_critical_coupling_radial(pot_shape: PotentialSpec, grid: RadialGrid,
                                  tol: float, *, refine: int = 2,
                                  mode: str = "box",
                                  extrapolate: bool = True) -> CriticalCouplingResult:
    """Coupling at which the first negative eigenvalue appears on the box.

    Bisects the coupling of the attractive shape (the strength field of
    ``pot_shape`` is treated as the unit of the family) against the lowest
    eigenvalue of the discretized operator, on the given grid and on a
    refinement of it; the two couplings must agree within ``tol / 2``.

    ``mode`` picks the refinement family.  "box" (default) scales box and
    point count together, keeping the mesh spacing fixed: the dominant error
    for a threshold state is the 1/r_max truncation of its flat tail, and
    ``extrapolate=True`` removes that leading term from the pair.  "mesh"
    refines the mesh inside a fixed box and extrapolates the quadratic mesh
    error instead.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if grid.scheme != "uniform_fd2":
        raise ValueError("critical couplings are located on the uniform_fd2 scheme")
    if mode not in ("box", "mesh"):
        raise ValueError(f"unknown refinement mode {mode!r}")
    shape = pot_shape.with_strength(1.0)

    iterations = 0

    def locate(g: RadialGrid) -> tuple[float, float, float]:
        nonlocal iterations
        lo, hi = 0.0, 1.0
        while _lowest_eigenvalue(shape.with_strength(hi), g) >= 0.0:
            lo = hi
            hi *= 2.0
            iterations += 1
            if hi > 1e6:
                raise RuntimeError("no binding up to coupling 1e6")
        # bisect far below tol so the refinement comparison is not noise-limited
        width_target = max(min(tol, 1e-4) * 1e-6, 1e-13 * hi)
        while hi - lo > width_target:
            mid = 0.5 * (lo + hi)
            iterations += 1
            if _lowest_eigenvalue(shape.with_strength(mid), g) >= 0.0:
                lo = mid
            else:
                hi = mid
        lam = 0.5 * (lo + hi)
        return lam, lo, hi

    if mode == "box":
        fine = grid.refined(refine, box_factor=refine)
        weight = float(refine)          # error model c / r_max
    else:
        fine = grid.refined(refine)
        weight = float(refine) ** 2     # error model c h^2

    lam_coarse, _, _ = locate(grid)
    lam_fine, lo_f, hi_f = locate(fine)
    gap = abs(lam_fine - lam_coarse)
    if gap > tol / 2.0:
        raise RuntimeError(
            f"grid refinements disagree: coupling {lam_coarse:.10g} on "
            f"(r_max={grid.r_max:g}, n={grid.n}) vs {lam_fine:.10g} on "
            f"(r_max={fine.r_max:g}, n={fine.n}); gap {gap:.3e} > tol/2")
    if extrapolate:
        lam_star = (weight * lam_fine - lam_coarse) / (weight - 1.0)
    else:
        lam_star = lam_fine
    half = max(hi_f - lo_f, gap)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        residual = _lowest_eigenvalue(shape.with_strength(lam_star), fine)
    return CriticalCouplingResult(
        lambda_star=lam_star,
        bracket=(lam_star - half, lam_star + half),
        iterations=iterations,
        residual_min_eig=residual,
    )


def mu_scan(pot: PotentialSpec, grid: RadialGrid, eps_list, *,
            fit_window: tuple[float, float] = (1e-6, 1e-4)) -> MuScalingReport:
    """Near-threshold scan of mu(eps) for a potential tuned to criticality.

    Computes the largest Birman-Schwinger eigenvalue over ``eps_list``,
    checks monotonicity, and fits ``log(1 - mu)`` against ``log eps`` inside
    ``fit_window``.  A zero-energy resonance (s-wave criticality on the
    semi-infinite kernel) gives exponent 1/2; a square-integrable zero-energy
    state (ell >= 1) gives exponent 1.
    """
    eps_arr = np.sort(np.asarray(list(eps_list), dtype=float))
    if eps_arr.size < 2 or np.any(eps_arr <= 0):
        raise ValueError("need at least two positive eps values")
    lam_star = kernel_critical_strength(pot, grid)
    detune = abs(pot.strength - lam_star) / lam_star
    if detune > 1e-8:
        raise ValueError(
            f"potential is off criticality by {detune:.3e} relative "
            f"(strength {pot.strength:.12g}, critical {lam_star:.12g})")
    mus = np.array([bs_top_eigenvalue(pot, grid, float(e)) for e in eps_arr])
    if np.any(mus >= 1.0):
        raise RuntimeError("mu(eps) >= 1 in the scan: supercritical tuning")
    if np.any(np.diff(mus) > 1e-12):
        raise RuntimeError("mu(eps) is not nonincreasing along the scan")
    in_window = (eps_arr >= fit_window[0] * (1 - 1e-12)) \
        & (eps_arr <= fit_window[1] * (1 + 1e-12))
    if np.sum(in_window) < 2:
        raise ValueError("fewer than two scan points inside the fit window")
    x = np.log(eps_arr[in_window])
    y = np.log(1.0 - mus[in_window])
    slope, intercept = np.polyfit(x, y, 1)
    return MuScalingReport(
        epsilons=eps_arr,
        mus=mus,
        fitted_exponent=float(slope),
        fit_window=fit_window,
        a_mu_estimate=float(np.exp(intercept)),
    )
