"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import contextlib
import json
import time
import warnings

import numpy as np
import pytest

from bscount.bsengine import (
    BsProblem,
    count_bs,
    count_direct,
    hs_count_bound_check,
    random_problem,
    rank_one_domination,
)
from bscount.cli import main as cli_main
from bscount.efimov import (
    SeparableModel,
    efimov_spectrum,
    lambda_unitary,
    s0_oracle,
    trimer_spectrum,
)
from bscount.iterbs import iterate, random_spectral_step
from bscount.linop import DEFAULT_SEED, SymOperator, count_evs
from bscount.radial import (
    PotentialSpec,
    RadialGrid,
    bs_kernel_radial,
    find_critical_coupling_radial,
    kernel_critical_strength,
    mu_scan,
    reduced_hamiltonian,
    resolvent_power_kernel,
    rollnik_norm,
    schwinger_bound_check,
)


@contextlib.contextmanager
def criterion(number, title, budget_seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number}: FAIL - {title}")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {number}: PASS - {title} ({elapsed:.1f}s)")
    assert elapsed < budget_seconds, (
        f"criterion {number} took {elapsed:.1f}s, budget {budget_seconds}s")


def test_criterion_1_bs_equality():
    with criterion(1, "BS counting equality on 500 instances", 30):
        rng = np.random.default_rng(DEFAULT_SEED)
        failures = 0
        for k in range(500):
            dim = int(rng.integers(2, 21))
            p = random_problem(dim, rng=rng, indefinite_b=(k % 2 == 0))
            failures += count_bs(p) != count_direct(p)
        assert failures == 0


def test_criterion_2_bs_inequality():
    with criterion(2, "BS counting inequality with singular A on 500 instances", 30):
        rng = np.random.default_rng(DEFAULT_SEED + 1)
        violations = 0
        for k in range(500):
            dim = int(rng.integers(2, 21))
            p = random_problem(dim, rng=rng, singular_a=True,
                               indefinite_b=(k % 2 == 0))
            violations += count_bs(p) < count_direct(p)
        assert violations == 0


def test_criterion_3_iterated_invariance():
    with criterion(3, "iterated subtraction count invariance on 200 instances", 60):
        rng = np.random.default_rng(DEFAULT_SEED + 2)
        worst_residual = 0.0
        for _ in range(200):
            dim = int(rng.integers(6, 16))
            q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
            lam = rng.uniform(-0.8, 1.6, size=dim)
            k_total = SymOperator((q * lam) @ q.T)
            base = count_evs(k_total, ">", 1.0)
            steps = [random_spectral_step(k_total, rng)
                     for _ in range(int(rng.integers(1, 4)))]
            stages = iterate(k_total, steps)
            for stage in stages:
                assert count_evs(stage.t, ">", 1.0) == base
                worst_residual = max(worst_residual, stage.consistency_residual)
        assert worst_residual <= 1e-8


def test_criterion_4_counting_bounds():
    with criterion(4, "HS counting bound and rank-one domination, 200 each", 60):
        rng = np.random.default_rng(DEFAULT_SEED + 3)
        for _ in range(200):
            dim = int(rng.integers(3, 12))
            r = int(rng.integers(1, dim))
            q = np.linalg.qr(rng.standard_normal((dim, dim)))[0][:, :r]
            delta = float(rng.uniform(0.5, 3.0))
            holds, bound = hs_count_bound_check(SymOperator(delta * q @ q.T),
                                                delta, q)
            assert holds
            assert abs(bound - r) <= 1e-9 * r  # extremal family: equality
        for _ in range(200):
            dim = int(rng.integers(2, 12))
            g = rng.standard_normal((dim, dim))
            a = SymOperator(g @ g.T)
            f = rng.standard_normal(dim)
            f /= np.linalg.norm(f)
            c = float(rng.uniform(0.05, 1.5))
            eps0 = float(rng.uniform(0.1, 2.0))
            big_l = rank_one_domination(f, a, epsilon0=eps0, c=c)
            top = np.linalg.eigvalsh(
                np.outer(f, f)
                - big_l * np.linalg.inv(a.entries + eps0 * np.eye(dim)))[-1]
            assert top <= c + 1e-9


TWENTY_CASES = [
    ("square_well", 2.0, 0, 0.05), ("square_well", 2.0, 0, 0.5),
    ("square_well", 10.0, 0, 0.05), ("square_well", 10.0, 0, 0.5),
    ("square_well", 10.0, 0, 2.0), ("square_well", 26.0, 0, 0.05),
    ("square_well", 26.0, 0, 0.5), ("square_well", 26.0, 0, 2.0),
    ("gaussian", 5.0, 0, 0.2), ("gaussian", 18.0, 0, 0.2),
    ("gaussian", 18.0, 0, 1.0), ("exponential", 5.0, 0, 0.1),
    ("exponential", 18.0, 0, 0.1), ("exponential", 30.0, 0, 0.5),
    ("yukawa", 8.0, 0, 0.3), ("yukawa", 15.0, 0, 1.0),
    ("square_well", 40.0, 1, 0.25), ("square_well", 40.0, 1, 1.0),
    ("gaussian", 40.0, 2, 0.15), ("gaussian", 60.0, 1, 0.3),
]


def test_criterion_5_square_well_critical_coupling():
    with criterion(5, "square-well critical coupling 0.1% and 20-case counts", 120):
        shape = PotentialSpec(kind="square_well", strength=1.0, range=1.0)
        grid = RadialGrid(ell=0, r_max=100.0, n=2000)
        res = find_critical_coupling_radial(shape, grid, tol=0.05)
        assert abs(res.lambda_star / (np.pi**2 / 4.0) - 1.0) <= 1e-3
        for kind, lam, ell, eps in TWENTY_CASES:
            pot = PotentialSpec(kind=kind, strength=lam, range=1.0)
            case_grid = RadialGrid(ell=ell, r_max=25.0, n=700)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                k = bs_kernel_radial(pot, case_grid, eps)
                h = reduced_hamiltonian(pot, case_grid)
            assert count_evs(k, ">", 1.0) == count_evs(h, "<", -eps), \
                (kind, lam, ell, eps)


def test_criterion_6_mu_scaling_exponents():
    with criterion(6, "mu(eps) exponents: 1/2 at s-wave resonance, 1 at p-wave "
                      "bound state", 300):
        eps_list = np.geomspace(1e-6, 1e-4, 9)

        well = PotentialSpec(kind="square_well", strength=1.0, range=1.0)
        for n in (200, 400):
            grid = RadialGrid(ell=0, r_max=1.0, n=n, scheme="gauss_legendre")
            pot = well.with_strength(kernel_critical_strength(well, grid))
            report = mu_scan(pot, grid, eps_list)
            assert abs(report.fitted_exponent - 0.5) <= 0.05, n

        for n in (2000, 4000):
            grid = RadialGrid(ell=1, r_max=40.0, n=n)
            pot = well.with_strength(kernel_critical_strength(well, grid))
            report = mu_scan(pot, grid, eps_list)
            assert abs(report.fitted_exponent - 1.0) <= 0.05, n


def test_criterion_7_resolvent_power_kernel():
    with criterion(7, "resolvent-power kernel vs free resolvent and bound", 30):
        eps_grid = np.geomspace(0.01, 10.0, 10)
        r_grid = np.geomspace(0.1, 8.0, 10)
        for eps in eps_grid:
            for r_dist in r_grid:
                value = resolvent_power_kernel(0.0, float(eps), float(r_dist))
                exact = np.exp(-np.sqrt(eps) * r_dist) / (4 * np.pi * r_dist)
                assert abs(value / exact - 1.0) <= 1e-6
        for gamma in (0.0, 0.1, 0.2):
            for eps in (0.05, 1.0, 5.0):
                for r_dist in (0.3, 1.0, 4.0):
                    # the call itself asserts the closed-form upper bound
                    resolvent_power_kernel(gamma, eps, r_dist)


def test_criterion_8_schwinger_rollnik_bound():
    with criterion(8, "Schwinger/Rollnik counting bound and MC oracle", 180):
        family = [
            PotentialSpec(kind="square_well", strength=2.0, range=1.0),
            PotentialSpec(kind="square_well", strength=8.0, range=1.0),
            PotentialSpec(kind="square_well", strength=60.0, range=1.0),
            PotentialSpec(kind="gaussian", strength=30.0, range=1.0),
            PotentialSpec(kind="exponential", strength=18.0, range=1.0),
            PotentialSpec(kind="yukawa", strength=8.0, range=1.0),
        ]
        for pot in family:
            count, bound = schwinger_bound_check(pot)
            assert count <= bound, pot.kind

        # Monte-Carlo oracle for the unit-yukawa Rollnik integral, seeded
        rng = np.random.default_rng(DEFAULT_SEED)
        n = 1_000_000
        rad = rng.gamma(2.0, 1.0, n)
        u = rng.standard_normal((n, 3))
        u /= np.linalg.norm(u, axis=1)[:, None]
        smag = rng.exponential(1.0, n)
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        ry = np.linalg.norm(rad[:, None] * u + smag[:, None] * v, axis=1)
        mc = float(np.mean(4 * np.pi * (np.exp(-ry) / ry) * 4 * np.pi
                           * np.exp(smag)))
        quadrature = rollnik_norm(
            PotentialSpec(kind="yukawa", strength=1.0, range=1.0), 0.0) ** 2
        assert abs(quadrature / mc - 1.0) <= 0.01


def test_criterion_9_efimov_accumulation():
    with criterion(9, "trimer accumulation at unitarity vs s0 oracle", 600):
        lam_u = lambda_unitary(1.0)
        model = SeparableModel(beta=1.0, lam=lam_u, p_max=40.0, n_p=512,
                               grid_c=300.0)
        levels = efimov_spectrum(model, -1.0)
        energies = np.array([l.energy for l in levels])
        assert len(energies) >= 4
        assert all(l.cutoff_stable for l in levels)
        ratios = energies[:-1] / energies[1:]
        last3 = ratios[-3:]
        assert np.max(last3) / np.min(last3) - 1.0 <= 0.05
        _, ratio_star = s0_oracle()
        assert abs(ratios[-1] / ratio_star - 1.0) <= 0.10

        detuned = SeparableModel(beta=1.0, lam=0.9 * lam_u, p_max=40.0,
                                 n_p=256, grid_c=300.0)
        finite = trimer_spectrum(detuned, -1.0)
        assert 1 <= len(finite) <= 2  # no geometric ladder off unitarity


def test_criterion_10_verify_determinism(tmp_path):
    with criterion(10, "verify runs are byte-identical at fixed seed", 300):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli_main(["verify", "--out", str(out1)]) == 0
        assert cli_main(["verify", "--out", str(out2)]) == 0
        body1 = (out1 / "verify.csv").read_bytes()
        body2 = (out2 / "verify.csv").read_bytes()
        assert body1 == body2
        summary = json.loads((out1 / "verify.summary.json").read_text())
        assert summary["checks"]["bs_equality"]["cases"] == 500
        assert summary["checks"]["bs_equality"]["failures"] == 0
        assert summary["status"] == 0
