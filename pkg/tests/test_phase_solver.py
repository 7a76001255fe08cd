import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from unistochastic import _kernels
from unistochastic.errors import ConfigError, DimensionError
from unistochastic.linalg_core import (extract_probability, haar_unitary,
                                       transition_probability_matrix, unitarity_residual)
from unistochastic.modality import birkhoff_sample, validate_bistochastic
from unistochastic.phase_solver import (FEASIBLE, INCONCLUSIVE, INFEASIBLE, PhaseMatrix,
                                        SolveReport, SolverConfig, apply_phases,
                                        canonical_phases, certify_n3, gauge_fix,
                                        objective_and_gradient, phases_of, solve_phases,
                                        solve_phases_closed_form_n2, sqrt_matrix, wrap_phase)

from conftest import CYCLIC_HALF, HADAMARD


def haar_pi(n, rng):
    return validate_bistochastic(transition_probability_matrix(haar_unitary(n, rng)).p)


def direct_objective(sigma, params):
    """||S^dagger S - I||_F^2 built from scratch, independent of the kernels."""
    n = sigma.shape[0]
    phi = np.zeros((n, n))
    phi[1:, 1:] = np.reshape(params, (n - 1, n - 1))
    s = sigma * np.exp(1j * phi)
    return np.linalg.norm(s.conj().T @ s - np.eye(n)) ** 2


# -- building blocks -----------------------------------------------------------------

def test_sqrt_matrix_examples():
    assert np.array_equal(sqrt_matrix(validate_bistochastic(np.eye(3))), np.eye(3))
    s = sqrt_matrix(validate_bistochastic([[0.25, 0.75], [0.75, 0.25]]))
    assert np.allclose(s, [[0.5, np.sqrt(0.75)], [np.sqrt(0.75), 0.5]], atol=1e-16)
    assert np.allclose(sqrt_matrix(validate_bistochastic(np.full((3, 3), 1 / 3))),
                       1 / np.sqrt(3), atol=1e-16)


def test_sqrt_matrix_unit_norms(rng):
    s = sqrt_matrix(validate_bistochastic(birkhoff_sample(5, rng)))
    assert np.allclose(np.linalg.norm(s, axis=0), 1, atol=1e-12)
    assert np.allclose(np.linalg.norm(s, axis=1), 1, atol=1e-12)


def test_apply_phases_examples():
    s = np.full((2, 2), 1 / np.sqrt(2))
    assert np.array_equal(apply_phases(s, np.zeros((2, 2))), s.astype(complex))
    assert np.allclose(apply_phases(s, [[0, 0], [0, np.pi]]), HADAMARD, atol=1e-15)
    s3 = np.full((3, 3), 1 / np.sqrt(3))
    phi = np.zeros((3, 3))
    phi[1, 2] = np.pi / 2
    out = apply_phases(s3, phi)
    assert out[1, 2] == pytest.approx(1j / np.sqrt(3), abs=1e-16)
    with pytest.raises(DimensionError):
        apply_phases(s3, np.zeros((2, 2)))


def test_apply_phases_preserves_moduli(rng):
    s = sqrt_matrix(validate_bistochastic(birkhoff_sample(4, rng)))
    out = apply_phases(s, rng.uniform(-np.pi, np.pi, (4, 4)))
    assert np.allclose(np.abs(out), s, rtol=1e-15, atol=0)


def test_wrap_phase_range_and_fixed_points():
    x = np.array([-np.pi, np.pi, 3 * np.pi, -3 * np.pi, 0.1, 7.0, -1e-20])
    w = wrap_phase(x)
    assert np.all((w > -np.pi) & (w <= np.pi))
    assert w[0] == np.pi and w[1] == np.pi and w[4] == 0.1
    assert np.allclose(np.exp(1j * w), np.exp(1j * x), atol=1e-14)


def test_gauge_fix_examples(rng):
    canon = gauge_fix(np.array([[0, 0, 0], [0, 1.0, -2.0], [0, 3.0, 0.5]]))
    assert np.array_equal(gauge_fix(canon.phi).phi, canon.phi)
    assert np.array_equal(gauge_fix(np.full((3, 3), 2.7)).phi, np.zeros((3, 3)))
    u = haar_unitary(4, rng)
    fixed = apply_phases(np.abs(u), gauge_fix(np.angle(u)))
    assert np.allclose(transition_probability_matrix(fixed).p,
                       transition_probability_matrix(u).p, atol=1e-14)
    # gauge fixing a unitary's phases keeps it unitary
    assert unitarity_residual(fixed) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_gauge_fix_idempotent(n, seed):
    phi = np.random.default_rng(seed).uniform(-10, 10, (n, n))
    once = gauge_fix(phi)
    assert gauge_fix(once.phi) == once


def test_phase_matrix_invariants():
    with pytest.raises(ValueError):
        PhaseMatrix(np.ones((2, 2)))
    with pytest.raises(ValueError):
        PhaseMatrix(np.array([[0, 0], [0, -np.pi]]))


def test_canonical_phases_identity_support():
    phi = np.diag([0.3, -1.2, 2.0])
    assert np.array_equal(canonical_phases(phi, np.eye(3, dtype=bool)).phi, np.zeros((3, 3)))


def test_canonical_phases_full_support_is_gauge_fix(rng):
    phi = rng.uniform(-3, 3, (4, 4))
    assert canonical_phases(phi, np.ones((4, 4), bool)) == gauge_fix(phi)


# -- closed form and certificate -------------------------------------------------------

def test_closed_form_n2_examples():
    r = solve_phases_closed_form_n2(np.eye(2))
    assert r.status == FEASIBLE and r.residual == 0.0
    assert np.array_equal(r.sigma_tilde(np.eye(2)), np.eye(2))
    pi = np.array([[0.25, 0.75], [0.75, 0.25]])
    r = solve_phases_closed_form_n2(pi)
    assert np.allclose(r.sigma_tilde(pi), [[0.5, np.sqrt(0.75)], [np.sqrt(0.75), -0.5]],
                       atol=1e-15)
    assert r.residual < 1e-14
    half = np.full((2, 2), 0.5)
    assert np.allclose(solve_phases_closed_form_n2(half).sigma_tilde(half), HADAMARD, atol=1e-15)
    with pytest.raises(DimensionError):
        solve_phases_closed_form_n2(np.eye(3))


def test_certify_n3_examples():
    assert certify_n3(np.full((3, 3), 1 / 3)).status == FEASIBLE
    assert certify_n3(np.eye(3)).status == FEASIBLE
    cert = certify_n3(CYCLIC_HALF)
    assert cert.status == INFEASIBLE
    assert cert.pair == (0, 1) and cert.axis == "row"
    assert cert.gap == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        certify_n3(np.eye(2))


def brute_force_residual(sigma):
    """Grid over the four interior phases, then Nelder-Mead from the best cells."""
    g = np.linspace(-np.pi, np.pi, 24, endpoint=False)
    grid = np.array(list(itertools.product(g, repeat=4)))
    phi = np.zeros((grid.shape[0], 3, 3))
    phi[:, 1:, 1:] = grid.reshape(-1, 2, 2)
    s = sigma * np.exp(1j * phi)
    gram = np.einsum("kia,kib->kab", s.conj(), s) - np.eye(3)
    f = np.sum(np.abs(gram) ** 2, axis=(1, 2))
    best = np.inf
    for idx in np.argsort(f)[:6]:
        res = minimize(lambda x: direct_objective(sigma, x), grid[idx], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000})
        best = min(best, np.sqrt(res.fun))
    return best


def test_certify_n3_against_brute_force(rng):
    checked = 0
    while checked < 40:
        p = validate_bistochastic(birkhoff_sample(3, rng))
        cert = certify_n3(p)
        if abs(cert.gap) < 1e-3:
            continue
        floor = brute_force_residual(sqrt_matrix(p))
        if cert.status == FEASIBLE:
            assert floor < 1e-6
        else:
            assert floor > 1e-4
        checked += 1


def test_infeasible_floor_is_phase_independent(rng):
    # each pair of rows overlaps in one column with modulus 1/2 whatever the phases
    sigma = sqrt_matrix(validate_bistochastic(CYCLIC_HALF))
    for _ in range(20):
        assert np.sqrt(direct_objective(sigma, rng.uniform(-np.pi, np.pi, 4))) == \
            pytest.approx(np.sqrt(1.5), abs=1e-14)


# -- solver ----------------------------------------------------------------------------

def test_solve_haar_4x4(rng, backend):
    r = solve_phases(haar_pi(4, rng))
    assert r.status == FEASIBLE and r.residual < 1e-10


def test_solve_cyclic_infeasible(backend):
    r = solve_phases(CYCLIC_HALF)
    assert r.status == INFEASIBLE
    assert r.phases is None
    assert r.certificate.pair == (0, 1)
    assert r.residual == pytest.approx(np.sqrt(1.5), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_solve_identity(n):
    r = solve_phases(np.eye(n))
    assert r.status == FEASIBLE and r.residual == 0.0
    assert np.array_equal(r.phases.phi, np.zeros((n, n)))


@pytest.mark.parametrize("n, count", [(2, 10), (3, 10), (4, 10), (6, 5), (8, 2)])
def test_round_trip(n, count, rng):
    for _ in range(count):
        pi = haar_pi(n, rng)
        r = solve_phases(pi)
        assert r.status == FEASIBLE
        again = transition_probability_matrix(r.sigma_tilde(pi)).p
        assert np.max(np.abs(again - pi.p)) < 1e-8


def test_round_trip_python_backend(rng, backend):
    for n in (3, 5):
        pi = haar_pi(n, rng)
        r = solve_phases(pi)
        assert r.status == FEASIBLE


def test_gauge_invariance_of_probabilities(rng):
    pi = haar_pi(4, rng)
    r = solve_phases(pi)
    s = r.sigma_tilde(pi)
    raw = s * np.exp(1j * rng.uniform(-3, 3, 4))[:, None] * np.exp(1j * rng.uniform(-3, 3, 4))
    refixed = apply_phases(np.abs(raw), gauge_fix(np.angle(raw)))
    for i in range(4):
        for j in range(4):
            assert extract_probability(raw, i, j) == pytest.approx(
                extract_probability(refixed, i, j), abs=1e-12)


def test_n2_solver_agrees_with_closed_form(rng):
    for p in rng.uniform(0.01, 0.99, 100):
        pi = np.array([[p, 1 - p], [1 - p, p]])
        a = solve_phases(pi, SolverConfig(starts=1))
        b = solve_phases_closed_form_n2(pi)
        assert a.status == FEASIBLE
        diff = np.angle(np.exp(1j * (a.phases.phi - b.phases.phi)))
        assert np.max(np.abs(diff)) < 1e-6


def test_gradient_matches_finite_differences(rng, backend):
    h = 1e-6
    for n in (2, 3, 4):
        for _ in range(30):
            sigma = sqrt_matrix(validate_bistochastic(birkhoff_sample(n, rng)))
            x = rng.uniform(-np.pi, np.pi, (n - 1) ** 2)
            f, g = objective_and_gradient(sigma, x)
            assert f == pytest.approx(direct_objective(sigma, x), rel=1e-12, abs=1e-15)
            fd = np.array([(direct_objective(sigma, x + h * e) - direct_objective(sigma, x - h * e))
                           / (2 * h) for e in np.eye(x.size)])
            assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(g), 1e-8)


def test_determinism_repeat_and_parallel(rng):
    pi = haar_pi(5, rng)
    cfg = SolverConfig(seed=99, starts=16)
    a = solve_phases(pi, cfg)
    b = solve_phases(pi, cfg)
    c = solve_phases(pi, cfg, workers=4)
    assert a == b
    assert a.to_json() == c.to_json()


def test_parallel_same_on_hard_problem():
    # infeasible: every start runs all hops, exercising the full schedule
    p = 0.5 * np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]])
    cfg = SolverConfig(starts=12, hops=2)
    a = solve_phases(p, cfg)
    b = solve_phases(p, cfg, workers=3)
    assert a.to_json() == b.to_json()
    assert a.status == INCONCLUSIVE


def test_seed_changes_starts(rng):
    pi = haar_pi(6, rng)
    a = solve_phases(pi, SolverConfig(seed=1))
    b = solve_phases(pi, SolverConfig(seed=2))
    assert a.iterations_total != b.iterations_total


@pytest.mark.parametrize("kwargs", [
    {"starts": 0}, {"tol": 0.0}, {"tol": -1.0}, {"max_iter": 0}, {"seed": -1},
    {"seed": 2 ** 64}, {"hops": -1}, {"tol": float("nan")},
])
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_config_json():
    cfg = SolverConfig.from_json({"tol": 1e-9, "max_iter": 100, "starts": 4, "seed": 7})
    assert cfg == SolverConfig(1e-9, 100, 4, 7)
    assert SolverConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ConfigError):
        SolverConfig.from_json({"tolerance": 1.0})


def test_report_json_round_trip(rng):
    for r in (solve_phases(haar_pi(3, rng)), solve_phases(CYCLIC_HALF)):
        assert SolveReport.from_json(r.to_json()).to_json() == r.to_json()


def test_phases_of_unitary(rng):
    u = haar_unitary(3, rng)
    ph = phases_of(u)
    assert unitarity_residual(apply_phases(np.abs(u), ph)) < 1e-12
