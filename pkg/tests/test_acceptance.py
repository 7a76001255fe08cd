"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import io
import json
import math
import time

import numpy as np
import pytest

from unistochastic import knob_group as kg
from unistochastic.cli import run
from unistochastic.hardy import (TheoryKind, build_fiducial_set, capacity, composite_counts,
                                 infer_power, probabilities_of, random_density_matrix,
                                 tomography_reconstruct)
from unistochastic.linalg_core import (extract_probability, haar_unitary,
                                       transition_probability_matrix)
from unistochastic.modality import (birkhoff_sample, normalization_constraint_rank,
                                    validate_bistochastic)
from unistochastic.phase_solver import (FEASIBLE, INFEASIBLE, apply_phases, certify_n3,
                                        objective_and_gradient, solve_phases, sqrt_matrix)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(k, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {k} {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return _report


def test_criterion_1_trace_formula(report):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    valid = True
    for n in (2, 3, 4, 8):
        for _ in range(1000):
            u = haar_unitary(n, rng)
            p = np.array([[extract_probability(u, i, j) for j in range(n)] for i in range(n)])
            worst = max(worst, float(np.max(np.abs(p - np.abs(u) ** 2))))
            try:
                validate_bistochastic(p, tol=1e-9)
            except Exception:
                valid = False
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-12 and valid and dt < 10,
           f"max|trace - modulus^2|={worst:.2e} valid={valid} time={dt:.1f}s")


def test_criterion_2_round_trip(report):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    failures, worst_res, worst_err = 0, 0.0, 0.0
    for n in (2, 3, 4, 6):
        for _ in range(200):
            pi = transition_probability_matrix(haar_unitary(n, rng))
            r = solve_phases(pi)
            if r.status != FEASIBLE:
                failures += 1
                continue
            worst_res = max(worst_res, r.residual)
            again = transition_probability_matrix(r.sigma_tilde(pi)).p
            worst_err = max(worst_err, float(np.max(np.abs(again - pi.p))))
    dt = time.perf_counter() - t0
    ok = failures == 0 and worst_res < 1e-10 and worst_err <= 1e-8 and dt < 60
    report(2, ok, f"failures={failures}/800 max_residual={worst_res:.2e} "
                  f"max_error={worst_err:.2e} time={dt:.1f}s")


def test_criterion_3_infeasibility(report):
    bad = 0.5 * np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    flagged = certify_n3(bad).status == INFEASIBLE
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    contradictions = 0
    feasible = 0
    for _ in range(10_000):
        p = validate_bistochastic(birkhoff_sample(3, rng))
        r = solve_phases(p)
        if r.status == FEASIBLE:
            feasible += 1
            if certify_n3(p).status != FEASIBLE:
                contradictions += 1
    dt = time.perf_counter() - t0
    report(3, flagged and contradictions == 0 and dt < 300,
           f"cyclic_flagged={flagged} contradictions={contradictions} "
           f"feasible={feasible}/10000 time={dt:.1f}s")


def test_criterion_4_classical_limit(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in (2, 5, 9):
        for _ in range(100):
            pm = kg.commutative_limit_probabilities(rng.uniform(-10, 10, n))
            worst = max(worst, float(np.max(np.abs(pm.p - np.eye(n)))))
    report(4, worst <= 1e-14, f"max|P - I|={worst:.2e}")


def test_criterion_5_projective(report):
    rng = np.random.default_rng(5)
    so3 = kg.SO3
    passed = sum(projective_homomorphism_ok(so3, so3.random_element(rng), so3.random_element(rng))
                 for _ in range(1000))
    c, dist = kg.projective_factor(so3, kg.rotation(kg.X_AXIS, math.pi),
                                   kg.rotation(kg.Y_AXIS, math.pi))
    double_cover = dist < 1e-9 and min(abs(c - 1), abs(c + 1)) < 1e-9
    t = kg.torus(4)
    torus_ok = True
    for _ in range(100):
        ct, dt = kg.projective_factor(t, t.random_element(rng), t.random_element(rng))
        torus_ok &= ct == 1 and dt < 1e-9
    report(5, passed == 1000 and double_cover and torus_ok,
           f"so3_pairs={passed}/1000 double_cover_c={c.real:+.0f} torus_c_exact={torus_ok}")


def projective_homomorphism_ok(group, g1, g2):
    return kg.projective_homomorphism_check(group, g1, g2, tol=1e-9)


def test_criterion_6_parameter_count(report):
    bad = [n for n in range(1, 17) if n * n - normalization_constraint_rank(n) != (n - 1) ** 2]
    report(6, not bad, f"n in [1,16] mismatches={bad}")


def test_criterion_7_hardy_counting(report):
    grid_ok = True
    for kind in TheoryKind:
        for na in range(1, 7):
            for nb in range(1, 7):
                n, k = composite_counts(na, nb, kind)
                grid_ok &= k == capacity(kind, na) * capacity(kind, nb) == capacity(kind, n)
    ns = list(range(2, 9))
    rq = infer_power(ns, [capacity("quantum", n) for n in ns]).r
    rc = infer_power(ns, [capacity("classical", n) for n in ns]).r
    report(7, grid_ok and rq == 2 and rc == 1, f"grid={grid_ok} r_quantum={rq} r_classical={rc}")


def test_criterion_8_tomography(report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for n in (2, 3, 4):
        f = build_fiducial_set(n)
        for _ in range(1000):
            rho = random_density_matrix(n, rng)
            back = tomography_reconstruct(probabilities_of(rho, f), f)
            worst = max(worst, float(np.max(np.abs(back.rho - rho.rho))))
    example = tomography_reconstruct([1, 0, 0.5, 0.5], build_fiducial_set(2))
    ex_err = float(np.max(np.abs(example.rho - np.diag([1, 0]))))
    report(8, worst < 1e-8 and ex_err <= 1e-10,
           f"max_round_trip={worst:.2e} worked_example={ex_err:.2e}")


def test_criterion_9_gradient(report):
    rng = np.random.default_rng(9)
    h = 1e-6
    worst = 0.0
    for n in (2, 3, 4):
        for _ in range(100):
            sigma = sqrt_matrix(validate_bistochastic(birkhoff_sample(n, rng)))
            x = rng.uniform(-math.pi, math.pi, (n - 1) ** 2)

            def f(y):
                phi = np.zeros((n, n))
                phi[1:, 1:] = y.reshape(n - 1, n - 1)
                s = apply_phases(sigma, phi)
                return np.linalg.norm(s.conj().T @ s - np.eye(n)) ** 2

            _, g = objective_and_gradient(sigma, x)
            fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])
            scale = max(np.linalg.norm(g), np.linalg.norm(fd), 1e-8)
            worst = max(worst, float(np.linalg.norm(g - fd) / scale))
    report(9, worst <= 1e-5, f"max_relative_error={worst:.2e}")


def test_criterion_10_determinism(report, tmp_path):
    rng = np.random.default_rng(10)
    pi = transition_probability_matrix(haar_unitary(5, rng))
    path = tmp_path / "pi.json"
    path.write_text(json.dumps(pi.to_json()))
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        code = run(["solve", "--input", str(path), "--seed", "7"], stdout=buf, stderr=io.StringIO())
        outs.append((code, buf.getvalue().encode()))
    same = outs[0] == outs[1] and outs[0][0] == 0
    report(10, same, f"byte_identical={same} bytes={len(outs[0][1])}")
