"""End-to-end acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line in ``RESULTS``; ``conftest.py``
prints them at the end of the run.  ``python3 tests/test_acceptance.py``
runs the same checks without pytest.
"""

import time

import numpy as np
from instances import (
    SQRT2_PLUS_SQRT3,
    flatness_configuration,
    q_measure,
    random_directions,
    random_restricted,
    random_small_instance,
    worked_example,
)

from wfrdist.coupling import SemiCoupling, value_function
from wfrdist.measure import DiscreteMeasure, build_cost_matrix, random_measure
from wfrdist.mesh import srnf_distance, srnf_measure
from wfrdist.oracle import compare_solver_to_oracle
from wfrdist.shapes import box, l_prism, synthetic_family, unit_cube
from wfrdist.sinkhorn import sinkhorn_solve
from wfrdist.solver import SolverConfig, closed_form_single_atom, solve

RESULTS = {}


def record(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
    RESULTS[number] = line
    print(line)
    assert passed, line


def test_criterion_01_worked_example():
    start = time.perf_counter()
    worst = 0.0
    for flip, target in ((False, SQRT2_PLUS_SQRT3), (True, np.sqrt(2.0))):
        mu, nu = worked_example(flip)
        report = solve(mu, nu)
        achieved = value_function(report.coupling, build_cost_matrix(mu, nu))
        worst = max(worst, abs(report.f_star - target), abs(achieved - target))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-8 and elapsed < 1.0,
           f"worked example |F - F*| = {worst:.1e} (tol 1e-8), {elapsed:.3f} s (< 1 s)")


def test_criterion_02_oracle_equivalence():
    rng = np.random.default_rng(2024)
    instances = [random_small_instance(rng) for _ in range(200)]
    omegas = [build_cost_matrix(mu, nu, k) for mu, nu, k in instances]
    negative = sum(bool((om < 0).any()) for om in omegas)
    dead_rows = sum(bool((om <= 0).all(axis=1).any()) for om in omegas)
    kernels = {(k.variant, k.rho == 1.0) for _, _, k in instances}
    start = time.perf_counter()
    report = compare_solver_to_oracle(instances, tolerance=1e-6)
    elapsed = time.perf_counter() - start
    ok = report.passed and elapsed < 120 and negative > 0 and dead_rows > 0 and len(kernels) == 3
    record(2, ok, f"200 instances max |F_solver - F_oracle| = {report.max_deviation:.1e} "
                  f"(tol 1e-6), {negative} with negative weights, {dead_rows} with a "
                  f"nonpositive row, {elapsed:.1f} s (< 120 s)")


def test_criterion_03_single_atom_closed_form():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        a, b = rng.uniform(0.01, 10.0, 2)
        u, v = random_directions(rng, 2)
        d = solve(DiscreteMeasure([a], [u]), DiscreteMeasure([b], [v])).distance
        worst = max(worst, abs(d - closed_form_single_atom(a, b, u, v)))
    record(3, worst <= 1e-9, f"1000 single-atom pairs max error {worst:.1e} (tol 1e-9)")


def test_criterion_04_monotone_ascent():
    rng = np.random.default_rng(4)
    sizes = [8, 32, 128, 512]
    config = SolverConfig(max_iterations=300, record_history=True)
    worst = np.inf
    for k in range(100):
        n = sizes[k % 4]
        m = int(rng.integers(1, n + 1))
        mu = random_measure(m, int(rng.integers(2**31)), float(rng.uniform(0.5, 30)))
        nu = random_measure(n, int(rng.integers(2**31)), float(rng.uniform(0.5, 30)))
        history = solve(mu, nu, config=config).history
        worst = min(worst, float(np.diff(history).min(initial=0.0)))
    record(4, worst >= -1e-12,
           f"100 instances (n up to 512) smallest F step {worst:.1e} (>= -1e-12)")


def test_criterion_05_flatness():
    rng = np.random.default_rng(5)
    config = SolverConfig(epsilon=1e-20, max_iterations=100000)
    worst_rel, worst_off = 0.0, 0.0
    for k in range(50):
        n = 2 + k % 5
        y, z = flatness_configuration(rng, n)
        report = solve(q_measure(y), q_measure(z), config=config)
        target = np.linalg.norm(y - z)
        worst_rel = max(worst_rel, abs(report.distance - target) / target)
        A, B = report.coupling.A[1:, 1:], report.coupling.B[1:, 1:]
        off = (A.sum() - np.trace(A) + B.sum() - np.trace(B)) / sum(report.total_mass)
        worst_off = max(worst_off, off)
    record(5, worst_rel <= 1e-6 and worst_off < 1e-8,
           f"50 near-diagonal configurations relative error {worst_rel:.1e} (tol 1e-6), "
           f"off-diagonal mass fraction {worst_off:.1e} (< 1e-8)")


def test_criterion_06_sinkhorn_dominance():
    seeds = np.random.SeedSequence(6).generate_state(200)
    start = time.perf_counter()
    wins = 0
    for k in range(100):
        mu = random_measure(128, int(seeds[2 * k]), 30.0)
        nu = random_measure(128, int(seeds[2 * k + 1]), 30.0)
        d2 = solve(mu, nu).distance ** 2
        _, cost = sinkhorn_solve(mu, nu, lam=1e-3)
        wins += d2 <= cost + 1e-9
    elapsed = time.perf_counter() - start
    record(6, wins >= 95 and elapsed < 300,
           f"exact d^2 <= Sinkhorn cost on {wins}/100 pairs (>= 95), {elapsed:.0f} s (< 300 s)")


def test_criterion_07_srnf_invariances():
    cube = unit_cube()
    self_d = srnf_distance(cube, cube).distance
    sub_d = srnf_distance(cube, cube.subdivided()).distance
    other = box(1.0, 2.0, 0.5)
    translation_equal = (srnf_distance(cube, other).distance
                         == srnf_distance(cube.translated([5.0, 0.0, 0.0]), other).distance)
    scale_err = max(abs(srnf_distance(cube, cube.scaled(s)).distance - abs(s - 1) * np.sqrt(6))
                    for s in (0.5, 2.0, 3.0))
    ok = self_d <= 1e-7 and sub_d <= 1e-6 and translation_equal and scale_err <= 1e-6
    record(7, ok, f"cube self {self_d:.1e}, subdivision {sub_d:.1e}, translation "
                  f"{'bit-equal' if translation_equal else 'differs'}, scaling error "
                  f"{scale_err:.1e}")


def test_criterion_08_degeneracy_witness():
    s = np.sqrt(3.0)
    d = srnf_distance(l_prism(1.0), box(s, s, 2.0 / s)).distance
    record(8, d <= 1e-6, f"L-prism vs box with equal area measure distance {d:.1e} (<= 1e-6)")


def test_criterion_09_concavity():
    rng = np.random.default_rng(9)
    worst = np.inf
    for _ in range(1000):
        mu, nu, kernel = random_small_instance(rng)
        omega = build_cost_matrix(mu, nu, kernel)
        c0 = random_restricted(rng, mu.weights, nu.weights, omega)
        c1 = random_restricted(rng, mu.weights, nu.weights, omega)
        f0, f1 = value_function(c0, omega), value_function(c1, omega)
        t = float(rng.choice([0.25, 0.5, 0.75]))
        mid = SemiCoupling(t * c0.A + (1 - t) * c1.A, t * c0.B + (1 - t) * c1.B)
        worst = min(worst, value_function(mid, omega) - (t * f0 + (1 - t) * f1))
    record(9, worst >= -1e-9, f"1000 segment checks smallest concavity margin {worst:.1e}")


def test_criterion_10_triangle_inequality():
    family = [srnf_measure(mesh) for _, mesh in synthetic_family(10, seed=10)]
    D = np.array([[solve(a, b).distance for b in family] for a in family])
    # D[i, k] <= D[i, j] + D[j, k]
    slack = float((D[:, :, None] + D[None, :, :] - D[:, None, :]).min())
    record(10, slack >= -1e-6, f"all triples of 10 meshes, smallest slack {slack:.1e}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    raise SystemExit(1 if failed else 0)
