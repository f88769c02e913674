import numpy as np
import pytest

from mom.errors import ParameterError
from mom.homotopy import (
    PathStatus,
    TrackerConfig,
    PATCH_MIN_ALIGNMENT,
    deduplicate,
    is_real,
    projectivize,
    solve_system,
    total_degree_start,
    track_path,
    track_paths,
)
from mom.polynomial import MultiPoly, PolySystem
from mom.reduction import MinimalConfig, build_reduced_system

from conftest import clean_problem

x, y = MultiPoly.variables(2)
X = MultiPoly.variable(1, 0)


def set_distance(a, b):
    return max(max(min(np.linalg.norm(p - q) for q in b) for p in a),
               max(min(np.linalg.norm(p - q) for q in a) for p in b))


def test_config_validation():
    with pytest.raises(ParameterError):
        TrackerConfig(min_step=0.1, initial_step=0.05)
    with pytest.raises(ParameterError):
        TrackerConfig(gamma=0.5 + 0.5j)
    with pytest.raises(ParameterError):
        TrackerConfig(predictor="midpoint")
    g = np.exp(0.3j)
    assert TrackerConfig(gamma=g).resolved_gamma() == g
    a, b = TrackerConfig(seed=3).resolved_gamma(), TrackerConfig(seed=3).resolved_gamma()
    assert a == b and abs(abs(a) - 1) < 1e-12


def test_start_system_contract():
    G, roots = total_degree_start(PolySystem([X**2 - 1]), seed=0)
    assert len(roots) == 2
    for r in roots:
        assert abs(G.evaluate(r)[0]) < 1e-12
    quartics = PolySystem([x**4 + y, y**4 - x * y])
    _, r2 = total_degree_start(quartics, seed=0)
    assert len(r2) == 16


@pytest.mark.parametrize("config,count", [(MinimalConfig.M3R3S_2D, 64), (MinimalConfig.M4R4S_3D, 256)])
def test_bezout_start_roots(config, count):
    _, f = clean_problem(config.m, config.n, config.dim, seed=0)
    rs = build_reduced_system(f, config)
    G, roots = total_degree_start(rs.system, seed=1)
    assert len(roots) == count
    assert len({tuple(np.round(r, 8)) for r in roots}) == count
    assert max(np.abs(G.evaluate(r)).max() for r in roots) < 1e-10


def test_start_system_rejects_bad_targets():
    with pytest.raises(ParameterError):
        total_degree_start(PolySystem([x, MultiPoly.zero(2)]))
    with pytest.raises(ParameterError):
        total_degree_start(PolySystem([x]))
    with pytest.raises(ParameterError):
        total_degree_start(PolySystem([x, MultiPoly.constant(2, 1.0)]))


@pytest.mark.parametrize("predictor", ["rk4", "euler"])
def test_track_square_roots(predictor):
    target = PolySystem([X**2 - 1])
    cfg = TrackerConfig(seed=2, predictor=predictor, projective=False)
    G, roots = total_degree_start(target, seed=2)
    results = [track_path(target, G, r, cfg, gamma=cfg.resolved_gamma()) for r in roots]
    assert all(p.status is PathStatus.CONVERGED for p in results)
    ends = sorted(p.endpoint[0].real for p in results)
    np.testing.assert_allclose(ends, [-1.0, 1.0], atol=1e-10)
    for p in results:
        assert p.final_residual < cfg.newton_tol * (1 + np.linalg.norm(p.endpoint))


@pytest.mark.parametrize("projective", [True, False])
def test_circle_and_line(projective):
    target = PolySystem([x**2 + y**2 - 5, x - y - 1])
    sols = solve_system(target, TrackerConfig(seed=4, projective=projective))
    assert len(sols.all_solutions) == 2 and len(sols.real_solutions) == 2
    got = sorted(tuple(s) for s in sols.real_solutions)
    np.testing.assert_allclose(got, [(-1.0, -2.0), (2.0, 1.0)], atol=1e-10)


def test_product_system():
    sols = solve_system(PolySystem([x**2 - 1, y**2 - 1]), TrackerConfig(seed=0))
    assert len(sols.all_solutions) == 4 and len(sols.real_solutions) == 4
    assert sols.path_stats["paths"] == 4


def test_excess_paths_do_not_converge():
    # two roots, the other two Bezout paths go to infinity
    target = PolySystem([x * y - 1, x * y + x - 3])
    for projective in (True, False):
        sols = solve_system(target, TrackerConfig(seed=1, projective=projective))
        assert len(sols.all_solutions) == 1
        np.testing.assert_allclose(sols.real_solutions[0], [2.0, 0.5], atol=1e-10)
        assert sols.path_stats["converged"] == 1


def test_complex_roots_not_real():
    sols = solve_system(PolySystem([X**2 + 1]), TrackerConfig(seed=0))
    assert len(sols.all_solutions) == 2 and sols.real_solutions == []


def test_start_root_check():
    target = PolySystem([X**2 - 1])
    G, _ = total_degree_start(target, seed=0)
    with pytest.raises(ParameterError):
        track_paths(target, G, [np.array([5.0 + 0j])])


def test_converged_endpoints_satisfy_target():
    _, f = clean_problem(3, 3, 2, seed=8)
    rs = build_reduced_system(f, "3r3s2d")
    sols = solve_system(rs.system, TrackerConfig(seed=8))
    assert len(sols.paths) == 64
    assert sum(p.status is PathStatus.CONVERGED for p in sols.paths) >= 28
    assert len(sols.all_solutions) == 28
    scale = max(p.max_abs_coeff() for p in rs.system.polys)
    for s in sols.all_solutions:
        res = np.abs(rs.system.evaluate(s)).max() / scale
        assert res < 1e-8 * (1 + np.linalg.norm(s)) ** 4
    for r in sols.real_solutions:
        assert any(np.allclose(r, s.real) and is_real(s, 1e-8) for s in sols.all_solutions)
    for i, a in enumerate(sols.all_solutions):
        for b in sols.all_solutions[i + 1:]:
            assert np.linalg.norm(a - b) > 1e-6 * max(1, np.linalg.norm(a))


def test_gamma_independence():
    _, f = clean_problem(2, 4, 2, seed=12)
    rs = build_reduced_system(f, "2r4s2d")
    a = solve_system(rs.system, TrackerConfig(seed=1))
    b = solve_system(rs.system, TrackerConfig(seed=2))
    assert len(a.all_solutions) == len(b.all_solutions) == 24
    scaled = [s / max(1, np.linalg.norm(s)) for s in a.all_solutions]
    scaled_b = [s / max(1, np.linalg.norm(s)) for s in b.all_solutions]
    assert set_distance(scaled, scaled_b) < 1e-6


def test_deterministic_given_seed():
    _, f = clean_problem(3, 3, 2, seed=5)
    rs = build_reduced_system(f, "3r3s2d")
    a = solve_system(rs.system, TrackerConfig(seed=9))
    b = solve_system(rs.system, TrackerConfig(seed=9))
    assert len(a.all_solutions) == len(b.all_solutions)
    for p, q in zip(a.all_solutions, b.all_solutions):
        np.testing.assert_array_equal(p, q)
    assert a.stats_json() == b.stats_json()


def test_batch_independence():
    target = PolySystem([x**2 + y**2 - 5, x - y - 1])
    G, roots = total_degree_start(target, seed=3)
    cfg = TrackerConfig(projective=False)
    g = np.exp(1.1j)
    together = track_paths(target, G, roots, cfg, g)
    alone = [track_path(target, G, r, cfg, g) for r in roots]
    for p, q in zip(together, alone):
        assert p.status is q.status
        np.testing.assert_allclose(p.endpoint, q.endpoint, atol=1e-12)


def test_deduplicate_and_reality():
    pts = [np.array([1.0 + 0j]), np.array([1.0 + 1e-9j]), np.array([2.0 + 0j])]
    assert len(deduplicate(pts, 1e-6)) == 2
    assert is_real(np.array([3.0 + 1e-9j]), 1e-8)
    assert not is_real(np.array([3.0 + 1e-6j]), 1e-8)


def test_non_square_rejected():
    with pytest.raises(ParameterError):
        solve_system(PolySystem([x + y]))


def test_patch_avoids_start_roots():
    # the first patch drawn from this rng nearly contains the last start root
    target = PolySystem([x**2 + y**2 - 5, x - y - 1])
    start, roots = total_degree_start(target, seed=3)
    a = np.exp(2j * np.pi * np.random.default_rng(11).uniform(size=3))
    bad = np.array([1.0, -(a[0] + a[2] - 1e-9) / a[1]])
    _, pstart, lifted = projectivize(target, start, roots + [bad], np.random.default_rng(11))
    for z, X in zip(roots + [bad], lifted):
        Z = np.append(z, 1.0)
        assert np.allclose(X[:-1] / X[-1], z, rtol=1e-12)
        assert np.linalg.norm(X) <= np.linalg.norm(Z) / PATCH_MIN_ALIGNMENT
    assert np.abs(pstart.evaluate(lifted[0])).max() < 1e-12
