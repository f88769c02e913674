"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line. The Monte-Carlo runs are
shared between criteria through a module-level cache, so criteria 1, 3 and
the membership part of 7 reuse the instances of criterion 2.
"""

import numpy as np
import pytest

from mom import bench
from mom.bench import ExperimentKind, ExperimentSpec
from mom.homotopy import TrackerConfig
from mom.network import add_noise, random_instance, synthesize_pseudoranges
from mom.polynomial import MultiPoly, PolySystem, CompiledSystem, evaluate, mul, add
from mom.reduction import MinimalConfig, back_substitute, build_reduced_system
from mom.solution import MomSolution
from mom.solvers import PipelineOptions, SubminimalConfig, refine_lm, solve_overdetermined

SEED = 2024
MINIMAL = list(MinimalConfig)
SUBMINIMAL = list(SubminimalConfig)
TIME_FACTOR = 10.0
PIPELINE_TARGET = 0.016

_cache: dict = {}


def verdict(request, number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line("")
        reporter.write_line(line)


def count_report(config: MinimalConfig, trials: int):
    key = ("counts", config.label)
    rep = _cache.get(key)
    if rep is None or len(rep.records) < trials:
        spec = ExperimentSpec(ExperimentKind.SOLUTION_COUNT, config.label, trials=trials, seed=SEED)
        rep = bench.run_solution_count(spec)
        assert rep.check_aggregates()
        _cache[key] = rep
    return rep


def _g(x) -> str:
    return "none" if x is None else f"{x:.3g}"


def _first(records, k):
    return [r for r in records if r["trial"] < k]


# -- 1. total solution counts ---------------------------------------------------


@pytest.mark.parametrize("config", MINIMAL, ids=lambda c: c.label)
def test_criterion_1_solution_counts(request, config):
    recs = _first(count_report(config, 1000).records, 100)
    totals = [r.get("total") for r in recs]
    hits = sum(t == config.total_solutions for t in totals)
    values = [t for t in totals if t is not None]
    mode = max(set(values), key=lambda v: (values.count(v), v)) if values else None
    ok = mode == config.total_solutions and hits >= 95
    verdict(request, 1, ok, f"{config.label}: modal total {mode} (expected "
            f"{config.total_solutions}), exact in {hits}/100 instances (need >= 95)")
    assert ok


# -- 2. real solution statistics --------------------------------------------------


@pytest.mark.parametrize("config", MINIMAL, ids=lambda c: c.label)
def test_criterion_2_real_solutions(request, config):
    rep = count_report(config, 1000)
    reals = np.array([r["real"] for r in rep.records if r["error"] is None])
    inside = np.mean((reals >= config.real_min) & (reals <= config.real_max))
    avg = float(reals.mean())
    ok = len(reals) == 1000 and inside >= 0.99 and abs(avg - config.real_avg) <= 2
    verdict(request, 2, ok, (
        f"{config.label}: {len(reals)} instances, observed min/avg/max "
        f"{reals.min()}/{avg:.2f}/{reals.max()}; {inside:.1%} inside "
        f"[{config.real_min},{config.real_max}] (need 99%), avg target "
        f"{config.real_avg} +- 2"))
    assert ok


# -- 3. timing -----------------------------------------------------------------------


@pytest.mark.parametrize("config", MINIMAL, ids=lambda c: c.label)
def test_criterion_3_timing(request, config):
    agg = count_report(config, 1000).aggregates
    ratio = agg["mean_time_s"] / config.reference_time
    ok = 1 / TIME_FACTOR <= ratio <= TIME_FACTOR
    verdict(request, 3, ok, (
        f"{config.label}: mean {agg['mean_time_s']:.3f} s (median "
        f"{agg['median_time_s']:.3f} s) vs reference {config.reference_time} s, "
        f"ratio {ratio:.2f} (need within x10)"))
    assert ok


# -- 4. clean-data stability ---------------------------------------------------------


@pytest.mark.parametrize("sub", SUBMINIMAL, ids=lambda s: s.label)
def test_criterion_4_clean_stability(request, sub):
    spec = ExperimentSpec(ExperimentKind.CLEAN_ERROR, sub.label, trials=200, seed=SEED)
    rep = bench.run_clean_error(spec)
    row = rep.aggregates["per_sigma"][0]
    med = row["median_rel_error"]
    ok = med is not None and med < 1e-6 and row["trials"] == 200
    verdict(request, 4, ok, (
        f"{sub.label}: median relative error {_g(med)} over 200 clean instances "
        f"(failure rate {row['failure_rate']:.1%}; need < 1e-6)"))
    assert ok


# -- 5. noise robustness ----------------------------------------------------------------


@pytest.mark.parametrize("sub", SUBMINIMAL, ids=lambda s: s.label)
def test_criterion_5_noise_monotone(request, sub):
    spec = ExperimentSpec(ExperimentKind.NOISE_SWEEP, sub.label, trials=100,
                          sigma_grid=bench.DEFAULT_SIGMA_GRID, seed=SEED)
    rep = bench.run_noise_sweep(spec)
    rows = rep.aggregates["per_sigma"]
    meds = [r["median_rel_error"] for r in rows]
    inversions = sum(b < a for a, b in zip(meds, meds[1:]))
    ok = all(m is not None for m in meds) and inversions <= 1 and all(r["trials"] == 100 for r in rows)
    curve = ", ".join(f"{r['sigma']:.0e}:{_g(r['median_rel_error'])}" for r in rows)
    verdict(request, 5, ok, f"{sub.label}: {inversions} inversion(s) (need <= 1); {curve}")
    assert ok


# -- 6. pipeline order of magnitude -----------------------------------------------------------


def test_criterion_6_pipeline_scale(request):
    room = np.array(bench.ROOM)
    diag = float(np.linalg.norm(room))
    rng = np.random.default_rng(SEED)
    inst = bench.room_instance(12, 151, room, rng=rng)
    f = add_noise(synthesize_pseudoranges(inst), 1e-2 * diag, rng=rng)
    sol = solve_overdetermined(f, TrackerConfig(seed=SEED), PipelineOptions(seed=SEED))
    err = float(np.linalg.norm(sol.receivers - inst.receivers, axis=1).mean())
    rel = err / diag
    hist = sol.metadata["lm_cost_history"]
    monotone = all(b <= a for a, b in zip(hist, hist[1:]))
    ok = PIPELINE_TARGET / 3 <= rel <= PIPELINE_TARGET * 3 and monotone
    verdict(request, 6, ok, (
        f"12r/151s room scene, sigma = 1e-2 x diagonal ({1e-2 * diag:.3f}): mean receiver "
        f"error {err:.4f} = {rel:.4f} diagonals (need within x3 of {PIPELINE_TARGET}); "
        f"LM cost monotone: {monotone}"))
    assert ok


# -- 7. property suites -----------------------------------------------------------------------


def _membership():
    worst = {}
    for config in MINIMAL:
        recs = _first(count_report(config, 1000).records, 100)
        errs = [r.get("truth_error") for r in recs]
        worst[config.label] = max(np.inf if e is None else e for e in errs)
    return worst


def _round_trip():
    worst = 0.0
    for config in MINIMAL:
        for k in range(100):
            inst = random_instance(config.m, config.n, config.dim, rng=bench.trial_rng(SEED, k))
            rs = build_reduced_system(synthesize_pseudoranges(inst), config)
            retained = inst.offsets[: config.nvars]
            scale = np.array([p.max_abs_coeff() for p in rs.system.polys])
            worst = max(worst, float(np.max(np.abs(rs.system.evaluate(retained)) / scale)))
            sol = back_substitute(rs, retained)
            worst = max(worst, bench.relative_error(sol, inst))
    return worst


def _random_poly(rng, nvars=4, terms=8, max_exp=3):
    return MultiPoly(nvars, {
        tuple(int(v) for v in rng.integers(0, max_exp + 1, nvars)):
            complex(rng.standard_normal(), rng.standard_normal())
        for _ in range(terms)
    })


def _homomorphism():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        p, q = _random_poly(rng), _random_poly(rng)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        for got, want in ((evaluate(add(p, q), v), evaluate(p, v) + evaluate(q, v)),
                          (evaluate(mul(p, q), v), evaluate(p, v) * evaluate(q, v))):
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return worst


def _jacobian_fd():
    rng = np.random.default_rng(SEED + 1)
    h = 1e-6
    worst = 0.0
    for _ in range(50):
        system = PolySystem([_random_poly(rng) for _ in range(4)])
        comp = CompiledSystem(system)
        v = rng.standard_normal(4)
        _, J = comp.values_and_jacobians(v[None, :].astype(complex))
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fd = (system.evaluate(v + e) - system.evaluate(v - e)) / (2 * h)
            scale = 1 + np.abs(J[0][:, k]).max()
            worst = max(worst, float(np.abs(J[0][:, k] - fd).max() / scale))
    return worst


def _lm_monotone():
    bad = 0
    for k in range(20):
        rng = bench.trial_rng(SEED, 7, k)
        inst = random_instance(8, 15, 3, rng=rng)
        f = add_noise(synthesize_pseudoranges(inst), 1e-2, rng=rng)
        start = MomSolution.scored(inst.receivers + 0.1 * rng.standard_normal((8, 3)),
                                   inst.offsets + 0.1 * rng.standard_normal(15), f)
        hist = refine_lm(start, f).metadata["lm_cost_history"]
        bad += any(b > a for a, b in zip(hist, hist[1:]))
    return bad


def _byte_identical():
    outs = []
    for _ in range(2):
        counts = bench.run_solution_count(ExperimentSpec(
            ExperimentKind.SOLUTION_COUNT, "3r3s2d", trials=3, seed=SEED))
        noise = bench.run_noise_sweep(ExperimentSpec(
            ExperimentKind.NOISE_SWEEP, "3r4s2d", trials=3, sigma_grid=(0.0, 1e-3), seed=SEED))
        outs.append(bench.emit_report(counts, "csv", include_timing=False, echo=False)
                    + bench.emit_report(noise, "csv", echo=False)
                    + bench.emit_report(noise, "json", echo=False))
    return outs[0] == outs[1]


def test_criterion_7_property_suites(request):
    membership = _membership()
    round_trip = _round_trip()
    homomorphism = _homomorphism()
    jac = _jacobian_fd()
    lm_bad = _lm_monotone()
    identical = _byte_identical()
    checks = {
        "membership": all(v < 1e-6 for v in membership.values()),
        "round trip": round_trip < 1e-8,
        "homomorphism": homomorphism < 1e-10,
        "jacobian": jac < 1e-6,
        "lm monotone": lm_bad == 0,
        "byte identical": identical,
    }
    ok = all(checks.values())
    worst_member = ", ".join(f"{k} {v:.1e}" for k, v in membership.items())
    verdict(request, 7, ok, (
        f"membership worst ({worst_member}); round trip {round_trip:.1e}; "
        f"homomorphism {homomorphism:.1e}; jacobian vs central differences {jac:.1e}; "
        f"LM non-monotone runs {lm_bad}/20; byte-identical reports {identical}; "
        f"failed: {[k for k, v in checks.items() if not v] or 'none'}"))
    assert ok
