"""Monte-Carlo experiment harness: solution counts, noise sweeps, pipeline runs."""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import statistics
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import MomError, ParameterError
from .formats import load_instance, load_pseudoranges
from .homotopy import TrackerConfig
from .network import (
    NetworkInstance,
    PseudorangeMatrix,
    add_noise,
    random_instance,
    synthesize_pseudoranges,
)
from .reduction import MinimalConfig
from .solvers import (
    PipelineOptions,
    SubminimalConfig,
    range_cost,
    solve_minimal,
    solve_overdetermined,
    solve_subminimal,
)

log = logging.getLogger(__name__)

DEFAULT_SIGMA_GRID = tuple(float(s) for s in np.logspace(-6, -1, 7))
ROOM = (4.0, 4.6, 1.5)


class ExperimentKind(enum.Enum):
    SOLUTION_COUNT = "counts"
    CLEAN_ERROR = "clean"
    NOISE_SWEEP = "noise"
    PIPELINE = "pipeline"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    config: str
    trials: int = 100
    sigma_grid: tuple[float, ...] = DEFAULT_SIGMA_GRID
    seed: int = 0
    output: str | None = None
    workers: int = 1
    tracker: TrackerConfig = field(default_factory=TrackerConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.kind is ExperimentKind.NOISE_SWEEP and not self.sigma_grid:
            raise ParameterError("noise sweep needs a nonempty sigma grid")
        if any(s < 0 for s in self.sigma_grid):
            raise ParameterError("sigmas must be nonnegative")


@dataclass
class ExperimentReport:
    kind: ExperimentKind
    config: str
    records: list[dict]
    aggregates: dict

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "config": self.config,
                "aggregates": self.aggregates, "records": self.records}

    @classmethod
    def from_json(cls, data: dict) -> ExperimentReport:
        return cls(ExperimentKind(data["kind"]), data["config"], data["records"], data["aggregates"])

    def check_aggregates(self) -> bool:
        """True when stored aggregates match a recomputation from the records."""
        return _json_equal(self.aggregates, aggregate(self.kind, self.records))


def _json_equal(a, b) -> bool:
    return json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


def trial_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _map(fn, items, workers: int):
    """Apply ``fn`` to every item; results come back in input order."""
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- aggregation --------------------------------------------------------------


def _counts_aggregates(records: list[dict]) -> dict:
    ok = [r for r in records if r["error"] is None]
    agg = {"trials": len(records), "failures": len(records) - len(ok),
           "failure_rate": (len(records) - len(ok)) / len(records)}
    if not ok:
        return agg
    totals = [r["total"] for r in ok]
    reals = [r["real"] for r in ok]
    times = [r["time_s"] for r in ok]
    # ties resolved towards the larger count
    mode = max(Counter(totals).items(), key=lambda kv: (kv[1], kv[0]))[0]
    agg.update({
        "total_mode": mode,
        "total_mode_fraction": totals.count(mode) / len(records),
        "real_min": min(reals),
        "real_avg": sum(reals) / len(reals),
        "real_max": max(reals),
        "mean_time_s": sum(times) / len(times),
        "median_time_s": statistics.median(times),
    })
    return agg


def _sweep_aggregates(records: list[dict]) -> dict:
    rows = []
    for sigma in sorted({r["sigma"] for r in records}):
        at = [r for r in records if r["sigma"] == sigma]
        errs = [r["rel_error"] for r in at if r["error"] is None]
        rows.append({
            "sigma": sigma,
            "median_rel_error": statistics.median(errs) if errs else None,
            "failure_rate": (len(at) - len(errs)) / len(at),
            "trials": len(at),
        })
    return {"per_sigma": rows}


def _pipeline_aggregates(records: list[dict]) -> dict:
    rec = records[0]
    agg = {k: rec[k] for k in ("residual", "initial_residual", "cost", "initial_cost")}
    if rec.get("receiver_errors") is not None:
        agg["mean_receiver_error"] = float(np.mean(rec["receiver_errors"]))
    return agg


def aggregate(kind: ExperimentKind, records: list[dict]) -> dict:
    if kind is ExperimentKind.SOLUTION_COUNT:
        return _counts_aggregates(records)
    if kind in (ExperimentKind.NOISE_SWEEP, ExperimentKind.CLEAN_ERROR):
        return _sweep_aggregates(records)
    return _pipeline_aggregates(records)


# -- solution counts ------------------------------------------------------------


def _count_trial(args) -> dict:
    config, seed, k, tracker = args
    cfg = MinimalConfig.from_label(config)
    inst = random_instance(cfg.m, cfg.n, cfg.dim, rng=trial_rng(seed, k))
    f = synthesize_pseudoranges(inst)
    tcfg = _with_seed(tracker, trial_seed(seed, k))
    rec = {"trial": k, "error": None}
    try:
        t0 = time.perf_counter()
        cands = solve_minimal(f, cfg, tcfg, allow_empty=True)
        rec["time_s"] = time.perf_counter() - t0
    except MomError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec
    rec["total"] = len(cands.solutions.all_solutions)
    rec["real"] = len(cands)
    # clean data: the ground truth should be one of the candidates
    rec["truth_error"] = min((relative_error(c, inst) for c in cands), default=None)
    rec["path_stats"] = {k: int(v) for k, v in sorted(cands.solutions.path_stats.items())}
    return rec


def _with_seed(tracker: TrackerConfig, seed: int) -> TrackerConfig:
    from dataclasses import replace
    return replace(tracker, seed=seed, gamma=None) if tracker.gamma is None else replace(tracker, seed=seed)


def run_solution_count(spec: ExperimentSpec) -> ExperimentReport:
    if spec.kind is not ExperimentKind.SOLUTION_COUNT:
        raise ParameterError(f"expected a solution-count spec, got {spec.kind}")
    cfg = MinimalConfig.from_label(spec.config)
    jobs = [(cfg.label, spec.seed, k, spec.tracker) for k in range(spec.trials)]
    records = _map(_count_trial, jobs, spec.workers)
    return ExperimentReport(spec.kind, cfg.label, records, _counts_aggregates(records))


# -- noise sweep ------------------------------------------------------------------


def relative_error(estimate, truth: NetworkInstance) -> float:
    """``||(r, o)_est - (r, o)_true|| / ||(r, o)_true||`` over all receivers and offsets."""
    est = np.concatenate([np.ravel(estimate.receivers), np.ravel(estimate.offsets)])
    ref = np.concatenate([truth.receivers.ravel(), truth.offsets.ravel()])
    return float(np.linalg.norm(est - ref) / np.linalg.norm(ref))


def _sweep_trial(args) -> list[dict]:
    config, seed, k, sigmas, tracker = args
    sub = SubminimalConfig.from_label(config)
    # one network per trial, shared by every noise level
    inst = random_instance(sub.m, sub.n, sub.dim, rng=trial_rng(seed, k))
    clean = synthesize_pseudoranges(inst)
    tcfg = _with_seed(tracker, trial_seed(seed, k))
    out = []
    for q, sigma in enumerate(sigmas):
        f = add_noise(clean, sigma, rng=trial_rng(seed, k, q + 1))
        rec = {"trial": k, "sigma": sigma, "error": None}
        try:
            sol = solve_subminimal(f, tcfg)
        except MomError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            out.append(rec)
            continue
        rec["rel_error"] = relative_error(sol, inst)
        rec["receiver_rel_error"] = float(
            np.linalg.norm(sol.receivers - inst.receivers) / np.linalg.norm(inst.receivers))
        rec["offset_rel_error"] = float(
            np.linalg.norm(sol.offsets - inst.offsets) / np.linalg.norm(inst.offsets))
        rec["residual"] = sol.residual
        rec["tie"] = sol.metadata.get("tie", False)
        out.append(rec)
    return out


def run_noise_sweep(spec: ExperimentSpec) -> ExperimentReport:
    if spec.kind not in (ExperimentKind.NOISE_SWEEP, ExperimentKind.CLEAN_ERROR):
        raise ParameterError(f"expected a noise-sweep spec, got {spec.kind}")
    sub = SubminimalConfig.from_label(spec.config)
    sigmas = (0.0,) if spec.kind is ExperimentKind.CLEAN_ERROR else tuple(spec.sigma_grid)
    jobs = [(sub.label, spec.seed, k, sigmas, spec.tracker) for k in range(spec.trials)]
    records = [r for batch in _map(_sweep_trial, jobs, spec.workers) for r in batch]
    records.sort(key=lambda r: (r["sigma"], r["trial"]))
    return ExperimentReport(spec.kind, sub.label, records, _sweep_aggregates(records))


def run_clean_error(spec: ExperimentSpec) -> ExperimentReport:
    return run_noise_sweep(spec)


# -- pipeline -----------------------------------------------------------------


def room_instance(m: int, n: int, room=ROOM, seed: int | None = None,
                  rng: np.random.Generator | None = None) -> NetworkInstance:
    """Receivers and transmitters uniform in an axis-aligned box, offsets standard normal."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    room = np.asarray(room, dtype=float)
    rec = rng.uniform(0, 1, size=(m, len(room))) * room
    tra = rng.uniform(0, 1, size=(n, len(room))) * room
    return NetworkInstance(len(room), rec, tra, rng.standard_normal(n))


def pipeline_record(f: PseudorangeMatrix, truth: NetworkInstance | None = None,
                    cfg: TrackerConfig = TrackerConfig(),
                    options: PipelineOptions = PipelineOptions()) -> dict:
    sol = solve_overdetermined(f, cfg, options)
    rec = {
        "m": f.m, "n": f.n, "dim": f.dim,
        "residual": sol.residual,
        "initial_residual": sol.metadata["initial_residual"],
        "cost": sol.metadata["lm_cost"],
        "initial_cost": sol.metadata["initial_cost"],
        "lm_iterations": sol.metadata["lm_iterations"],
        "attempt": sol.metadata["attempt"],
        "receivers": sol.receivers.tolist(),
        "offsets": sol.offsets.tolist(),
        "receiver_errors": None,
    }
    if truth is not None:
        if truth.receivers.shape != sol.receivers.shape:
            raise ParameterError("ground truth does not match the measurement shape")
        rec["receiver_errors"] = np.linalg.norm(sol.receivers - truth.receivers, axis=1).tolist()
    return rec


def run_pipeline(pseudorange_file, truth_file=None, cfg: TrackerConfig = TrackerConfig(),
                 options: PipelineOptions = PipelineOptions()) -> ExperimentReport:
    f = load_pseudoranges(pseudorange_file)
    truth = load_instance(truth_file) if truth_file is not None else None
    rec = pipeline_record(f, truth, cfg, options)
    return ExperimentReport(ExperimentKind.PIPELINE, f"{f.m}r{f.n}s{f.dim}d", [rec],
                            _pipeline_aggregates([rec]))


# -- output -------------------------------------------------------------------

COUNT_COLUMNS = ["config", "total_mode", "real_min", "real_avg", "real_max", "mean_time_s"]
SWEEP_COLUMNS = ["sigma", "median_rel_error", "failure_rate"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_to_csv(report: ExperimentReport, include_timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    agg = report.aggregates
    if report.kind is ExperimentKind.SOLUTION_COUNT:
        w.writerow(COUNT_COLUMNS)
        row = {"config": report.config, **agg}
        if not include_timing:
            row["mean_time_s"] = None
        w.writerow([_fmt(row.get(c)) for c in COUNT_COLUMNS])
    elif report.kind in (ExperimentKind.NOISE_SWEEP, ExperimentKind.CLEAN_ERROR):
        w.writerow(SWEEP_COLUMNS)
        for row in agg["per_sigma"]:
            w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    else:
        cols = ["receiver", "error"]
        w.writerow(cols)
        errs = report.records[0]["receiver_errors"] or []
        for i, e in enumerate(errs):
            w.writerow([i, repr(float(e))])
    return buf.getvalue()


def report_to_json(report: ExperimentReport, include_timing: bool = True) -> str:
    data = report.to_json()
    if not include_timing:
        data = json.loads(json.dumps(data))
        for rec in data["records"]:
            rec.pop("time_s", None)
        for key in ("mean_time_s", "median_time_s"):
            data["aggregates"].pop(key, None)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def summary_table(report: ExperimentReport) -> str:
    """Short human-readable summary, shaped like the reference tables."""
    agg = report.aggregates
    if report.kind is ExperimentKind.SOLUTION_COUNT:
        if "total_mode" not in agg:
            return f"{report.config}: all {agg['trials']} trials failed"
        return (
            f"{'config':<8} {'tot.sols':>8} {'min':>4} {'avg':>6} {'max':>4} {'time[s]':>8} {'fail':>6}\n"
            f"{report.config:<8} {agg['total_mode']:>8} {agg['real_min']:>4} "
            f"{agg['real_avg']:>6.2f} {agg['real_max']:>4} {agg['mean_time_s']:>8.3f} "
            f"{agg['failure_rate']:>6.1%}"
        )
    if report.kind is ExperimentKind.PIPELINE:
        lines = [f"{report.config}: residual {agg['initial_residual']:.4g} -> {agg['residual']:.4g}"]
        if "mean_receiver_error" in agg:
            lines.append(f"mean receiver error {agg['mean_receiver_error']:.4g}")
        return "\n".join(lines)
    lines = [f"{report.config}: {'sigma':>10} {'median rel. err':>16} {'fail':>6}"]
    for row in agg["per_sigma"]:
        med = row["median_rel_error"]
        med_s = f"{med:.3e}" if med is not None else "n/a"
        lines.append(f"{'':{len(report.config) + 1}} {row['sigma']:>10.2e} {med_s:>16} {row['failure_rate']:>6.1%}")
    return "\n".join(lines)


def emit_report(report: ExperimentReport, fmt: str = "csv", path=None,
                include_timing: bool = True, echo: bool = True) -> str:
    """Serialize a report (csv or json), optionally to ``path``; prints a summary."""
    if fmt == "csv":
        text = report_to_csv(report, include_timing)
    elif fmt == "json":
        text = report_to_json(report, include_timing)
    else:
        raise ParameterError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    if echo:
        print(summary_table(report))
    return text


def load_report(path) -> ExperimentReport:
    return ExperimentReport.from_json(json.loads(Path(path).read_text()))


def spec_dict(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["kind"] = spec.kind.value
    return d
