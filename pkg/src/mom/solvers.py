"""End-to-end solvers: minimal, subminimal (one extra transmitter) and overdetermined."""

from __future__ import annotations

import enum
import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateTransmitters,
    InfeasibleDistance,
    MomError,
    NoRealSolution,
    ParameterError,
    SolveFailed,
)
from .homotopy import SolutionSet, TrackerConfig, solve_system
from .network import Determinacy, PseudorangeMatrix, classify, distance_matrix
from .reduction import (
    CONDITION_LIMIT,
    MinimalConfig,
    back_substitute,
    build_reduced_system,
    elimination_matrix,
)
from .solution import MomSolution

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


class SubminimalConfig(enum.Enum):
    """A minimal configuration plus one extra transmitter."""

    S3R4S_2D = ("3r4s2d", MinimalConfig.M3R3S_2D)
    S2R5S_2D = ("2r5s2d", MinimalConfig.M2R4S_2D)
    S4R5S_3D = ("4r5s3d", MinimalConfig.M4R4S_3D)
    S2R7S_3D = ("2r7s3d", MinimalConfig.M2R6S_3D)

    def __init__(self, label, base):
        self.label = label
        self.base = base

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def n(self) -> int:
        return self.base.n + 1

    @property
    def dim(self) -> int:
        return self.base.dim

    @classmethod
    def from_label(cls, label: str) -> SubminimalConfig:
        for cfg in cls:
            if cfg.label == label.lower():
                return cfg
        raise ParameterError(f"unknown subminimal configuration {label!r}")

    @classmethod
    def for_counts(cls, m: int, n: int, dim: int) -> SubminimalConfig:
        for cfg in cls:
            if (cfg.m, cfg.n, cfg.dim) == (m, n, dim):
                return cfg
        raise ParameterError(f"{m}r/{n}s in {dim}D is not a subminimal configuration")


@dataclass
class CandidateSet:
    """Real solutions of a minimal problem, ascending by residual."""

    candidates: list[MomSolution]
    solutions: SolutionSet | None = None
    ordering: tuple[int, ...] = ()
    solve_time: float = 0.0

    def __post_init__(self):
        self.candidates = sorted(self.candidates, key=lambda c: c.residual)

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def best(self) -> MomSolution:
        return self.candidates[0]


# -- minimal ------------------------------------------------------------------


def _ordering_score(f: PseudorangeMatrix, order: list[int], config: MinimalConfig) -> float:
    s = f.transmitters[order]
    A = elimination_matrix(s, list(range(config.dim + 1)))
    cond = np.linalg.cond(A)
    if not np.isfinite(cond):
        return np.inf
    score = cond
    for j in config.extra_transmitters:
        f1, f2 = f.values[0, order[j]], f.values[1, order[j]]
        gap = abs(f2 - f1) / (1.0 + abs(f1))
        score = score / gap if gap > 0 else np.inf
    return float(score)


def choose_transmitter_order(f: PseudorangeMatrix, config: MinimalConfig) -> list[int]:
    """Transmitter permutation giving the best-conditioned elimination.

    The anchor and eliminating transmitters are picked to minimize the
    condition number of the elimination matrix, divided by the pseudorange
    gaps of the linearly eliminated transmitters. The root set of the
    problem does not depend on the order; only the numerics do.
    """
    n, k = f.n, config.dim + 1
    best, best_score = list(range(n)), _ordering_score(f, list(range(n)), config)
    for elim in itertools.combinations(range(n), k):
        rest = [j for j in range(n) if j not in elim]
        for a in elim:
            order = [a] + [j for j in elim if j != a] + rest
            score = _ordering_score(f, order, config)
            if score < best_score * (1 - 1e-12):
                best, best_score = order, score
    return best


def solve_minimal(f: PseudorangeMatrix, config: MinimalConfig | str | None = None,
                  cfg: TrackerConfig = TrackerConfig(), reorder: bool = True,
                  allow_empty: bool = False) -> CandidateSet:
    """Solve a minimal problem and back-substitute every real root.

    Candidates are scored against all supplied measurements. With
    ``allow_empty`` an empty candidate set is returned instead of raising
    :class:`NoRealSolution`.
    """
    if config is None:
        config = MinimalConfig.for_counts(f.m, f.n, f.dim)
    elif isinstance(config, str):
        config = MinimalConfig.from_label(config)
    if (f.m, f.n, f.dim) != (config.m, config.n, config.dim):
        raise ParameterError(
            f"{config.label} needs {config.m}r/{config.n}s in {config.dim}D, "
            f"got {f.m}r/{f.n}s in {f.dim}D"
        )
    order = choose_transmitter_order(f, config) if reorder else list(range(f.n))
    fp = f.subset(transmitters=order)
    inverse = np.argsort(order)

    t0 = time.perf_counter()
    rs = build_reduced_system(fp, config)
    sols = solve_system(rs.system, cfg)
    elapsed = time.perf_counter() - t0

    candidates = []
    for k, root in enumerate(sols.real_solutions):
        part = back_substitute(rs, root)
        candidates.append(MomSolution.scored(part.receivers, part.offsets[inverse], f,
                                             {"root_index": k}))
    if not candidates and not allow_empty:
        raise NoRealSolution(
            f"no real solution among {len(sols.all_solutions)} roots ({sols.path_stats})"
        )
    return CandidateSet(candidates, sols, tuple(order), elapsed)


# -- subminimal ---------------------------------------------------------------


def recover_extra_offset(sol: MomSolution, f: PseudorangeMatrix, j: int) -> float:
    """Average of ``f_ij - ||r_i - s_j||`` over the solution's receivers."""
    r = np.asarray(sol.receivers)
    if len(r) != f.m:
        raise ParameterError(f"solution has {len(r)} receivers, measurements have {f.m}")
    d = np.linalg.norm(r - f.transmitters[j], axis=1)
    return float(np.mean(f.values[:, j] - d))


def solve_subminimal(f: PseudorangeMatrix, cfg: TrackerConfig = TrackerConfig(),
                     prune_infeasible: bool = False) -> MomSolution:
    """Solve a minimal problem plus one transmitter, selecting by residual.

    The last transmitter is left out of the minimal solve; its offset is
    recovered for every real candidate and the candidate with the smallest
    residual over all measurements is returned.
    """
    sub = SubminimalConfig.for_counts(f.m, f.n, f.dim)
    base = f.subset(transmitters=range(f.n - 1))
    cands = solve_minimal(base, sub.base, cfg)
    extra = f.n - 1
    scored = []
    for c in cands:
        o_extra = recover_extra_offset(c, f.subset(transmitters=[extra]), 0)
        full = MomSolution.scored(c.receivers, np.append(c.offsets, o_extra), f)
        scored.append(full)
    pool = [s for s in scored if s.feasible] if prune_infeasible else scored
    if not pool:
        raise NoRealSolution("every real candidate is infeasible")
    residuals = np.array([s.residual for s in pool])
    best = int(np.argmin(residuals))
    ties = np.flatnonzero(np.abs(residuals - residuals[best]) <= TIE_TOL)
    meta = {
        "config": sub.label,
        "candidates": len(pool),
        "tie": bool(len(ties) > 1),
        "solve_time": cands.solve_time,
        "total_solutions": len(cands.solutions.all_solutions),
    }
    return MomSolution(pool[best].receivers, pool[best].offsets, pool[best].residual,
                       pool[best].feasible, meta)


# -- overdetermined -------------------------------------------------------------


def trilaterate_receiver(s, o, f_row, dim: int | None = None,
                         negative_tol: float = 1e-6, gn_iters: int = 20) -> np.ndarray:
    """Receiver position from pseudoranges to transmitters with known offsets.

    Linear initialization from anchor-differenced equations, then Gauss-Newton
    on the distance residuals.
    """
    s = np.asarray(s, dtype=float)
    d = np.asarray(f_row, dtype=float) - np.asarray(o, dtype=float)
    dim = s.shape[1] if dim is None else dim
    if len(s) < dim + 1:
        raise ParameterError(f"need at least {dim + 1} transmitters, got {len(s)}")
    scale = 1.0 + float(np.max(np.abs(f_row)))
    if np.any(d < -negative_tol * scale):
        raise InfeasibleDistance(f"negative distance {d.min():.3g} after removing offsets")
    d = np.maximum(d, 0.0)

    A = -2.0 * (s[1:] - s[0])
    b = d[1:] ** 2 - d[0] ** 2 - (s[1:] ** 2).sum(axis=1) + (s[0] ** 2).sum()
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > CONDITION_LIMIT:
        raise DegenerateTransmitters("transmitters do not span the space")
    r = np.linalg.lstsq(A, b, rcond=None)[0]

    def cost(x):
        return float(np.sum((np.linalg.norm(x - s, axis=1) - d) ** 2))

    c = cost(r)
    for _ in range(gn_iters):
        diff = r - s
        dist = np.linalg.norm(diff, axis=1)
        keep = dist > 1e-12
        if not np.any(keep):
            break
        J = diff[keep] / dist[keep, None]
        res = dist[keep] - d[keep]
        step = np.linalg.lstsq(J, -res, rcond=None)[0]
        trial = r + step
        ct = cost(trial)
        if ct >= c:
            break
        r, c = trial, ct
        if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(r)):
            break
    return r


@dataclass(frozen=True)
class LMOptions:
    initial_damping: float = 1e-3
    max_iter: int = 100
    rel_tol: float = 1e-12


def range_cost(receivers, offsets, f: PseudorangeMatrix) -> float:
    """Sum of squared ``||r_i - s_j|| - (f_ij - o_j)`` over all measurements."""
    res = distance_matrix(receivers, f.transmitters) - (f.values - np.asarray(offsets)[None, :])
    return float(np.sum(res**2))


def _lm_residuals_and_jacobian(params, f: PseudorangeMatrix):
    m, n, K = f.m, f.n, f.dim
    r = params[: m * K].reshape(m, K)
    o = params[m * K:]
    diff = r[:, None, :] - f.transmitters[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    res = (dist - (f.values - o[None, :])).ravel()
    J = np.zeros((m * n, m * K + n))
    unit = np.divide(diff, dist[..., None], out=np.zeros_like(diff), where=dist[..., None] > 0)
    rows = np.arange(m * n)
    ii, jj = np.divmod(rows, n)
    for k in range(K):
        J[rows, ii * K + k] = unit[ii, jj, k]
    J[rows, m * K + jj] = 1.0
    return res, J


def refine_lm(initial: MomSolution, f: PseudorangeMatrix, options: LMOptions = LMOptions()
              ) -> MomSolution:
    """Levenberg-Marquardt on all receivers and offsets (damped normal equations)."""
    r0 = np.asarray(initial.receivers, dtype=float)
    o0 = np.asarray(initial.offsets, dtype=float)
    if r0.shape != (f.m, f.dim) or o0.shape != (f.n,):
        raise ParameterError("initial solution does not match the measurement shape")
    x = np.concatenate([r0.ravel(), o0])
    res, J = _lm_residuals_and_jacobian(x, f)
    cost = float(res @ res)
    history = [cost]
    lam = options.initial_damping
    eye = np.eye(len(x))
    it = 0
    for it in range(1, options.max_iter + 1):
        g = J.T @ res
        JtJ = J.T @ J
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(JtJ + lam * eye, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = x + step
            tres, tJ = _lm_residuals_and_jacobian(trial, f)
            tcost = float(tres @ tres)
            if tcost < cost:
                improved = True
                break
            lam *= 10
        if not improved:
            break
        change = (cost - tcost) / max(cost, np.finfo(float).tiny)
        x, res, J, cost = trial, tres, tJ, tcost
        history.append(cost)
        lam /= 10
        if change < options.rel_tol:
            break
    receivers = x[: f.m * f.dim].reshape(f.m, f.dim)
    offsets = x[f.m * f.dim:]
    meta = dict(initial.metadata)
    meta.update({"lm_iterations": it, "lm_cost_history": history, "lm_cost": cost})
    return MomSolution.scored(receivers, offsets, f, meta)


@dataclass(frozen=True)
class PipelineOptions:
    restarts: int = 5
    seed: int = 0
    lm: LMOptions = field(default_factory=LMOptions)
    prune_infeasible: bool = False


def subminimal_for(m: int, n: int, dim: int) -> SubminimalConfig:
    """Subminimal configuration used to bootstrap an ``m``r/``n``s network."""
    if dim == 2:
        options = [SubminimalConfig.S3R4S_2D, SubminimalConfig.S2R5S_2D]
    else:
        options = [SubminimalConfig.S4R5S_3D, SubminimalConfig.S2R7S_3D]
    for sub in options:
        if m >= sub.m and n >= sub.n:
            return sub
    raise ParameterError(f"{m}r/{n}s in {dim}D is too small for any subminimal solver")


def extend_solution(core: MomSolution, f: PseudorangeMatrix, receivers, transmitters
                    ) -> MomSolution:
    """Complete a solution on a receiver/transmitter subset to the whole network.

    Offsets of the remaining transmitters are averaged over the solved
    receivers; the remaining receivers are then trilaterated against every
    transmitter.
    """
    receivers = list(receivers)
    transmitters = list(transmitters)
    offsets = np.full(f.n, np.nan)
    offsets[transmitters] = core.offsets
    f_rows = f.subset(receivers=receivers)
    for j in range(f.n):
        if j not in transmitters:
            offsets[j] = recover_extra_offset(core, f_rows, j)
    positions = np.full((f.m, f.dim), np.nan)
    positions[receivers] = core.receivers
    for i in range(f.m):
        if i not in receivers:
            # LM absorbs small negative distances caused by noise
            positions[i] = trilaterate_receiver(f.transmitters, offsets, f.values[i], f.dim,
                                                negative_tol=np.inf)
    return MomSolution.scored(positions, offsets, f, dict(core.metadata))


def solve_overdetermined(f: PseudorangeMatrix, cfg: TrackerConfig = TrackerConfig(),
                         options: PipelineOptions = PipelineOptions()) -> MomSolution:
    """Bootstrap from a subminimal subset, extend to all nodes, then refine with LM.

    The first attempt uses the leading receivers and transmitters; further
    attempts draw random subsets. The attempt with the lowest refined
    residual wins.
    """
    cls = classify(f.m, f.n, f.dim)
    if cls.kind is Determinacy.UNDERDETERMINED:
        raise ParameterError(
            f"{f.m}r/{f.n}s in {f.dim}D is underdetermined: excess constraint "
            f"mn - Km - n = {cls.excess} < 0"
        )
    sub = subminimal_for(f.m, f.n, f.dim)
    rng = np.random.default_rng(options.seed)
    subsets = [(list(range(sub.m)), list(range(sub.n)))]
    for _ in range(max(options.restarts, 1) - 1):
        ri = sorted(rng.choice(f.m, size=sub.m, replace=False).tolist())
        tj = rng.choice(f.n, size=sub.n, replace=False).tolist()
        subsets.append((ri, tj))

    best, attempts = None, []
    for k, (ri, tj) in enumerate(subsets):
        try:
            core = solve_subminimal(f.subset(ri, tj), cfg, options.prune_infeasible)
            initial = extend_solution(core, f, ri, tj)
            refined = refine_lm(initial, f, options.lm)
        except (MomError, np.linalg.LinAlgError) as exc:
            attempts.append({"attempt": k, "receivers": ri, "transmitters": tj,
                             "error": f"{type(exc).__name__}: {exc}"})
            log.debug("subset attempt %d failed: %s", k, exc)
            continue
        refined.metadata.update({"attempt": k, "subset_receivers": ri,
                                 "subset_transmitters": tj,
                                 "initial_residual": initial.residual,
                                 "initial_cost": range_cost(initial.receivers, initial.offsets, f)})
        attempts.append({"attempt": k, "receivers": ri, "transmitters": tj,
                         "residual": refined.residual})
        if best is None or refined.metadata["lm_cost"] < best.metadata["lm_cost"]:
            best = refined
    if best is None:
        raise SolveFailed(f"all {len(subsets)} subset attempts failed", attempts)
    best.metadata["attempts"] = attempts
    return best

