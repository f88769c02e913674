"""Total-degree homotopy continuation with the gamma trick.

All paths of a solve are tracked together: every loop iteration attempts
one predictor-corrector step for each still-active path, with per-path
parameters ``t`` and step size ``h``. Paths never interact, so the result
of a path does not depend on which other paths share its batch.
"""

from __future__ import annotations

import cmath
import enum
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError
from .polynomial import CompiledSystem, MultiPoly, PolySystem, homogenize

log = logging.getLogger(__name__)

# the projective patch a . X = 1 is redrawn (up to PATCH_DRAWS times) while
# some start root has |a . X| / |X| below PATCH_MIN_ALIGNMENT
PATCH_DRAWS = 20
PATCH_MIN_ALIGNMENT = 1e-2


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-7
    newton_tol: float = 1e-10
    max_newton_iters: int = 5
    max_steps: int = 10000
    divergence_norm: float = 1e8
    gamma: complex | None = None
    seed: int | None = None
    predictor: str = "rk4"
    # relative Newton tolerance accepted while t > 0
    corrector_tol: float = 1e-8
    corrector_iters: int = 3
    step_growth: float = 1.5
    successes_to_grow: int = 3
    max_step: float = 0.25
    # rounds of re-tracking, with tighter steps, for paths that landed on the same root
    retrack_rounds: int = 2
    dedup_tol: float = 1e-6
    reality_tol: float = 1e-8
    singular_cond: float = 1e12
    # track on a random affine patch of projective space; remote finite roots
    # stay well scaled and roots at infinity are recognized by x0 ~ 0
    projective: bool = True
    # converged endpoints beyond this norm are roots at infinity: rounding in
    # the coefficients splits a double root at infinity into finite roots of
    # norm about 1/sqrt(eps) ~ 7e7
    infinity_norm: float = 1e7

    def __post_init__(self):
        if not 0 < self.min_step < self.initial_step < 1:
            raise ParameterError("need 0 < min_step < initial_step < 1")
        if self.gamma is not None and abs(abs(self.gamma) - 1) > 1e-12:
            raise ParameterError(f"gamma must have unit modulus, got |gamma|={abs(self.gamma)}")
        if self.predictor not in ("euler", "rk4"):
            raise ParameterError(f"unknown predictor {self.predictor!r}")
        if not 0 < self.infinity_norm <= self.divergence_norm:
            raise ParameterError("need 0 < infinity_norm <= divergence_norm")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def resolved_gamma(self, rng: np.random.Generator | None = None) -> complex:
        if self.gamma is not None:
            return complex(self.gamma)
        rng = rng if rng is not None else self.rng()
        return cmath.exp(2j * np.pi * rng.uniform())


class PathStatus(enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    STEP_FAILURE = "step_failure"


@dataclass
class PathResult:
    """Outcome of one path.

    ``final_residual`` is the size of the last Newton correction at t = 0,
    relative to nothing (an absolute step length); ``target_residual`` is the
    max-norm of the target system at the endpoint.
    """

    status: PathStatus
    endpoint: np.ndarray
    steps_taken: int
    final_residual: float
    target_residual: float = float("nan")
    condition: float = float("nan")
    t_final: float = 0.0


@dataclass
class SolutionSet:
    all_solutions: list[np.ndarray]
    real_solutions: list[np.ndarray]
    path_stats: dict[str, int] = field(default_factory=dict)
    paths: list[PathResult] = field(default_factory=list, repr=False)

    def stats_json(self) -> dict:
        return {
            "total": len(self.all_solutions),
            "real": len(self.real_solutions),
            **{k: int(v) for k, v in self.path_stats.items()},
        }


def total_degree_start(system: PolySystem, seed=None,
                       rng: np.random.Generator | None = None
                       ) -> tuple[PolySystem, list[np.ndarray]]:
    """Start system ``c_k x_k^d_k - b_k`` and all of its prod(d_k) roots."""
    if not system.is_square():
        raise ParameterError(f"system is not square: {len(system)} equations, {system.nvars} variables")
    degrees = system.degrees()
    if any(d < 0 for d in degrees):
        raise ParameterError("system contains a zero polynomial")
    if any(d == 0 for d in degrees):
        raise ParameterError("system contains a nonzero constant polynomial and has no roots")
    if rng is None:
        rng = np.random.default_rng(seed)
    n = system.nvars
    c = np.exp(2j * np.pi * rng.uniform(size=n))
    b = np.exp(2j * np.pi * rng.uniform(size=n))
    polys = []
    for k, d in enumerate(degrees):
        exp = [0] * n
        exp[k] = d
        polys.append(MultiPoly(n, {tuple(exp): c[k], (0,) * n: -b[k]}))
    per_var = []
    for k, d in enumerate(degrees):
        base = (b[k] / c[k]) ** (1.0 / d)
        per_var.append([base * cmath.exp(2j * np.pi * l / d) for l in range(d)])
    roots = [np.array(r, dtype=complex) for r in itertools.product(*per_var)]
    return PolySystem(polys, nvars=n), roots


def _batched_solve(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve A[p] x[p] = b[p]; returns (x, ok) with ok False for singular rows."""
    try:
        return np.linalg.solve(A, b[..., None])[..., 0], np.ones(len(A), dtype=bool)
    except np.linalg.LinAlgError:
        x = np.zeros_like(b)
        ok = np.ones(len(A), dtype=bool)
        for p in range(len(A)):
            try:
                x[p] = np.linalg.solve(A[p], b[p])
            except np.linalg.LinAlgError:
                ok[p] = False
        return x, ok


class _Homotopy:
    """H(x, t) = (1 - t) F(x) + gamma t G(x) evaluated on batches."""

    def __init__(self, target: PolySystem, start: PolySystem, gamma: complex):
        self.F = CompiledSystem(target)
        self.G = CompiledSystem(start)
        self.gamma = gamma

    def eval(self, x, t):
        F, JF = self.F.values_and_jacobians(x)
        G, JG = self.G.values_and_jacobians(x)
        s = (1.0 - t)[:, None]
        g = self.gamma * t[:, None]
        H = s * F + g * G
        Hx = s[..., None] * JF + g[..., None] * JG
        Ht = self.gamma * G - F
        return H, Hx, Ht

    def tangent(self, x, t):
        """dx/dt along the path."""
        _, Hx, Ht = self.eval(x, t)
        return _batched_solve(Hx, -Ht)

    def newton(self, x, t, tol, iters, extended=False):
        """Newton at fixed t. Returns (x, converged, last_step_norm).

        ``extended`` evaluates the residual in long double; only meaningful
        at t = 0 where H is the target alone.
        """
        x = x.copy()
        done = np.zeros(len(x), dtype=bool)
        bad = np.zeros(len(x), dtype=bool)
        last = np.full(len(x), np.inf)
        for _ in range(iters):
            idx = np.flatnonzero(~done & ~bad)
            if idx.size == 0:
                break
            H, Hx, _ = self.eval(x[idx], t[idx])
            if extended:
                H = self.F.values(x[idx], extended=True).astype(complex)
            dx, ok = _batched_solve(Hx, -H)
            x[idx] += dx
            norms = np.linalg.norm(dx, axis=1)
            prev = last[idx]
            last[idx] = norms
            scale = 1.0 + np.linalg.norm(x[idx], axis=1)
            conv = ok & (norms <= tol * scale)
            # a growing correction means we are not in the basin
            diverging = ~ok | ~np.isfinite(norms) | (np.isfinite(prev) & (norms > 0.5 * prev) & ~conv)
            done[idx[conv]] = True
            bad[idx[diverging]] = True
        return x, done, last


def _affine_norms(x: np.ndarray, homogeneous: bool) -> np.ndarray:
    if not homogeneous:
        return np.linalg.norm(x, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.linalg.norm(x[:, :-1], axis=1) / np.abs(x[:, -1])


def row_scaled_condition(J: np.ndarray) -> np.ndarray:
    """Condition numbers of Jacobians after scaling every row to unit norm.

    Unlike the raw condition number this does not depend on how the
    individual equations happen to be scaled.
    """
    norms = np.linalg.norm(J, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(J / norms)
    return np.where(np.all(norms[..., 0] > 0, axis=-1), cond, np.inf)


def track_paths(target: PolySystem, start_sys: PolySystem, start_roots,
                cfg: TrackerConfig = TrackerConfig(), gamma: complex | None = None,
                homogeneous: bool = False) -> list[PathResult]:
    """Track every start root from t = 1 to t = 0.

    With ``homogeneous`` the last variable is the homogenizing coordinate
    and divergence is judged on the affine point ``x[:-1] / x[-1]``.
    """
    if not target.is_square() or target.nvars != start_sys.nvars:
        raise ParameterError("target and start systems must be square with matching variables")
    x = np.array(start_roots, dtype=complex).reshape(-1, target.nvars)
    P = len(x)
    if gamma is None:
        gamma = cfg.resolved_gamma()
    hom = _Homotopy(target, start_sys, gamma)

    start_res = np.abs(hom.G.values(x)).max(axis=1) if P else np.zeros(0)
    if np.any(start_res > 1e-8 * (1 + np.abs(x).max(axis=1))):
        raise ParameterError("start roots do not satisfy the start system")

    t = np.ones(P)
    h = np.full(P, cfg.initial_step)
    steps = np.zeros(P, dtype=int)
    wins = np.zeros(P, dtype=int)
    active = np.ones(P, dtype=bool)
    status = np.full(P, None, dtype=object)
    last_step = np.full(P, np.inf)

    while True:
        idx = np.flatnonzero(active & (t > 0))
        if idx.size == 0:
            break
        xi, ti, hi = x[idx], t[idx], h[idx]
        tn = np.maximum(ti - hi, 0.0)
        dt = tn - ti
        xp, ok = _predict(hom, xi, ti, dt, cfg.predictor)
        xc, conv, _ = hom.newton(xp, tn, cfg.corrector_tol, cfg.corrector_iters)
        conv &= ok & np.all(np.isfinite(xc), axis=1)
        steps[idx] += 1

        acc = idx[conv]
        x[acc] = xc[conv]
        t[acc] = tn[conv]
        wins[acc] += 1
        grow = acc[wins[acc] >= cfg.successes_to_grow]
        h[grow] = np.minimum(h[grow] * cfg.step_growth, cfg.max_step)
        wins[grow] = 0

        rej = idx[~conv]
        h[rej] *= 0.5
        wins[rej] = 0

        norms = _affine_norms(x[idx], homogeneous)
        diverged = idx[~(norms <= cfg.divergence_norm)]
        status[diverged] = PathStatus.DIVERGED
        active[diverged] = False
        # min_step is relative to the remaining t so that paths to remote roots,
        # which only settle as t -> 0, can keep refining
        failed = idx[active[idx] & ((h[idx] < cfg.min_step * t[idx]) | (steps[idx] >= cfg.max_steps))]
        status[failed] = PathStatus.STEP_FAILURE
        active[failed] = False

    # endgame-free finish: polish the t = 0 endpoints on the target alone
    fin = np.flatnonzero(active)
    results_res = np.full(P, np.nan)
    cond = np.full(P, np.nan)
    if fin.size:
        xf, conv, last = hom.newton(x[fin], np.zeros(fin.size), cfg.newton_tol,
                                    cfg.max_newton_iters, extended=True)
        x[fin] = xf
        last_step[fin] = last
        F, JF = hom.F.values_and_jacobians(xf)
        results_res[fin] = np.abs(F).max(axis=1)
        cond[fin] = row_scaled_condition(JF)
        scale = 1.0 + np.linalg.norm(xf, axis=1)
        good = conv & (last <= cfg.newton_tol * scale)
        status[fin[good]] = PathStatus.CONVERGED
        status[fin[~good]] = PathStatus.STEP_FAILURE

    return [
        PathResult(status[p], x[p].copy(), int(steps[p]), float(last_step[p]),
                   float(results_res[p]), float(cond[p]), float(t[p]))
        for p in range(P)
    ]


def _predict(hom: _Homotopy, x, t, dt, kind):
    if kind == "euler":
        k1, ok = hom.tangent(x, t)
        return x + dt[:, None] * k1, ok
    k1, ok1 = hom.tangent(x, t)
    k2, ok2 = hom.tangent(x + 0.5 * dt[:, None] * k1, t + 0.5 * dt)
    k3, ok3 = hom.tangent(x + 0.5 * dt[:, None] * k2, t + 0.5 * dt)
    k4, ok4 = hom.tangent(x + dt[:, None] * k3, t + dt)
    xp = x + dt[:, None] * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return xp, ok1 & ok2 & ok3 & ok4


def track_path(target: PolySystem, start_sys: PolySystem, start_root,
               cfg: TrackerConfig = TrackerConfig(), gamma: complex | None = None) -> PathResult:
    return track_paths(target, start_sys, [start_root], cfg, gamma)[0]


def normalize_system(system: PolySystem) -> PolySystem:
    """Scale each polynomial to unit max coefficient; roots are unchanged."""
    return PolySystem([p.scaled(1.0 / p.max_abs_coeff()) for p in system.polys], nvars=system.nvars)


def deduplicate(points: list[np.ndarray], tol: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for x in points:
        scale = max(1.0, float(np.linalg.norm(x)))
        if all(np.linalg.norm(x - y) >= tol * scale for y in kept):
            kept.append(x)
    return kept


def is_real(x: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.abs(x.imag) < tol * (1.0 + np.abs(x.real))))


def _tightened(cfg: TrackerConfig) -> TrackerConfig:
    return replace(cfg, initial_step=max(cfg.initial_step / 5, 2 * cfg.min_step),
                   max_step=cfg.max_step / 5, corrector_iters=2)


def _endpoint_clusters(paths: list[PathResult], tol: float) -> list[list[int]]:
    """Groups (of size > 1) of converged paths sharing an endpoint."""
    idx = [k for k, p in enumerate(paths) if p.status is PathStatus.CONVERGED]
    groups: list[list[int]] = []
    for k in idx:
        x = paths[k].endpoint
        scale = max(1.0, float(np.linalg.norm(x)))
        for g in groups:
            if np.linalg.norm(x - paths[g[0]].endpoint) < tol * scale:
                g.append(k)
                break
        else:
            groups.append([k])
    return [g for g in groups if len(g) > 1]


def projectivize(target: PolySystem, start: PolySystem, start_roots, rng: np.random.Generator
                 ) -> tuple[PolySystem, PolySystem, list[np.ndarray]]:
    """Homogenize both systems and append the random patch ``a . X = 1``.

    The homogenizing variable x0 is appended last; affine roots map to
    ``(x, 1) / (a . (x, 1))``.
    """
    n = target.nvars
    lifted = np.column_stack([np.asarray(start_roots, dtype=complex).reshape(-1, n),
                              np.ones(len(start_roots))])
    scale = np.linalg.norm(lifted, axis=1)
    # a patch nearly through a start root lifts it to a huge point; redraw
    for _ in range(PATCH_DRAWS):
        a = np.exp(2j * np.pi * rng.uniform(size=n + 1))
        if len(lifted) == 0 or np.min(np.abs(lifted @ a) / scale) >= PATCH_MIN_ALIGNMENT:
            break
    patch = MultiPoly(n + 1, {
        **{tuple(int(i == k) for i in range(n + 1)): a[k] for k in range(n + 1)},
        (0,) * (n + 1): -1.0,
    })
    degrees = target.degrees()
    ptarget = PolySystem([homogenize(p) for p in target.polys] + [patch], nvars=n + 1)
    pstart = PolySystem([homogenize(g, d) for g, d in zip(start.polys, degrees)] + [patch],
                        nvars=n + 1)
    roots = []
    for z in start_roots:
        X = np.append(np.asarray(z, dtype=complex), 1.0)
        roots.append(X / (a @ X))
    return ptarget, pstart, roots


def _dehomogenize(paths: list[PathResult], infinity_norm: float) -> list[PathResult]:
    """Map projective endpoints to affine ones.

    A converged endpoint whose affine point lies beyond ``infinity_norm``
    is taken to be a root at infinity.
    """
    out = []
    for p in paths:
        X = p.endpoint
        x0 = X[-1]
        far = not _affine_norms(X[None, :], True)[0] <= infinity_norm
        if p.status is PathStatus.CONVERGED and far:
            out.append(replace(p, status=PathStatus.DIVERGED, endpoint=X[:-1].copy()))
        elif abs(x0) > 0:
            out.append(replace(p, endpoint=X[:-1] / x0))
        else:
            out.append(replace(p, endpoint=X[:-1].copy()))
    return out


def solve_system(target: PolySystem, cfg: TrackerConfig = TrackerConfig()) -> SolutionSet:
    """Solve a square system; returns finite nonsingular roots and path stats.

    Two paths ending on the same root means one of them jumped; all paths of
    such a cluster are tracked again with smaller steps.
    """
    if not target.is_square():
        raise ParameterError(f"system is not square: {len(target)} equations, {target.nvars} variables")
    rng = cfg.rng()
    gamma = cfg.resolved_gamma(rng)
    scaled = normalize_system(target)
    start_sys, roots = total_degree_start(scaled, rng=rng)
    if cfg.projective:
        scaled, start_sys, roots = projectivize(scaled, start_sys, roots, rng)

        def track(rts, c):
            return _dehomogenize(track_paths(scaled, start_sys, rts, c, gamma, homogeneous=True),
                                 cfg.infinity_norm)
    else:
        def track(rts, c):
            return [
                replace(p, status=PathStatus.DIVERGED)
                if p.status is PathStatus.CONVERGED and np.linalg.norm(p.endpoint) > cfg.infinity_norm
                else p
                for p in track_paths(scaled, start_sys, rts, c, gamma)
            ]

    paths = track(roots, cfg)
    retracked = 0
    tight = cfg
    for _ in range(cfg.retrack_rounds):
        redo = sorted(k for g in _endpoint_clusters(paths, cfg.dedup_tol) for k in g)
        if not redo:
            break
        tight = _tightened(tight)
        again = track([roots[k] for k in redo], tight)
        for k, p in zip(redo, again):
            paths[k] = p
        retracked += len(redo)

    stats = Counter(p.status.value for p in paths)
    stats["paths"] = len(paths)
    stats["retracked"] = retracked
    finite = []
    singular = 0
    for p in paths:
        if p.status is not PathStatus.CONVERGED:
            continue
        if not np.isfinite(p.condition) or p.condition > cfg.singular_cond:
            singular += 1
            continue
        finite.append(p.endpoint)
    stats["singular"] = singular
    # sort for an order-independent dedup result
    finite.sort(key=lambda x: tuple(np.round(np.concatenate([x.real, x.imag]), 6)))
    sols = deduplicate(finite, cfg.dedup_tol)
    stats["duplicates"] = len(finite) - len(sols)
    real = [s.real.copy() for s in sols if is_real(s, cfg.reality_tol)]
    return SolutionSet(sols, real, dict(stats), paths)
