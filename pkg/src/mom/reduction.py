"""Elimination of receivers and extra offsets for the minimal configurations.

For receiver i, subtracting the range equation of the anchor transmitter
from the one of transmitter j gives

    -2 (s_j - s_a)^T r_i = (f_ij - o_j)^2 - (f_ia - o_a)^2 - |s_j|^2 + |s_a|^2

which is linear in r_i. Using ``dim`` such equations every receiver becomes
a quadratic polynomial in the ``dim + 1`` retained offsets, and the anchor
range equations turn into quartic polynomials in those offsets alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateMeasurement, DegenerateTransmitters, ParameterError
from .network import PseudorangeMatrix
from .polynomial import MultiPoly, PolySystem, evaluate
from .solution import MomSolution

CONDITION_LIMIT = 1e8
MEASUREMENT_DEGENERACY = 1e-10
PRUNE_REL_TOL = 1e-14


class MinimalConfig(enum.Enum):
    """The four minimal node counts, with the reference statistics they reproduce."""

    M2R4S_2D = ("2r4s2d", 2, 4, 2, 24, (4, 9, 20), 0.05)
    M3R3S_2D = ("3r3s2d", 3, 3, 2, 28, (2, 7, 18), 0.13)
    M4R4S_3D = ("4r4s3d", 4, 4, 3, 92, (2, 4, 20), 0.6)
    M2R6S_3D = ("2r6s3d", 2, 6, 3, 48, (4, 7, 20), 3.0)

    def __init__(self, label, m, n, dim, total_solutions, real_stats, reference_time):
        self.label = label
        self.m = m
        self.n = n
        self.dim = dim
        self.total_solutions = total_solutions
        self.real_min, self.real_avg, self.real_max = real_stats
        self.reference_time = reference_time

    @property
    def nvars(self) -> int:
        return self.dim + 1

    @property
    def extra_transmitters(self) -> list[int]:
        """Transmitters whose offsets are eliminated linearly (2-receiver configs)."""
        return list(range(self.dim + 1, self.n))

    @classmethod
    def from_label(cls, label: str) -> MinimalConfig:
        for cfg in cls:
            if cfg.label == label.lower():
                return cfg
        raise ParameterError(f"unknown minimal configuration {label!r}")

    @classmethod
    def for_counts(cls, m: int, n: int, dim: int) -> MinimalConfig:
        for cfg in cls:
            if (cfg.m, cfg.n, cfg.dim) == (m, n, dim):
                return cfg
        raise ParameterError(f"{m}r/{n}s in {dim}D is not a minimal configuration")


@dataclass(frozen=True)
class ReceiverExpression:
    """Receiver coordinates as polynomials in the retained offsets."""

    coords: tuple[MultiPoly, ...]
    matrix: np.ndarray
    condition: float

    def evaluate(self, offsets) -> np.ndarray:
        return np.array([evaluate(c, offsets) for c in self.coords])


@dataclass(frozen=True)
class ReducedSystem:
    config: MinimalConfig
    system: PolySystem
    receiver_exprs: tuple[ReceiverExpression, ...]
    eliminated_offsets: tuple[MultiPoly, ...]
    retained_offset_ids: tuple[int, ...]
    measurements: PseudorangeMatrix

    def full_offsets(self, retained) -> np.ndarray:
        retained = np.asarray(retained, dtype=complex)
        extra = [evaluate(p, retained) for p in self.eliminated_offsets]
        return np.concatenate([retained, np.array(extra, dtype=complex)])


def elimination_matrix(transmitters: np.ndarray, eliminating: Sequence[int]) -> np.ndarray:
    """Rows ``-2 (s_j - s_a)`` for the non-anchor eliminating transmitters."""
    anchor = transmitters[eliminating[0]]
    return -2.0 * (transmitters[list(eliminating[1:])] - anchor)


def receiver_elimination(f: PseudorangeMatrix, eliminating_transmitters: Sequence[int]
                         ) -> list[ReceiverExpression]:
    """Express every receiver as a polynomial in the eliminating transmitters' offsets.

    Variable k of the returned polynomials is the offset of
    ``eliminating_transmitters[k]``; entry 0 is the anchor.
    """
    dim = f.dim
    elim = list(eliminating_transmitters)
    if len(elim) != dim + 1:
        raise ParameterError(f"need {dim + 1} eliminating transmitters in {dim}D, got {len(elim)}")
    s = f.transmitters
    A = elimination_matrix(s, elim)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateTransmitters(
            f"eliminating transmitters {elim} are degenerate (condition number {cond:.3g})"
        )
    A_inv = np.linalg.inv(A)
    nv = dim + 1
    o = MultiPoly.variables(nv)
    a = elim[0]
    exprs = []
    for i in range(f.m):
        anchor_sq = (f.values[i, a] - o[0]) ** 2
        rhs = [
            (f.values[i, j] - o[k]) ** 2 - anchor_sq - float(s[j] @ s[j]) + float(s[a] @ s[a])
            for k, j in enumerate(elim[1:], start=1)
        ]
        coords = tuple(
            sum((rhs[c] * A_inv[row, c] for c in range(dim)), MultiPoly.zero(nv))
            for row in range(dim)
        )
        exprs.append(ReceiverExpression(coords, A, cond))
    return exprs


def offset_elimination(f: PseudorangeMatrix, recv_exprs: Sequence[ReceiverExpression],
                       extra_transmitter: int, anchor: int = 0) -> MultiPoly:
    """Solve the extra transmitter's offset from the two receivers' difference equation.

    Writing the linear receiver relation for the extra transmitter at both
    receivers and subtracting cancels every quadratic term, leaving
    ``-2 (f_2j - f_1j) o_j + f_2j^2 - f_1j^2`` equal to a polynomial in the
    retained offsets.
    """
    if f.m != 2 or len(recv_exprs) != 2:
        raise ParameterError("offset elimination needs exactly two receivers")
    j, a = extra_transmitter, anchor
    f1j, f2j = f.values[0, j], f.values[1, j]
    denom = 2.0 * (f2j - f1j)
    if abs(f2j - f1j) < MEASUREMENT_DEGENERACY * (1.0 + abs(f1j)):
        raise DegenerateMeasurement(
            f"receivers are equidistant in pseudorange from transmitter {j}"
        )
    nv = recv_exprs[0].coords[0].nvars
    o_a = MultiPoly.variable(nv, 0)
    s = f.transmitters
    direction = s[j] - s[a]
    r1, r2 = recv_exprs[0].coords, recv_exprs[1].coords
    proj = sum(((r2[c] - r1[c]) * float(direction[c]) for c in range(f.dim)), MultiPoly.zero(nv))
    numer = (f2j**2 - f1j**2 + 2.0 * proj
             - (f.values[1, a] - o_a) ** 2 + (f.values[0, a] - o_a) ** 2)
    return (numer * (1.0 / denom)).pruned(PRUNE_REL_TOL)


def _squared_distance(coords: Sequence[MultiPoly], point: np.ndarray) -> MultiPoly:
    nv = coords[0].nvars
    return sum(((c - float(x)) ** 2 for c, x in zip(coords, point)), MultiPoly.zero(nv))


def build_reduced_system(f: PseudorangeMatrix, config: MinimalConfig | str) -> ReducedSystem:
    if isinstance(config, str):
        config = MinimalConfig.from_label(config)
    if (f.m, f.n, f.dim) != (config.m, config.n, config.dim):
        raise ParameterError(
            f"{config.label} needs {config.m}r/{config.n}s in {config.dim}D, "
            f"got {f.m}r/{f.n}s in {f.dim}D"
        )
    dim = f.dim
    nv = config.nvars
    elim = list(range(dim + 1))
    recv = receiver_elimination(f, elim)
    s = f.transmitters
    o = MultiPoly.variables(nv)

    equations = [
        _squared_distance(r.coords, s[0]) - (f.values[i, 0] - o[0]) ** 2
        for i, r in enumerate(recv)
    ]
    eliminated = []
    for j in config.extra_transmitters:
        o_j = offset_elimination(f, recv, j)
        eliminated.append(o_j)
        equations.append((f.values[0, j] - o_j) ** 2 - _squared_distance(recv[0].coords, s[j]))

    system = PolySystem([eq.pruned(PRUNE_REL_TOL) for eq in equations], nvars=nv)
    return ReducedSystem(
        config=config,
        system=system,
        receiver_exprs=tuple(recv),
        eliminated_offsets=tuple(eliminated),
        retained_offset_ids=tuple(elim),
        measurements=f,
    )


def back_substitute(rs: ReducedSystem, offsets) -> MomSolution:
    """Recover receivers and the full offset vector from retained offsets."""
    offsets = np.asarray(offsets)
    if offsets.shape != (rs.config.nvars,):
        raise ParameterError(
            f"expected {rs.config.nvars} retained offsets, got shape {offsets.shape}"
        )
    receivers = np.array([r.evaluate(offsets) for r in rs.receiver_exprs])
    full = rs.full_offsets(offsets)
    return MomSolution.scored(receivers.real, full.real, rs.measurements)
