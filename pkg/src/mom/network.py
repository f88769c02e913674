"""Network geometry, synthetic instances and solvability classification.

Signal speed is normalized to 1, so offsets and pseudoranges share the
length unit of the positions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

SCENE_HALF_WIDTH = 10.0


def _check_dim(dim: int) -> None:
    if dim not in (2, 3):
        raise ParameterError(f"dimension must be 2 or 3, got {dim!r}")


class Determinacy(enum.Enum):
    UNDERDETERMINED = "underdetermined"
    MINIMAL = "minimal"
    OVERDETERMINED = "overdetermined"


@dataclass(frozen=True)
class SolvabilityClass:
    kind: Determinacy
    excess: int


def excess_constraint(m: int, n: int, dim: int) -> int:
    """Equations minus unknowns: ``m*n - dim*m - n``."""
    return m * n - dim * m - n


def classify(m: int, n: int, dim: int) -> SolvabilityClass:
    _check_dim(dim)
    if m < 1 or n < 1:
        raise ParameterError(f"need at least one receiver and transmitter, got m={m}, n={n}")
    c = excess_constraint(m, n, dim)
    if c < 0:
        kind = Determinacy.UNDERDETERMINED
    elif c == 0:
        kind = Determinacy.MINIMAL
    else:
        kind = Determinacy.OVERDETERMINED
    return SolvabilityClass(kind, c)


def _as_points(arr, dim: int, what: str) -> np.ndarray:
    pts = np.array(arr, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ParameterError(f"{what} must have shape (count, {dim}), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ParameterError(f"{what} contain non-finite coordinates")
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True)
class NetworkInstance:
    """Ground truth: receiver and transmitter positions plus transmitter offsets."""

    dim: int
    receivers: np.ndarray
    transmitters: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        _check_dim(self.dim)
        rec = _as_points(self.receivers, self.dim, "receivers")
        tra = _as_points(self.transmitters, self.dim, "transmitters")
        off = np.array(self.offsets, dtype=float).reshape(-1)
        if len(rec) < 1 or len(tra) < 1:
            raise ParameterError("need at least one receiver and one transmitter")
        if off.shape != (len(tra),):
            raise ParameterError(f"expected {len(tra)} offsets, got {off.shape[0]}")
        off.setflags(write=False)
        object.__setattr__(self, "receivers", rec)
        object.__setattr__(self, "transmitters", tra)
        object.__setattr__(self, "offsets", off)

    @property
    def m(self) -> int:
        return len(self.receivers)

    @property
    def n(self) -> int:
        return len(self.transmitters)

    def translated(self, shift) -> NetworkInstance:
        shift = np.asarray(shift, dtype=float)
        return NetworkInstance(self.dim, self.receivers + shift, self.transmitters + shift, self.offsets)


@dataclass(frozen=True)
class PseudorangeMatrix:
    """Measured pseudoranges ``values[i, j]`` for receiver i, transmitter j."""

    dim: int
    values: np.ndarray
    transmitters: np.ndarray

    def __post_init__(self):
        _check_dim(self.dim)
        tra = _as_points(self.transmitters, self.dim, "transmitters")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(tra):
            raise ParameterError(
                f"pseudorange matrix shape {vals.shape} does not match {len(tra)} transmitters"
            )
        if vals.shape[0] < 1:
            raise ParameterError("pseudorange matrix has no receivers")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("pseudorange matrix contains non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "transmitters", tra)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def subset(self, receivers=None, transmitters=None) -> PseudorangeMatrix:
        """Restrict to the given receiver and transmitter indices (in that order)."""
        ri = np.arange(self.m) if receivers is None else np.asarray(receivers, dtype=int)
        tj = np.arange(self.n) if transmitters is None else np.asarray(transmitters, dtype=int)
        return PseudorangeMatrix(self.dim, self.values[np.ix_(ri, tj)], self.transmitters[tj])


def distance_matrix(receivers: np.ndarray, transmitters: np.ndarray) -> np.ndarray:
    diff = np.asarray(receivers)[:, None, :] - np.asarray(transmitters)[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def random_instance(m: int, n: int, dim: int, seed: int | None = None,
                    rng: np.random.Generator | None = None) -> NetworkInstance:
    """Positions uniform on [-10, 10]^dim, offsets standard normal."""
    _check_dim(dim)
    if m < 1 or n < 1:
        raise ParameterError(f"need m, n >= 1, got m={m}, n={n}")
    if rng is None:
        rng = np.random.default_rng(seed)
    receivers = rng.uniform(-SCENE_HALF_WIDTH, SCENE_HALF_WIDTH, size=(m, dim))
    transmitters = rng.uniform(-SCENE_HALF_WIDTH, SCENE_HALF_WIDTH, size=(n, dim))
    offsets = rng.standard_normal(n)
    return NetworkInstance(dim, receivers, transmitters, offsets)


def synthesize_pseudoranges(inst: NetworkInstance) -> PseudorangeMatrix:
    f = distance_matrix(inst.receivers, inst.transmitters) + inst.offsets[None, :]
    return PseudorangeMatrix(inst.dim, f, inst.transmitters)


def range_residuals(receivers, offsets, f: PseudorangeMatrix) -> np.ndarray:
    """Residuals ``||r_i - s_j||^2 - (f_ij - o_j)^2`` for every measurement."""
    d2 = distance_matrix(receivers, f.transmitters) ** 2
    return d2 - (f.values - np.asarray(offsets)[None, :]) ** 2


def add_noise(f: PseudorangeMatrix, sigma: float, seed: int | None = None,
              rng: np.random.Generator | None = None) -> PseudorangeMatrix:
    """Add i.i.d. N(0, sigma^2) to every pseudorange."""
    if sigma < 0 or not np.isfinite(sigma):
        raise ParameterError(f"sigma must be a finite nonnegative number, got {sigma}")
    if sigma == 0:
        return f
    if rng is None:
        rng = np.random.default_rng(seed)
    noisy = f.values + rng.normal(0.0, sigma, size=f.values.shape)
    return PseudorangeMatrix(f.dim, noisy, f.transmitters)
