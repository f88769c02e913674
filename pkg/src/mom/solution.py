"""Solution container shared by the reduction and solver layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import PseudorangeMatrix, range_residuals

FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class MomSolution:
    """Receiver positions and transmitter offsets with fit diagnostics.

    ``residual`` is the RMS of ``||r_i - s_j||^2 - (f_ij - o_j)^2`` over the
    measurements the solution was scored against; ``feasible`` records
    whether every ``f_ij - o_j`` is nonnegative up to tolerance.
    """

    receivers: np.ndarray
    offsets: np.ndarray
    residual: float = float("nan")
    feasible: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    @classmethod
    def scored(cls, receivers, offsets, f: PseudorangeMatrix, metadata=None,
               feasibility_tol: float = FEASIBILITY_TOL) -> MomSolution:
        receivers = np.real_if_close(np.asarray(receivers)).astype(float)
        offsets = np.real_if_close(np.asarray(offsets)).astype(float)
        return cls(
            receivers=receivers,
            offsets=offsets,
            residual=rms_residual(receivers, offsets, f),
            feasible=is_feasible(offsets, f, feasibility_tol),
            metadata=dict(metadata or {}),
        )

    def rescored(self, f: PseudorangeMatrix, **extra_meta) -> MomSolution:
        meta = dict(self.metadata)
        meta.update(extra_meta)
        return MomSolution.scored(self.receivers, self.offsets, f, meta)

    def to_json(self) -> dict:
        return {
            "dim": int(self.receivers.shape[1]),
            "receivers": self.receivers.tolist(),
            "offsets": self.offsets.tolist(),
            "residual": float(self.residual),
            "feasible": bool(self.feasible),
        }


def rms_residual(receivers, offsets, f: PseudorangeMatrix) -> float:
    res = range_residuals(receivers, offsets, f)
    return float(np.sqrt(np.mean(res**2)))


def is_feasible(offsets, f: PseudorangeMatrix, tol: float = FEASIBILITY_TOL) -> bool:
    scale = 1.0 + float(np.max(np.abs(f.values)))
    return bool(np.all(f.values - np.asarray(offsets)[None, :] >= -tol * scale))
