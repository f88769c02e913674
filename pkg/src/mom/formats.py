"""File formats: JSON network instances and CSV pseudorange tables.

CSV layout (2D shown; 3D adds a ``z`` column)::

    transmitter_id,x,y
    0,1.25,-3.5
    1,4.0,2.75
    ...
    receiver_id,0,1,...
    0,12.31,8.02,...
    1,...

The second header lists the transmitter ids in column order and must match
the transmitter block. Blank lines are ignored.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .network import NetworkInstance, PseudorangeMatrix
from .solution import MomSolution

_COORDS = ("x", "y", "z")


def instance_to_json(inst: NetworkInstance) -> dict:
    return {
        "dim": inst.dim,
        "receivers": inst.receivers.tolist(),
        "transmitters": inst.transmitters.tolist(),
        "offsets": inst.offsets.tolist(),
    }


def instance_from_json(data: dict) -> NetworkInstance:
    try:
        return NetworkInstance(int(data["dim"]), data["receivers"], data["transmitters"],
                               data["offsets"])
    except KeyError as exc:
        raise ParseError(f"instance JSON is missing key {exc.args[0]!r}") from None


def save_instance(inst: NetworkInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst), indent=2) + "\n")


def load_instance(path) -> NetworkInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return instance_from_json(data)


def solution_to_json(sol: MomSolution, transmitters=None) -> dict:
    out = sol.to_json()
    if transmitters is not None:
        out["transmitters"] = np.asarray(transmitters).tolist()
    return out


def pseudoranges_to_csv(f: PseudorangeMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["transmitter_id", *_COORDS[: f.dim]])
    for j, s in enumerate(f.transmitters):
        w.writerow([j, *(repr(float(c)) for c in s)])
    w.writerow(["receiver_id", *range(f.n)])
    for i, row in enumerate(f.values):
        w.writerow([i, *(repr(float(v)) for v in row)])
    return buf.getvalue()


def save_pseudoranges(f: PseudorangeMatrix, path) -> None:
    Path(path).write_text(pseudoranges_to_csv(f))


def _number(text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", line)
    return value


def parse_pseudoranges(text: str) -> PseudorangeMatrix:
    rows = [(k + 1, r) for k, r in enumerate(csv.reader(io.StringIO(text)))]
    rows = [(k, [c.strip() for c in r]) for k, r in rows if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty pseudorange file", 1)
    line, header = rows[0]
    if header[0] != "transmitter_id":
        raise ParseError("expected header starting with 'transmitter_id'", line)
    coords = tuple(header[1:])
    if coords not in (_COORDS[:2], _COORDS[:3]):
        raise ParseError(f"transmitter header must be x,y or x,y,z, got {','.join(coords)}", line)
    dim = len(coords)

    ids, positions = [], []
    k = 1
    while k < len(rows) and rows[k][1][0] != "receiver_id":
        line, row = rows[k]
        if len(row) != dim + 1:
            raise ParseError(f"expected {dim + 1} fields, got {len(row)}", line)
        ids.append(row[0])
        positions.append([_number(c, line) for c in row[1:]])
        k += 1
    if k == len(rows):
        raise ParseError("missing 'receiver_id' header of the measurement block", rows[-1][0])
    if not ids:
        raise ParseError("no transmitters listed", rows[k][0])

    line, header = rows[k]
    if header[1:] != ids:
        raise ParseError("measurement columns do not match the transmitter ids", line)
    values = []
    for line, row in rows[k + 1:]:
        if len(row) != len(ids) + 1:
            raise ParseError(f"expected {len(ids) + 1} fields, got {len(row)}", line)
        values.append([_number(c, line) for c in row[1:]])
    if not values:
        raise ParseError("no receiver rows", line)
    return PseudorangeMatrix(dim, np.array(values), np.array(positions))


def load_pseudoranges(path) -> PseudorangeMatrix:
    return parse_pseudoranges(Path(path).read_text())
