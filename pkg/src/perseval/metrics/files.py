"""File-backed distance matrices and token-distribution collections.

A distance-matrix file starts with a one-line JSON header naming the
metric and the id list. The payload is either raw row-major little-
endian float64 bytes following the header, or a "rows" key carried in a
single JSON object; both forms load identically. A distributions file
is line-oriented JSON, one {"id", "support", "mass"} object per text.
Loaders validate the format invariants and refuse violating files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, MissingIdError, ParseError
from .distributions import ProbabilityDistribution

_SYMMETRY_TOL = 1e-9


@dataclass
class DistanceMatrixFile:
    """Precomputed pairwise distances over a fixed id list."""

    metric: str
    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.ids)
        if len(set(self.ids)) != n:
            raise DataError("matrix ids must be unique")
        if self.values.shape != (n, n):
            raise DataError(
                f"matrix shape {self.values.shape} does not fit {n} ids"
            )
        if not np.allclose(self.values, self.values.T,
                           rtol=0.0, atol=_SYMMETRY_TOL):
            raise DataError("matrix is not symmetric")
        if np.any(np.abs(np.diag(self.values)) > _SYMMETRY_TOL):
            raise DataError("matrix diagonal is not zero")
        if np.any(self.values < -_SYMMETRY_TOL) or \
                np.any(self.values > 1.0 + _SYMMETRY_TOL):
            raise DataError("matrix entries outside [0, 1]")
        self._index = {t: i for i, t in enumerate(self.ids)}

    def lookup(self, id_a: str, id_b: str) -> float:
        try:
            return float(self.values[self._index[id_a], self._index[id_b]])
        except KeyError as exc:
            raise MissingIdError(
                f"id {exc.args[0]!r} absent from {self.metric!r} matrix"
            )


def save_matrix(matrix: DistanceMatrixFile, path, form: str = "binary"):
    header = {"metric": matrix.metric, "ids": list(matrix.ids)}
    if form == "binary":
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(np.ascontiguousarray(
                matrix.values, dtype="<f8").tobytes())
    elif form == "json":
        header["rows"] = [list(map(float, row)) for row in matrix.values]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True))
            fh.write("\n")
    else:
        raise ValueError(f"unknown matrix form {form!r}")


def load_matrix(path) -> DistanceMatrixFile:
    with open(path, "rb") as fh:
        blob = fh.read()
    newline = blob.find(b"\n")
    header_bytes = blob if newline < 0 else blob[:newline]
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        try:
            header = json.loads(blob.decode("utf-8"))
        except Exception as exc:
            raise ParseError(f"{path}: unreadable matrix header ({exc})")
    if not isinstance(header, dict) or "metric" not in header \
            or "ids" not in header:
        raise ParseError(f"{path}: matrix header missing metric/ids")
    ids = tuple(header["ids"])
    if "rows" in header:
        values = np.asarray(header["rows"], dtype=float)
    else:
        payload = blob[newline + 1:]
        expected = 8 * len(ids) * len(ids)
        if len(payload) != expected:
            raise ParseError(
                f"{path}: expected {expected} payload bytes for "
                f"{len(ids)} ids, found {len(payload)}"
            )
        values = np.frombuffer(payload, dtype="<f8").reshape(
            len(ids), len(ids)).astype(float)
    return DistanceMatrixFile(header["metric"], ids, values)


def save_distributions(dists: dict[str, ProbabilityDistribution], path):
    with open(path, "w", encoding="utf-8") as fh:
        for text_id in sorted(dists):
            d = dists[text_id]
            fh.write(json.dumps({
                "id": text_id,
                "support": list(d.support),
                "mass": [float(m) for m in d.mass],
            }, sort_keys=True) + "\n")


def load_distributions(path) -> dict[str, ProbabilityDistribution]:
    out: dict[str, ProbabilityDistribution] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc})")
            try:
                text_id = rec["id"]
                dist = ProbabilityDistribution(
                    tuple(rec["support"]), tuple(rec["mass"]))
            except KeyError as exc:
                raise ParseError(
                    f"{path}:{lineno}: missing field {exc.args[0]!r}")
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}")
            if text_id in out:
                raise DataError(f"{path}:{lineno}: duplicate id {text_id!r}")
            out[text_id] = dist
    return out
