"""Writers for the evaluation engine's precomputed-metric file formats.

A distance-matrix file is a one-line JSON header {"ids", "metric"}
followed by raw row-major little-endian float64 bytes (binary form) or
carrying the rows inside the header object under "rows" (json form). A
distributions file is line-oriented JSON with one {"id", "support",
"mass"} object per text. Implemented here from the format contract so
the exporter stays importable without the engine installed.
"""
from __future__ import annotations

import json

import numpy as np


def write_matrix(ids, values, path, metric: str = "bscore",
                 form: str = "binary"):
    """Write a full pairwise distance matrix over the given id list."""
    ids = list(ids)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(ids), len(ids)):
        raise ValueError(
            f"matrix shape {values.shape} does not fit {len(ids)} ids")
    header = {"metric": metric, "ids": ids}
    if form == "binary":
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    elif form == "json":
        header["rows"] = [[float(v) for v in row] for row in values]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True))
            fh.write("\n")
    else:
        raise ValueError(f"unknown matrix form {form!r}")


def write_distributions(distributions: dict[str, tuple], path):
    """Write {text id: (support, mass)} as line-oriented JSON, sorted
    by id for reproducible bytes."""
    with open(path, "w", encoding="utf-8") as fh:
        for text_id in sorted(distributions):
            support, mass = distributions[text_id]
            fh.write(json.dumps({
                "id": text_id,
                "support": [int(s) for s in support],
                "mass": [float(m) for m in mass],
            }, sort_keys=True) + "\n")
