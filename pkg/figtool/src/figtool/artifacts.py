"""Readers for the artifact files emitted by the simulation CLI.

Only the on-disk contract is assumed: CSV with comma separators, '.'
decimals, one header row, and '#' comment rows holding 'key: value' pairs;
JSON is UTF-8.  The readers validate shape and return plain numpy arrays
and dicts; no physics is recomputed here.
"""

import json
from pathlib import Path

import numpy as np

__all__ = [
    "ArtifactError",
    "read_csv",
    "read_json",
    "read_shells",
    "read_snapshots",
]


class ArtifactError(ValueError):
    """Malformed or missing artifact file."""


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ArtifactError(f"{path}: invalid JSON: {e}") from e


def read_csv(path):
    """Return (comments, columns, rows) with every cell still a string."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    comments = {}
    columns = None
    rows = []
    for line in lines:
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ": " in body:
                key, value = body.split(": ", 1)
                comments[key] = value
            continue
        cells = line.split(",")
        if columns is None:
            columns = [c.strip() for c in cells]
            continue
        if len(cells) != len(columns):
            raise ArtifactError(
                f"{path}: row has {len(cells)} cells, header has {len(columns)}"
            )
        rows.append(cells)
    if columns is None:
        raise ArtifactError(f"{path}: no header row")
    return comments, columns, rows


def _float_column(path, columns, rows, name):
    i = columns.index(name)
    try:
        return np.array([float(r[i]) for r in rows])
    except ValueError as e:
        raise ArtifactError(f"{path}: column {name!r}: {e}") from e


def read_shells(path):
    """Shell profile file -> dict with x, deviation, per-mode amplitudes.

    Keys: 'x', 'deviation', 'modes' ({int k: array}), 'in_window' (bool
    array or None), 'manifest_hash'.  Raises when the file holds no data
    rows, naming the file.
    """
    path = Path(path)
    comments, columns, rows = read_csv(path)
    for required in ("x", "deviation"):
        if required not in columns:
            raise ArtifactError(f"{path}: missing column {required!r}")
    if not rows:
        raise ArtifactError(f"shells file {path} has no data rows")
    out = {
        "x": _float_column(path, columns, rows, "x"),
        "deviation": _float_column(path, columns, rows, "deviation"),
        "modes": {},
        "in_window": None,
        "manifest_hash": comments.get("manifest_hash"),
    }
    for name in columns:
        if name.startswith("mode_"):
            out["modes"][int(name[5:])] = _float_column(path, columns, rows, name)
    if "in_window" in columns:
        out["in_window"] = _float_column(path, columns, rows, "in_window") > 0.5
    return out


def read_snapshots(path):
    """Modal snapshot file -> (snapshots, x, n_theta).

    snapshots is a list of (t, coeffs) with coeffs complex of shape
    (n_modes, N); rows are expected ordered time, then mode, then node, as
    written by the simulator.
    """
    path = Path(path)
    comments, columns, rows = read_csv(path)
    for required in ("t", "x", "k", "re", "im"):
        if required not in columns:
            raise ArtifactError(f"{path}: missing column {required!r}")
    if not rows:
        raise ArtifactError(f"snapshots file {path} has no data rows")
    try:
        n_theta = int(comments["n_theta"])
        n_nodes = int(comments["N"])
    except (KeyError, ValueError) as e:
        raise ArtifactError(f"{path}: missing n_theta/N header comments") from e
    t = _float_column(path, columns, rows, "t")
    x = _float_column(path, columns, rows, "x")
    k = _float_column(path, columns, rows, "k").astype(int)
    re = _float_column(path, columns, rows, "re")
    im = _float_column(path, columns, rows, "im")

    n_modes_total = len(rows)
    if n_modes_total % n_nodes:
        raise ArtifactError(f"{path}: row count not a multiple of N={n_nodes}")
    n_modes = int(k.max()) + 1
    block = n_modes * n_nodes
    if len(rows) % block:
        raise ArtifactError(f"{path}: row count not a multiple of N*n_modes")
    snapshots = []
    for start in range(0, len(rows), block):
        sl = slice(start, start + block)
        ts = t[sl]
        if not np.all(ts == ts[0]):
            raise ArtifactError(f"{path}: mixed times inside one snapshot block")
        coeffs = (re[sl] + 1j * im[sl]).reshape(n_modes, n_nodes)
        snapshots.append((float(ts[0]), coeffs))
    return snapshots, x[:n_nodes], n_theta
