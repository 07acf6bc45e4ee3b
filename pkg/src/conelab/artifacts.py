"""Deterministic run artifacts: CSV tables, JSON reports, run manifest.

Conventions shared by every writer:

  * CSV: comma separator, '.' decimal point, one header row, '#'-prefixed
    comment rows above the header.  Floats are written with repr so the
    values round-trip exactly and identical inputs give identical bytes.
  * JSON: UTF-8, keys sorted, two-space indent, trailing newline.
  * Every data file carries the manifest hash of its run in a header
    comment row (CSV) or under the "manifest_hash" key (JSON), so any
    artifact can be traced back to the exact configuration that made it.

The manifest itself additionally records wall time, which varies run to
run; byte-identity across repeated runs is guaranteed for the data files,
not the manifest.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "ArtifactError",
    "format_value",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "write_snapshots",
    "read_snapshots",
    "write_monitor",
    "write_shells",
    "read_shells",
]


class ArtifactError(ValueError):
    """Malformed or inconsistent artifact file."""


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, columns, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """(comments, columns, rows of str) with '#' rows stripped."""
    comments, columns, rows = [], None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            if columns is None:
                columns = line.split(",")
                continue
            cells = line.split(",")
            if len(cells) != len(columns):
                raise ArtifactError(
                    f"{path}: row has {len(cells)} cells, header has {len(columns)}"
                )
            rows.append(cells)
    if columns is None:
        raise ArtifactError(f"{path}: no header row")
    return comments, columns, rows


def write_json(path, obj, manifest_hash=None):
    doc = dict(obj)
    if manifest_hash is not None:
        doc["manifest_hash"] = manifest_hash
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise ArtifactError(f"{path}: invalid JSON ({e})") from e


def _comment_map(comments):
    out = {}
    for c in comments:
        if ":" in c:
            key, val = c.split(":", 1)
            out[key.strip()] = val.strip()
    return out


def write_snapshots(path, grid, snapshots, n_theta, manifest_hash):
    """Modal snapshots as rows (t, x, k, re, im), ordered by time, mode, node.

    Raw spectral coefficients are stored (physical field = inverse FFT over
    the n_theta angle samples recorded in the header), so a read is lossless.
    """
    comments = (
        f"manifest_hash: {manifest_hash}",
        f"n_theta: {n_theta}",
        f"N: {grid.N}",
        "columns: time, radius, circumferential mode, Re(coeff), Im(coeff)",
    )
    rows = []
    for t, coeffs in snapshots:
        coeffs = np.asarray(coeffs)
        for k in range(coeffs.shape[0]):
            for i in range(coeffs.shape[1]):
                rows.append((t, grid.x[i], k, coeffs[k, i].real, coeffs[k, i].imag))
    write_csv(path, ("t", "x", "k", "re", "im"), rows, comments)


def read_snapshots(path, grid=None):
    """(snapshots, n_theta, manifest_hash); snapshots = [(t, coeffs), ...]."""
    comments, columns, rows = read_csv(path)
    if columns != ["t", "x", "k", "re", "im"]:
        raise ArtifactError(f"{path}: unexpected snapshot columns {columns}")
    meta = _comment_map(comments)
    try:
        n_theta = int(meta["n_theta"])
        n_nodes = int(meta["N"])
    except KeyError as e:
        raise ArtifactError(f"{path}: missing header comment {e}") from e
    data = np.array([[float(c) for c in row] for row in rows])
    if data.size == 0:
        raise ArtifactError(f"{path}: no snapshot rows")
    n_modes = n_theta // 2 + 1
    block = n_modes * n_nodes
    if data.shape[0] % block:
        raise ArtifactError(f"{path}: row count {data.shape[0]} not a"
                            f" multiple of modes*nodes = {block}")
    snapshots = []
    for start in range(0, data.shape[0], block):
        chunk = data[start:start + block]
        t = chunk[0, 0]
        if not np.all(chunk[:, 0] == t):
            raise ArtifactError(f"{path}: mixed times inside one snapshot block")
        coeffs = (chunk[:, 3] + 1j * chunk[:, 4]).reshape(n_modes, n_nodes)
        if grid is not None:
            x = chunk[:n_nodes, 1]
            if not np.allclose(x, grid.x, rtol=0, atol=1e-12 * max(grid.x[-1], 1.0)):
                raise ArtifactError(f"{path}: radii do not match the configured grid")
        snapshots.append((t, coeffs))
    return snapshots, n_theta, meta.get("manifest_hash")


def write_monitor(path, monitor, norm_labels, manifest_hash):
    """Monitor trace CSV: t, K_running, then one column per tracked norm."""
    monitor = np.asarray(monitor)
    columns = ["t", "K_running"] + list(norm_labels)
    if monitor.ndim != 2 or monitor.shape[1] != len(columns):
        raise ArtifactError(
            f"monitor array has shape {monitor.shape}, expected (*, {len(columns)})"
        )
    comments = (f"manifest_hash: {manifest_hash}",)
    write_csv(path, columns, [tuple(row) for row in monitor], comments)


def write_shells(path, grid, profile, mode_amps, manifest_hash, window_mask=None):
    """Shell-resolved deviation data used by the decay fit and the figures.

    profile: max-over-angle deviation per node; mode_amps: {k: amplitude}.
    window_mask marks the nodes that entered the fit (0/1 column).
    """
    columns = ["x", "deviation"] + [f"mode_{k}" for k in sorted(mode_amps)]
    if window_mask is not None:
        columns.append("in_window")
    rows = []
    for i in range(grid.N):
        row = [grid.x[i], profile[i]]
        row += [mode_amps[k][i] for k in sorted(mode_amps)]
        if window_mask is not None:
            row.append(int(bool(window_mask[i])))
        rows.append(tuple(row))
    write_csv(path, columns, rows, (f"manifest_hash: {manifest_hash}",))


def read_shells(path):
    """(x, deviation, {k: amplitude}, in_window-or-None, manifest_hash)."""
    comments, columns, rows = read_csv(path)
    if not rows:
        raise ArtifactError(f"{path}: shell table is empty")
    if columns[:2] != ["x", "deviation"]:
        raise ArtifactError(f"{path}: unexpected shell columns {columns}")
    data = np.array([[float(c) for c in row] for row in rows])
    modes = {}
    mask = None
    for j, name in enumerate(columns[2:], start=2):
        if name == "in_window":
            mask = data[:, j].astype(bool)
        elif name.startswith("mode_"):
            modes[int(name[5:])] = data[:, j]
        else:
            raise ArtifactError(f"{path}: unexpected shell column {name!r}")
    return data[:, 0], data[:, 1], modes, mask, _comment_map(comments).get("manifest_hash")
