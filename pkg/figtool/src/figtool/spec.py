"""Figure specification files.

A figure is described by a small JSON document:

    {
      "kind": "decay-loglog" | "sweep" | "heatmap",
      "inputs": {...},              # per-kind artifact paths
      "output": "figure.svg",       # format inferred from extension
      "style": {...}                # optional cosmetic overrides
    }

Input and output paths are resolved relative to the spec file's directory,
so a spec can travel with the run directory it describes.  Unknown keys are
rejected with dotted-path diagnostics.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["FIGURE_KINDS", "FigureSpec", "SpecError", "load_spec", "parse_spec"]

FIGURE_KINDS = ("decay-loglog", "sweep", "heatmap")

_INPUT_KEYS = {
    "decay-loglog": ("report", "shells"),
    "sweep": ("reports",),
    "heatmap": ("snapshots",),
}

_STYLE_DEFAULTS = {
    "title": None,        # str
    "figsize": (6.0, 4.5),
    "dpi": 150,           # raster output only
    "mode": 1,            # sweep: which circumferential mode to plot
    "time": None,         # heatmap: snapshot time (default: last)
    "cmap": "viridis",    # heatmap colormap
}

_OUTPUT_SUFFIXES = (".svg", ".png")


class SpecError(ValueError):
    """Invalid figure specification."""


def _check_keys(doc, allowed, path):
    for key in doc:
        if key not in allowed:
            raise SpecError(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")


def _input_path(value, base_dir, path):
    if not isinstance(value, str) or not value:
        raise SpecError(f"{path}: expected a path string")
    resolved = (base_dir / value).resolve() if base_dir else Path(value).resolve()
    if not resolved.is_file():
        raise SpecError(f"{path}: input file {resolved} does not exist")
    return resolved


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict
    output: Path
    style: dict = field(default_factory=dict)


def parse_spec(doc, base_dir=None):
    """Validate a spec document and resolve its paths."""
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    base_dir = Path(base_dir) if base_dir is not None else None
    _check_keys(doc, ("kind", "inputs", "output", "style"), "")
    for required in ("kind", "inputs", "output"):
        if required not in doc:
            raise SpecError(f"{required}: missing key")

    kind = doc["kind"]
    if kind not in FIGURE_KINDS:
        raise SpecError(f"kind: {kind!r} is not one of {', '.join(FIGURE_KINDS)}")

    raw_inputs = doc["inputs"]
    if not isinstance(raw_inputs, dict):
        raise SpecError("inputs: expected an object")
    allowed = _INPUT_KEYS[kind]
    _check_keys(raw_inputs, allowed, "inputs")
    for required in allowed:
        if required not in raw_inputs:
            raise SpecError(f"inputs.{required}: missing key")
    inputs = {}
    if kind == "sweep":
        reports = raw_inputs["reports"]
        if not isinstance(reports, list):
            raise SpecError("inputs.reports: expected a list of paths")
        inputs["reports"] = tuple(
            _input_path(p, base_dir, f"inputs.reports[{i}]") for i, p in enumerate(reports)
        )
    else:
        for key in allowed:
            inputs[key] = _input_path(raw_inputs[key], base_dir, f"inputs.{key}")

    output = doc["output"]
    if not isinstance(output, str) or not output:
        raise SpecError("output: expected a path string")
    out_path = (base_dir / output).resolve() if base_dir else Path(output).resolve()
    if out_path.suffix.lower() not in _OUTPUT_SUFFIXES:
        raise SpecError(
            f"output: cannot infer format from {out_path.suffix!r} "
            f"(use one of {', '.join(_OUTPUT_SUFFIXES)})"
        )

    style = dict(_STYLE_DEFAULTS)
    raw_style = doc.get("style", {})
    if not isinstance(raw_style, dict):
        raise SpecError("style: expected an object")
    _check_keys(raw_style, tuple(_STYLE_DEFAULTS), "style")
    style.update(raw_style)
    if style["title"] is not None and not isinstance(style["title"], str):
        raise SpecError("style.title: expected a string")
    try:
        w, h = style["figsize"]
        style["figsize"] = (float(w), float(h))
    except (TypeError, ValueError) as e:
        raise SpecError("style.figsize: expected [width, height]") from e
    if not isinstance(style["dpi"], (int, float)) or style["dpi"] <= 0:
        raise SpecError("style.dpi: expected a positive number")
    if not isinstance(style["mode"], int) or style["mode"] < 0:
        raise SpecError("style.mode: expected a non-negative integer")
    if style["time"] is not None and not isinstance(style["time"], (int, float)):
        raise SpecError("style.time: expected a number")
    if not isinstance(style["cmap"], str):
        raise SpecError("style.cmap: expected a string")

    return FigureSpec(kind=kind, inputs=inputs, output=out_path, style=style)


def load_spec(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecError(f"cannot read spec {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: invalid JSON: {e}") from e
    return parse_spec(doc, base_dir=path.parent)
