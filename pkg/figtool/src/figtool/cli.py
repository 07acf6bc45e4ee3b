"""Command line entry point: figtool --spec PATH."""

import argparse
import sys

from .artifacts import ArtifactError
from .figures import FigureError, render_figure
from .spec import SpecError, load_spec

__all__ = ["main"]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figtool",
        description="Render a figure from simulation artifacts as described by a JSON spec.",
    )
    parser.add_argument("--spec", required=True, metavar="PATH",
                        help="figure specification file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args.spec)
        info = render_figure(spec)
    except (SpecError, FigureError, ArtifactError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {info['output']}")
    for note in info.get("notes", ()):
        print(f"note: {note}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
