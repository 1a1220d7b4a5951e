"""Command-line front end: ``ssmlab-plots render --kind <k> --in <csv> --out <img>``.

Exit codes: 0 on success, 1 on usage, schema, or I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def cmd_render(args) -> int:
    spec = FigureSpec(
        input_csv=args.input,
        kind=args.kind,
        output_path=args.out,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        info = render(spec)
    except (SchemaError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in info.get("annotations", []):
        print(line)
    print(f"wrote {args.kind} figure to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssmlab-plots", description="Render ssmlab CSV outputs into figures.")
    sub = parser.add_subparsers(dest="command", required=True)

    rend = sub.add_parser("render", help="render one CSV into one image")
    rend.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    rend.add_argument("--in", dest="input", required=True, help="input CSV path")
    rend.add_argument("--out", required=True, help="output image path (extension selects the format)")
    rend.add_argument("--title", default=None)
    rend.add_argument("--xlabel", default=None)
    rend.add_argument("--ylabel", default=None)
    rend.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
