"""plotkit command line: one subcommand per figure family."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, EmptyInputError, FigureSpec, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render simulation CSV outputs as figures"
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in FIGURE_KINDS:
        p = sub.add_parser(kind, help=f"render a {kind} figure")
        p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="FILE")
        p.add_argument("--out", required=True, metavar="FILE.png")
        p.add_argument("--title", default=None)
        if kind == "cdf":
            p.add_argument("--logx", action="store_true")

    args = parser.parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        output=args.out,
        title=args.title,
        logx=getattr(args, "logx", False),
    )
    try:
        render(spec)
    except (SchemaError, EmptyInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
