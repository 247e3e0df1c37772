"""CLI: dqpt-figures render --recipe PATH"""

from __future__ import annotations

import argparse
import sys

from .render import RecipeError, load_recipe, render_to_file


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dqpt-figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a figure recipe")
    p_render.add_argument("--recipe", required=True)
    args = parser.parse_args(argv)

    try:
        recipe = load_recipe(args.recipe)
        path = render_to_file(recipe)
    except (RecipeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
