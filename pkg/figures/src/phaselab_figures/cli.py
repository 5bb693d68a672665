"""render_figures: batch-render fig1..fig6 images from a CSV directory."""

import argparse
import os
import sys

from .render import FIGURES, FigureError, render_figure


def build_parser():
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render reproduction figures from phaselab sweep CSVs",
    )
    parser.add_argument("--csv-dir", required=True)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    os.makedirs(args.out_dir, exist_ok=True)
    rendered = 0
    for fig_id in sorted(FIGURES):
        csv_path = os.path.join(args.csv_dir, fig_id + ".csv")
        if not os.path.exists(csv_path):
            print(f"{fig_id}: {csv_path} not found, skipping", file=sys.stderr)
            continue
        out_path = os.path.join(args.out_dir, f"{fig_id}.{args.format}")
        try:
            render_figure(fig_id, csv_path, out_path)
        except FigureError as exc:
            print(f"{fig_id}: {exc}", file=sys.stderr)
            return 1
        print(f"{fig_id}: wrote {out_path}")
        rendered += 1
    if rendered == 0:
        print(f"no figure CSVs found in {args.csv_dir}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
