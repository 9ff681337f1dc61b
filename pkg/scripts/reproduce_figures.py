import argparse
import os
import sys

# Add project root to Python path for imports
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# Import after path setup to avoid module not found errors
# pylint: disable=wrong-import-position
from src.cli import main as cli_main
from src.config import get_output_dir

FIGURE_CHANNELS = ["maj-z-1d", "maj-z-2d", "yprime-asym"]


def parse_args():
    p = argparse.ArgumentParser(
        description=(
            "Write bound/myopic sweep data for the three example channels "
            "as CSV files (one per channel)."
        )
    )
    p.add_argument(
        "--output-dir",
        default=get_output_dir(),
        help="Directory for the sweep files (default ./output).",
    )
    p.add_argument("--step", type=float, default=0.02, help="Alpha grid step.")
    p.add_argument("--parallel", action="store_true", help="Solve grid points in parallel.")
    return p.parse_args()


def main() -> int:
    args = parse_args()
    for channel in FIGURE_CHANNELS:
        argv = [
            "sweep",
            "--channel", channel,
            "--step", str(args.step),
            "--output", os.path.join(args.output_dir, f"sweep_{channel}.csv"),
        ]
        if args.parallel:
            argv.append("--parallel")
        code = cli_main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
