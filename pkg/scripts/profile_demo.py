#!/usr/bin/env python3
"""Synthesize one training run and print its full analysis.

Example:
    python scripts/profile_demo.py --seed 7 --noise 0.05
"""

import argparse
import sys
import tempfile
from pathlib import Path

from traceprof.cli import main as cli_main
from traceprof.synth import random_spec, write_run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise", type=float, default=0.0)
    parser.add_argument("--out", default=None,
                        help="directory for the generated run (default: temp dir)")
    parser.add_argument("--format", choices=("json", "table"), default="table")
    args = parser.parse_args()

    spec = random_spec(args.seed, noise_amplitude=args.noise)
    if args.out is not None:
        manifest = write_run(spec, Path(args.out))
        print(f"run written to {manifest}", file=sys.stderr)
        return cli_main(["analyze", str(manifest), "--format", args.format])
    with tempfile.TemporaryDirectory() as tmp:
        manifest = write_run(spec, Path(tmp))
        return cli_main(["analyze", str(manifest), "--format", args.format])


if __name__ == "__main__":
    sys.exit(main())
