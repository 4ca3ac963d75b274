"""Run every JSON config in demos/configs through the command-line suite.

Usage: python3 demos/run_configs.py [output root]
"""
import sys
from pathlib import Path

from sgfio.cli import main

here = Path(__file__).parent
out = sys.argv[1] if len(sys.argv) > 1 else "sgfio-out/demos"
argv = ["suite", "--out", out, "--jobs", "2"]
for path in sorted((here / "configs").glob("*.json")):
    argv += ["--config", str(path)]
# degenerate_phase.json fails on purpose, so the exit status is 1
sys.exit(main(argv))
