#!/usr/bin/env python3
"""Run the full certification suite and save the granular check rows.

Usage:
    python3 scripts/certify_all.py [--seed N] [--quick] [--out rows.csv]
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ratiobandits.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if not any(a.startswith("--out") for a in args):
        args += ["--out", "certify_rows.csv"]
    sys.exit(main(["certify", *args]))
