#!/usr/bin/env python3
"""Tabulate the single-excitation dispersion branches for the example medium."""
import sys
from pathlib import Path

from slowlight.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/dispersion"
    raise SystemExit(main(["dispersion", "--config", str(ROOT / "configs/fig4.json"), "--out", out]))
