#!/usr/bin/env python3
"""Produce the group-velocity saturation curves."""
import sys
from pathlib import Path

from slowlight.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/fig3"
    raise SystemExit(main(["vgr-curve", "--config", str(ROOT / "configs/fig3.json"), "--out", out]))
