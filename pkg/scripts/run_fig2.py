#!/usr/bin/env python3
"""Produce the exact-vs-closed-form ratio curves (both density regimes)."""
import sys
from pathlib import Path

from slowlight.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/fig2"
    rc = main(["dk-curve", "--config", str(ROOT / "configs/fig2a.json"), "--out", out])
    rc |= main(["dk-curve", "--config", str(ROOT / "configs/fig2b.json"), "--out", out])
    raise SystemExit(rc)
