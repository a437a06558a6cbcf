#!/usr/bin/env python3
"""Run the weak/strong pulse transit experiment with absorption."""
import sys
from pathlib import Path

from slowlight.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/fig4"
    raise SystemExit(main(["propagate", "--config", str(ROOT / "configs/fig4.json"), "--out", out]))
