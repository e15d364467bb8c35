#!/usr/bin/env python3
"""
Iris Quality Toolkit - Main Entry Point

Runs one pipeline step per invocation:

    python main.py synth --out data/synth
    python main.py split --manifest data/synth/manifest.jsonl --out data/synth/split.jsonl
    python main.py label --manifest data/synth/split.jsonl --out data/synth/labeled.jsonl
    python main.py factors --manifest data/synth/labeled.jsonl --out data/factors.csv \
        --write-manifest data/synth/factors.jsonl
    python main.py train --manifest data/synth/factors.jsonl --out-checkpoint models/quality.pt
    python main.py predict --manifest data/synth/factors.jsonl --checkpoint models/quality.pt \
        --out data/synth/predicted.jsonl
    python main.py eval --manifest data/synth/predicted.jsonl --quality-field predicted_quality \
        --out data/curve.csv
    python main.py report --manifest data/synth/predicted.jsonl --out data/report
"""

import sys
from pathlib import Path

# Make the project root importable when run from elsewhere
sys.path.insert(0, str(Path(__file__).resolve().parent))

from config.config import ensure_directories
from src.cli import main


if __name__ == "__main__":
    ensure_directories()
    main()
