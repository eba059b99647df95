"""Run every config in configs/ through the CLI and print one status line each."""
import argparse
import json
import sys
from pathlib import Path

from seqgibbs.cli import main

ROOT = Path(__file__).resolve().parent.parent


def cli():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "out"))
    ap.add_argument("--jobs", default="1")
    ap.add_argument("--oracle", action="store_true")
    args = ap.parse_args()
    worst = 0
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        command = json.loads(cfg.read_text())["experiment"]
        argv = [command, "--config", str(cfg), "--out", str(Path(args.out) / cfg.stem), "--jobs", args.jobs]
        if args.oracle:
            argv.append("--oracle")
        code = main(argv)
        print(f"[{code}] {cfg.name}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(cli())
