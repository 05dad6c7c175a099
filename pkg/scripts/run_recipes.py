"""Run every shipped recipe in configs/ and write plot-ready CSV/JSON.

    python3 scripts/run_recipes.py --out results/
"""
import argparse
import json
from pathlib import Path

from viraldyn.cli import execute
from viraldyn.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def command_for(path: Path) -> str:
    doc = json.loads(path.read_text())
    if "sweep" in doc:
        return "sweep"
    if "fit" in doc:
        return "fit"
    return "stability" if path.stem == "counterexample" else "simulate"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", help="recipe names (file stems) to run")
    args = ap.parse_args()
    for path in sorted((ROOT / "configs").glob("*.json")):
        if args.only and path.stem not in args.only:
            continue
        cmd = command_for(path)
        files = execute(cmd, load_config(path), Path(args.out) / path.stem, args.seed)
        print(f"{path.stem:28s} {cmd:10s} {len(files)} file(s)")


if __name__ == "__main__":
    main()
