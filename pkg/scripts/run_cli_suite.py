#!/usr/bin/env python3
"""
CLI Reproducibility Script

Runs every modularis subcommand on a small fixed set of inputs, twice, and
checks that both runs produce byte-identical output.

Usage:
    python scripts/run_cli_suite.py [--keep DIR]
"""

import argparse
import hashlib
import json
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Dict, List

PROJECT_ROOT = Path(__file__).resolve().parent.parent

INPUTS = {
    "l1.json": {"kind": "orlicz", "phi": {"kind": "power", "p": 1.0}},
    "fn.json": {"blocks": [
        {"start": 0.0, "end": 1.0, "value": 2.0},
        {"start": 1.0, "end": 1.5, "value": 5.0},
    ]},
    "family.json": [
        {"blocks": [{"start": 0.0, "end": 1.0, "value": 4.0}]},
        {"blocks": [{"start": 0.0, "end": 2.0, "value": 2.0}]},
    ],
    "fnorm.json": {"modulars": [{"kind": "orlicz", "phi": {"kind": "power", "p": 1.0}}]},
    "space.json": {"alpha": 2.0},
    "lp2.json": {"kind": "lp", "p": 2.0},
    "operator.json": {
        "kind": "builtin",
        "name": "sin_damped",
        "c": {"blocks": [{"start": 0.0, "end": 1.0, "value": 0.5}]},
        "lam": 0.5,
        "K": [{"start": 0.0, "end": 1.0}],
    },
}

COMMANDS = {
    "norm": ["norm", "--modular", "l1.json", "--fn", "fn.json", "--json"],
    "approx": ["approx", "--family", "family.json", "--norm", "fnorm.json", "--space", "space.json", "--eps", "0.1"],
    "rearrange": ["rearrange", "--fn", "fn.json"],
    "map": ["map", "--norm", "lp2.json", "--fn", "fn.json", "--dyadic", "5", "--end", "2.0"],
    "fixpoint": ["fixpoint", "--operator", "operator.json", "--norm", "fnorm.json",
                 "--space", "space.json", "--eps", "1e-4"],
    "verify": ["verify", "--suite", "fnorm-axioms", "--seed", "7", "--trials", "10", "--samples", "3"],
}


class CLISuiteRunner:
    """Runs the suite in a scratch directory"""

    def __init__(self, workdir: Path):
        self.workdir = workdir

    def write_inputs(self):
        for name, payload in INPUTS.items():
            (self.workdir / name).write_text(json.dumps(payload, indent=2))

    def run_once(self, tag: str) -> Dict[str, str]:
        digests = {}
        for name, argv in COMMANDS.items():
            target = self.workdir / f"{name}.{tag}.out"
            result = subprocess.run(
                [sys.executable, "-m", "app", *argv, "-o", str(target)],
                cwd=self.workdir,
                env={"PYTHONPATH": str(PROJECT_ROOT), "MODULARIS_LOG_LEVEL": "WARNING"},
                capture_output=True,
                text=True,
            )
            if result.returncode != 0:
                print(f"❌ {name} exited {result.returncode}: {result.stderr.strip()}")
                digests[name] = f"exit-{result.returncode}"
                continue
            digests[name] = hashlib.sha256(target.read_bytes()).hexdigest()
        return digests


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--keep", default=None, help="run in this directory and keep the outputs")
    args = parser.parse_args()

    if args.keep:
        workdir = Path(args.keep)
        workdir.mkdir(parents=True, exist_ok=True)
        return _run(workdir)
    with tempfile.TemporaryDirectory() as tmp:
        return _run(Path(tmp))


def _run(workdir: Path) -> int:
    print(f"🔧 Running CLI suite in {workdir}")
    runner = CLISuiteRunner(workdir)
    runner.write_inputs()
    first, second = runner.run_once("a"), runner.run_once("b")

    mismatched: List[str] = []
    for name in COMMANDS:
        same = first[name] == second[name] and not first[name].startswith("exit-")
        print(f"{'✅' if same else '❌'} {name:10s} {first[name][:16]}")
        if not same:
            mismatched.append(name)

    if mismatched:
        print(f"\n❌ {len(mismatched)} command(s) not reproducible: {', '.join(mismatched)}")
        return 1
    print(f"\n🎉 All {len(COMMANDS)} commands reproducible")
    return 0


if __name__ == "__main__":
    sys.exit(main())
