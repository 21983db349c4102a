#!/usr/bin/env python3
"""Rebuild the golden CLI outputs committed under tests/golden/.

Run from the repository root after an intentional change to any CLI
output format:

    python3 scripts/regenerate_goldens.py

The commands and file list live in tests/golden_scenario.py, which the
acceptance suite also imports.
"""

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from golden_scenario import GOLDEN_FILES, command_sequence  # noqa: E402

from boxsim.cli import main  # noqa: E402


def run() -> None:
    golden = ROOT / "tests" / "golden"
    golden.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        for argv in command_sequence(tmp):
            code = main(argv)
            if code != 0:
                raise SystemExit(f"command failed with exit code {code}: {argv}")
        for name in GOLDEN_FILES:
            shutil.copyfile(Path(tmp) / name, golden / name)
            print(f"wrote {golden / name}")


if __name__ == "__main__":
    run()
