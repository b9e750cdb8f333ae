"""Regenerate the golden CLI outputs under tests/golden from configs/*.json."""
import json
import shutil
import sys
from pathlib import Path

from caloric.cli import run_command

ROOT = Path(__file__).resolve().parents[1]


def main():
    golden = ROOT / "tests" / "golden"
    for cfg_path in sorted((ROOT / "configs").glob("*.json")):
        config = json.loads(cfg_path.read_text())
        out = golden / cfg_path.stem
        shutil.rmtree(out, ignore_errors=True)
        code, _ = run_command(config["command"], config, out)
        (out / "exit_code").write_text(f"{code}\n")
        print(f"{cfg_path.stem}: exit {code}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
