"""Sweep dictionary spacing and grid density for the two-rung ladder config.

Prints certified rung errors for each setting; the chosen setting is frozen
in configs/universal_ladder.json.
"""
import itertools
import json
import sys
from pathlib import Path

from caloric.errors import BudgetMissed
from caloric.fields import make_field
from caloric.universal import Dictionary, Rung, ladder

ROOT = Path(__file__).resolve().parents[1]


def main():
    cfg = json.loads((ROOT / "configs" / "universal_ladder.json").read_text())
    rungs = [Rung(make_field(r["target"]), r["eps"], lo=tuple(r["box"]["lo"]), hi=tuple(r["box"]["hi"]))
             for r in cfg["rungs"]]
    for dk, k_max, grid in itertools.product([0.5, 0.25], [2.0, 3.0], [11, 15, 21]):
        d = Dictionary.build(1, k_max=k_max, dk=dk)
        try:
            res = ladder(rungs, d, grid_count=grid)
            errs = " ".join(f"{c['achieved_sup_error']:.3e}" for c in res.certificates)
            print(f"dk={dk} k_max={k_max} grid={grid}: certified {errs}")
        except BudgetMissed as exc:
            print(f"dk={dk} k_max={k_max} grid={grid}: missed at rung {exc.step} ({exc.achieved:.3e})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
