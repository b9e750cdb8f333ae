"""Compare translate directions and radii for the universal-translates config."""
import itertools
import sys

from caloric.errors import BudgetMissed
from caloric.fields import Trig
from caloric.universal import Dictionary, universal_translates

PAIRS = {
    "cos k=1, sin k=0.5": [Trig([1.0]), Trig([0.5], "sin")],
    "cos k=1, sin k=2": [Trig([1.0]), Trig([2.0], "sin")],
}


def main():
    d = Dictionary.build(1)
    for (name, targets), axis, radius in itertools.product(PAIRS.items(), [0, 1], [0.5, 1.0]):
        label = f"{name:20s} axis={'time' if axis == 0 else 'space'} R={radius}"
        try:
            res = universal_translates(targets, [radius, radius], d, axis=axis)
            errs = " ".join(f"{c['achieved_sup_error']:.3e}<{c['budget']:g}" for c in res.certificates)
            print(f"{label}: {errs}")
        except BudgetMissed as exc:
            print(f"{label}: missed at step {exc.step} ({exc.achieved:.3e} >= {exc.budget:g})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
