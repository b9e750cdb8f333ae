import json

import numpy as np
import pytest

from caloric.colehopf import ColeHopfMap
from caloric.errors import BlockExhausted, BudgetMissed, DictionaryTooSmall, DomainViolation
from caloric.fields import (Constant, Exponential, HeatPolynomial, Trig, heat_residual_fd,
                            kernel_pole, make_field)
from caloric.grids import ball_grid, box_grid
from caloric.universal import (Dictionary, Rung, burgers_universal_series, ladder, ladder_radii,
                               translate_centers, two_set_entire_fit, universal_series,
                               universal_translates)

SMALL = Dictionary.build(1, k_max=2.0, dk=0.5, degree=6)


def test_dictionary_build_and_json():
    d = Dictionary.build(1, k_max=1.0, dk=0.5, degree=2)
    # exp k in {-1,-.5,.5,1}, trig k in {.5,1} x {cos,sin}, polys 0..2
    assert len(d) == 4 + 4 + 3
    back = Dictionary.from_json(d.to_json())
    t, x = box_grid([0, -1], [1, 1], 3)
    assert np.array_equal(back.matrix(t, x), d.matrix(t, x))
    assert Dictionary.build(2, k_max=0.5, dk=0.5, degree=1).n == 2


def test_two_set_examples():
    a = box_grid([1, 0], [2, 1], 9)
    b = box_grid([-2, 0], [-1, 1], 9)
    zero = two_set_entire_fit(a, np.zeros(a[0].size), b, SMALL)
    assert zero.error_a == 0.0 and zero.error_b == 0.0
    member = two_set_entire_fit(a, Trig([1.0]), (np.zeros(0), np.zeros((0, 1))), SMALL)
    assert member.error_a <= 1e-8
    fit = two_set_entire_fit(a, HeatPolynomial([2]), b, Dictionary.build(1))
    assert fit.error_a <= 5e-2 and fit.error_b <= 5e-2
    with pytest.raises(DictionaryTooSmall):
        two_set_entire_fit(a, HeatPolynomial([2]), b, Dictionary.build(1, k_max=0.5, degree=1), tol=1e-6)


def test_ladder_examples():
    r = Rung(Exponential([0.5]), 1e-3, lo=(-0.5, -0.5), hi=(0.5, 0.5))
    res = ladder([r], SMALL)
    assert res.certificates[0]["achieved_sup_error"] <= 1e-8
    zeros = [Rung(Constant(0.0), 0.1, lo=(-0.25, -0.25), hi=(0.25, 0.25)),
             Rung(Constant(0.0), 0.1, lo=(1.5, -0.25), hi=(2.0, 0.25))]
    res = ladder(zeros, SMALL)
    assert res.certified and all(c["achieved_sup_error"] == 0.0 for c in res.certificates)


def test_ladder_calibrated_two_rungs(root):
    cfg = json.loads((root / "configs" / "universal_ladder.json").read_text())
    rungs = [Rung(make_field(r["target"]), r["eps"], lo=tuple(r["box"]["lo"]), hi=tuple(r["box"]["hi"]))
             for r in cfg["rungs"]]
    res = ladder(rungs, Dictionary.from_json(cfg["dictionary"]), grid_count=cfg["grid_count"])
    assert res.certified
    assert len(res.steps) == 2


def test_ladder_budget_missed():
    rungs = [Rung(HeatPolynomial([1]), 0.1, lo=(-0.25, -0.25), hi=(0.25, 0.25)),
             Rung(Trig([2.9]), 1e-12, lo=(1.5, -0.25), hi=(2.0, 0.25))]
    with pytest.raises(BudgetMissed) as info:
        ladder(rungs, Dictionary.build(1, k_max=1.0, degree=2))
    assert info.value.step == 2


def test_ladder_radii_separate_rungs():
    rungs = [Rung(Constant(0.0), 1.0, center=(0.0, 0.0), radius=1.0),
             Rung(Constant(0.0), 1.0, center=(3.0, 0.0), radius=1.0)]
    radii = ladder_radii(rungs)
    assert 1.0 < radii[0] < 2.0
    with pytest.raises(ValueError):
        ladder_radii(rungs[::-1])


def test_translate_centres():
    c = translate_centers([1.0, 1.0, 0.5], 1, gap=1.0)
    assert [list(v) for v in c] == [[0.0, 0.0], [3.0, 0.0], [5.5, 0.0]]
    c = translate_centers([1.0, 1.0], 2, gap=1.0, axis=2)
    assert list(c[1]) == [0.0, 0.0, 3.0]


def test_translates_examples(root):
    res = universal_translates([], [], SMALL)
    assert res.certificates == [] and res.field.value(0.0, [0.0]) == 0.0
    res = universal_translates([Constant(0.0)], [1.0], SMALL)
    assert res.certificates[0]["achieved_sup_error"] == 0.0
    cfg = json.loads((root / "configs" / "universal_translates.json").read_text())
    targets = [make_field(f) for f in cfg["targets"]]
    res = universal_translates(targets, cfg["radii"], Dictionary.build(1), gap=cfg["gap"],
                               grid_count=cfg["grid_count"])
    errs = [c["achieved_sup_error"] for c in res.certificates]
    assert errs[0] < 1.0 and errs[1] < 0.5
    # independent check of the translate property on a fresh grid
    for j, (tg, c, r) in enumerate(zip(targets, res.centers, cfg["radii"]), start=1):
        ty, xy = ball_grid(np.zeros(2), r, 9)
        moved = res.field.value(ty + c[0], xy + c[1:])
        assert np.max(np.abs(moved - tg.value(ty, xy))) < 1.0 / j


def test_series_examples():
    t, x = box_grid([0, -1], [1, 1], 7)
    poles = np.array([[-0.5, 0.0], [-0.3, 1.5], [-1.0, -1.0], [-0.2, -1.5]])
    zero = universal_series([Constant(0.0)], t, x, poles, [1e-8])
    assert zero.markers == [0] and len(zero.coefficients) == 0
    q = poles[2]
    one = universal_series([kernel_pole(q)], t, x, poles, [1e-8])
    assert one.certificates[0]["achieved_sup_error"] <= 1e-8
    assert one.markers[0] >= 1


def test_series_two_targets_non_convergence(root):
    cfg = json.loads((root / "configs" / "universal_series.json").read_text())
    from caloric.cli import _poles
    t, x = box_grid(cfg["grid"]["lo"], cfg["grid"]["hi"], cfg["grid"]["counts"])
    poles = _poles(cfg["poles"], 2, None)
    targets = [make_field(f) for f in cfg["targets"]]
    res = universal_series(targets, t, x, poles, cfg["tols"])
    j1, j2 = res.markers
    assert 0 < j1 < j2
    for c in res.certificates:
        assert c["achieved_sup_error"] <= c["budget"]
    diff = np.max(np.abs(res.partial_sum(j2).value(t, x) - targets[0].value(t, x)))
    assert diff > cfg["tols"][0]
    # partial sums reproduce the certificates exactly
    d1 = np.max(np.abs(res.partial_sum(j1).value(t, x) - targets[0].value(t, x)))
    assert d1 == pytest.approx(res.certificates[0]["achieved_sup_error"], abs=1e-15)


def test_series_block_exhausted():
    t, x = box_grid([0, -1], [1, 1], 5)
    with pytest.raises(BlockExhausted):
        universal_series([Trig([3.0])], t, x, np.array([[-0.5, 0.0]]), [1e-6])


def test_burgers_series_lipschitz_bound():
    m = ColeHopfMap(0.5)
    t, x = box_grid([0, -1], [1, 1], 7)
    poles = np.array([[-0.5, 0.0], [-0.3, 1.5], [-1.0, -1.0], [-0.2, -1.5], [-0.6, 0.8]])
    tg = kernel_pole(poles[3], 0.4) + kernel_pole(poles[4], 0.3)
    res = burgers_universal_series([tg], t, x, poles, [1e-3], m)
    for c in res.certificates:
        assert c["p_sup_error"] <= c["lipschitz_bound"] * c["achieved_sup_error"] * (1 + 1e-9) + 1e-14


def test_burgers_series_domain_violation():
    m = ColeHopfMap(1.0)
    t, x = box_grid([0, -1], [1, 1], 5)
    with pytest.raises(DomainViolation) as info:
        burgers_universal_series([Constant(2.0)], t, x, np.array([[-0.5, 0.0]]), [1e-3], m)
    assert info.value.point is not None


def test_ladder_output_is_caloric(root):
    cfg = json.loads((root / "configs" / "universal_ladder.json").read_text())
    rungs = [Rung(make_field(r["target"]), r["eps"], lo=tuple(r["box"]["lo"]), hi=tuple(r["box"]["hi"]))
             for r in cfg["rungs"]]
    res = ladder(rungs, Dictionary.from_json(cfg["dictionary"]), grid_count=cfg["grid_count"])
    # large ladder coefficients put the roundoff floor near h = 1e-2; stay above it
    for pt in [(0.0, 0.1), (1.7, -0.1)]:
        r1 = abs(heat_residual_fd(res.field, pt[0], [pt[1]], 0.05))
        r2 = abs(heat_residual_fd(res.field, pt[0], [pt[1]], 0.025))
        assert r2 <= 0.3 * r1 + 1e-12
