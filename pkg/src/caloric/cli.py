"""Command-line front end.

Every subcommand reads one JSON config, writes ``report.json`` (plus optional
CSV grids) into ``--out`` and exits 0 on success, 2 on a certified failure
(budget missed, condition fails) and 1 on usage or config errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import approx, colehopf, fields, kernel, runge, universal
from .errors import (BlockExhausted, BudgetMissed, CaloricError, DomainViolation,
                     MalformedSpec)
from .grids import box_grid
from .io import dump_json, read_samples_csv, rounded, to_plain, write_grid_csv
from .schemas import CONFIG_SCHEMAS, validate_config, validate_report

log = logging.getLogger("caloric")

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
CHUNK = 4096


class ConfigError(Exception):
    def __init__(self, message, pointer="/"):
        super().__init__(message)
        self.pointer = pointer


class Run:
    def __init__(self, config: dict, out: Path, threads: int):
        self.config = config
        self.out = out
        self.threads = max(1, int(threads))
        self.artifacts: list = []

    def evaluate(self, fn, t, x):
        """Evaluate ``fn(t, x)`` in fixed-size chunks; results do not depend on ``threads``."""
        t = np.asarray(t, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(t.size, -1)
        spans = [(s, min(s + CHUNK, t.size)) for s in range(0, t.size, CHUNK)]
        if self.threads == 1 or len(spans) == 1:
            parts = [fn(t[a:b], x[a:b]) for a, b in spans]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda ab: fn(t[ab[0]:ab[1]], x[ab[0]:ab[1]]), spans))
        return np.concatenate([np.atleast_1d(p) for p in parts]) if parts else np.zeros(0)

    def write_csv(self, name, t, x, values):
        write_grid_csv(self.out / name, t, x, values)
        self.artifacts.append(name)

    def write_json(self, name, doc):
        dump_json(self.out / name, doc)
        self.artifacts.append(name)


def _grid(doc):
    return box_grid(doc["lo"], doc["hi"], doc["counts"])


def _field(doc, pointer):
    try:
        return fields.make_field(doc)
    except MalformedSpec as exc:
        raise ConfigError(str(exc), pointer) from exc


def _poles(doc, n_plus_1, seed):
    if isinstance(doc, list):
        pts = np.asarray(doc, dtype=float).reshape(-1, n_plus_1)
        return pts
    t, x = _grid(doc["grid"])
    pts = np.column_stack([t, x])
    for box in doc.get("exclude", []):
        b = runge.Box.from_json(box)
        pts = pts[[not b.contains_point(p) for p in pts]]
    if "shuffle_seed" in doc or seed is not None:
        rng = np.random.default_rng(doc.get("shuffle_seed", seed))
        pts = pts[rng.permutation(len(pts))]
    return pts


def _order(doc, n):
    return kernel.DerivativeOrder(doc.get("j", 0), doc.get("alpha", [0] * n))


# --- subcommands ------------------------------------------------------------

def cmd_kernel_eval(run: Run):
    cfg = run.config
    t, x = _grid(cfg["grid"])
    n = x.shape[1]
    orders = [_order(o, n) for o in cfg.get("orders", [{"j": 0, "alpha": [0] * n}])]
    j_max = cfg.get("j_max", kernel.J_MAX)
    a_max = cfg.get("a_max", kernel.A_MAX)
    rows = []
    for i, order in enumerate(orders):
        if len(order.alpha) != n:
            raise ConfigError("alpha length must equal n", f"/orders/{i}/alpha")
        vals = run.evaluate(lambda tt, xx: kernel.phi_derivative(tt, xx, order, j_max, a_max), t, x)
        name = f"kernel_{i}.csv"
        run.write_csv(name, t, x, vals)
        rows.append({"j": order.j, "alpha": list(order.alpha), "file": name,
                     "max_abs": float(np.max(np.abs(vals))), "points": int(t.size)})
    return {"orders": rows}, True


def cmd_approx_riemann(run: Run):
    cfg = run.config
    target = _field(cfg["target"], "/target")
    try:
        boxes = approx.BoxPair.from_json(cfg["boxes"])
    except ValueError as exc:
        raise ConfigError(str(exc), "/boxes") from exc
    meshes = cfg.get("meshes", [cfg.get("mesh", 0.1)])
    tg, xg = boxes.k_grid(cfg.get("grid_count", 21))
    exact = target.value(tg, xg)
    runs = []
    sol = None
    for h in meshes:
        sol = approx.riemann_approximate(target, boxes, h)
        vals = run.evaluate(sol.value, tg, xg)
        poles = sol.poles
        outside = bool(len(poles) == 0 or not np.any(boxes.in_k(poles[:, 0], poles[:, 1:])))
        runs.append({"mesh": h, "terms": len(sol), "sup_error": float(np.max(np.abs(vals - exact))),
                     "poles_outside_K": outside})
    run.write_json("solution.json", sol.to_json())
    run.write_csv("approximant.csv", tg, xg, vals)
    errs = [r["sup_error"] for r in runs]
    monotone = all(b <= a * 1.05 for a, b in zip(errs, errs[1:]))
    ok = all(r["poles_outside_K"] for r in runs)
    return {"runs": runs, "sup_error": errs[-1], "monotone_within_5pct": monotone}, ok


def cmd_approx_fit(run: Run):
    cfg = run.config
    if "samples_csv" in cfg:
        t, x, v = read_samples_csv(cfg["samples_csv"])
    elif "sample_grid" in cfg and "target" in cfg:
        t, x = _grid(cfg["sample_grid"])
        v = _field(cfg["target"], "/target").value(t, x)
    else:
        raise ConfigError("need 'samples_csv' or both 'sample_grid' and 'target'", "/")
    n = x.shape[1]
    pts = _poles(cfg["poles"], n + 1, cfg.get("seed"))
    orders = cfg.get("orders")
    pole_orders = None if orders is None else [[_order(o, n) for o in orders]] * len(pts)
    pset = approx.PoleSet.from_array(pts, pole_orders)
    reg = cfg.get("reg", approx.DEFAULT_REG)
    if cfg.get("method", "lstsq") == "greedy":
        res = approx.greedy_fit(v, t, x, pset, cfg.get("max_terms", len(pset.columns())),
                                cfg.get("tol", 0.0), reg)
    else:
        res = approx.fit_fixed_poles((t, x, v), pset, reg)
    run.write_json("solution.json", res.solution.to_json())
    run.write_csv("residual.csv", t, x, res.solution.value(t, x) - v)
    out = res.report()
    ok = "tol" not in cfg or res.sup_residual <= cfg["tol"]
    return out, ok


def _burgers_grid_report(run: Run, field, t, x, h, tol):
    try:
        vals = run.evaluate(field.value, t, x)
    except DomainViolation as exc:
        return {"domain_violation": {"point": to_plain(exc.point), "value": exc.value}}, False
    run.write_csv("burgers.csv", t, x, vals)
    res = np.abs(colehopf.burgers_residual_fd(field, t, x, h))
    out = {"max_abs_residual": float(np.max(res)), "h": h, "points": int(t.size)}
    ok = tol is None or out["max_abs_residual"] <= tol
    return out, ok


def _map(doc):
    try:
        return colehopf.ColeHopfMap.from_json(doc)
    except ValueError as exc:
        raise ConfigError(str(exc), "/map") from exc


def cmd_burgers_transform(run: Run):
    cfg = run.config
    chmap = _map(cfg["map"])
    field = colehopf.heat_to_burgers(chmap, _field(cfg["heat_field"], "/heat_field"))
    t, x = _grid(cfg["grid"])
    return _burgers_grid_report(run, field, t, x, cfg.get("h", 1e-3), cfg.get("residual_tol"))


def cmd_burgers_compose(run: Run):
    cfg = run.config
    chmap = _map(cfg["map"])
    parts = [colehopf.heat_to_burgers(chmap, _field(f, f"/fields/{i}")) for i, f in enumerate(cfg["fields"])]
    field = parts[0]
    for p in parts[1:]:
        field = colehopf.compose(field, p)
    t, x = _grid(cfg["grid"])
    return _burgers_grid_report(run, field, t, x, cfg.get("h", 1e-3), cfg.get("residual_tol"))


def cmd_burgers_residual(run: Run):
    cfg = run.config
    chmap = _map(cfg["map"])
    field = colehopf.heat_to_burgers(chmap, _field(cfg["heat_field"], "/heat_field"))
    pts = np.asarray(cfg["points"], dtype=float)
    t, x = pts[:, 0], pts[:, 1:]
    h = cfg.get("h", 1e-2)
    floor = cfg.get("floor", 1e-12)
    ratio = cfg.get("ratio", 0.3)
    try:
        r1 = np.abs(colehopf.burgers_residual_fd(field, t, x, h))
        r2 = np.abs(colehopf.burgers_residual_fd(field, t, x, h / 2))
    except DomainViolation as exc:
        return {"domain_violation": str(exc)}, False
    decays = r2 <= ratio * r1 + floor
    rows = [{"point": p, "residual_h": a, "residual_h2": b, "decays": bool(d)}
            for p, a, b, d in zip(pts.tolist(), r1.tolist(), r2.tolist(), decays)]
    return {"h": h, "rows": rows, "all_decay": bool(np.all(decays))}, bool(np.all(decays))


def _dictionary(cfg, n):
    return universal.Dictionary.from_json(cfg.get("dictionary", {}), n=n)


def _rung(doc, i):
    target = _field(doc["target"], f"/rungs/{i}/target")
    if "box" in doc:
        return universal.Rung(target, doc["eps"], lo=tuple(doc["box"]["lo"]), hi=tuple(doc["box"]["hi"]))
    if "ball" in doc:
        return universal.Rung(target, doc["eps"], center=tuple(doc["ball"]["center"]),
                              radius=doc["ball"]["radius"])
    raise ConfigError("rung needs 'box' or 'ball'", f"/rungs/{i}")


def cmd_universal_ladder(run: Run):
    cfg = run.config
    n = cfg.get("n", 1)
    rungs = [_rung(r, i) for i, r in enumerate(cfg["rungs"])]
    try:
        res = universal.ladder(rungs, _dictionary(cfg, n), grid_count=cfg.get("grid_count", 15),
                               reg=cfg.get("reg", approx.DEFAULT_REG))
    except BudgetMissed as exc:
        return {"budget_missed": {"step": exc.step, "achieved_sup_error": exc.achieved,
                                  "budget": exc.budget}}, False
    except ValueError as exc:
        raise ConfigError(str(exc), "/rungs") from exc
    run.write_json("field.json", res.field.to_json())
    return {"certificates": res.certificates, "steps": res.report, "radii": res.radii}, True


def cmd_universal_series(run: Run):
    cfg = run.config
    t, x = _grid(cfg["grid"])
    n = x.shape[1]
    targets = [_field(f, f"/targets/{i}") for i, f in enumerate(cfg["targets"])]
    if len(cfg["tols"]) != len(targets):
        raise ConfigError("one tolerance per target is required", "/tols")
    poles = _poles(cfg["poles"], n + 1, cfg.get("seed"))
    kw = {"block_size": cfg.get("block_size"), "reg": cfg.get("reg", approx.DEFAULT_REG)}
    try:
        if "map" in cfg:
            res = universal.burgers_universal_series(targets, t, x, poles, cfg["tols"], _map(cfg["map"]), **kw)
            heat, certs = res.heat, res.certificates
        else:
            heat = universal.universal_series(targets, t, x, poles, cfg["tols"], **kw)
            certs = heat.certificates
    except BlockExhausted as exc:
        return {"block_exhausted": {"target": exc.target_index, "achieved_sup_error": exc.achieved}}, False
    except DomainViolation as exc:
        return {"domain_violation": {"point": to_plain(exc.point), "value": exc.value}}, False
    run.write_json("series.json", {"n": n, "coefficients": heat.coefficients, "poles": heat.poles,
                                   "markers": heat.markers})
    return {"markers": heat.markers, "certificates": certs, "terms": len(heat.coefficients)}, True


def cmd_universal_translates(run: Run):
    cfg = run.config
    n = cfg.get("n", 1)
    targets = [_field(f, f"/targets/{i}") for i, f in enumerate(cfg["targets"])]
    kw = {"gap": cfg.get("gap", 1.0), "axis": cfg.get("axis", 0),
          "grid_count": cfg.get("grid_count", 15), "reg": cfg.get("reg", approx.DEFAULT_REG)}
    try:
        if "map" in cfg:
            res = universal.burgers_universal_translates(targets, cfg["radii"], _dictionary(cfg, n),
                                                         _map(cfg["map"]), **kw)
            heat, certs = res.heat, res.certificates
        else:
            heat = universal.universal_translates(targets, cfg["radii"], _dictionary(cfg, n), **kw)
            certs = heat.certificates
    except BudgetMissed as exc:
        return {"budget_missed": {"step": exc.step, "achieved_sup_error": exc.achieved,
                                  "budget": exc.budget}}, False
    except DomainViolation as exc:
        return {"domain_violation": {"point": to_plain(exc.point), "value": exc.value}}, False
    run.write_json("field.json", heat.field.to_json())
    ok = all(c["achieved_sup_error"] < c["budget"] for c in certs)
    return {"centers": heat.centers, "certificates": certs}, ok


def _region(doc, pointer):
    try:
        return runge.Region.from_json(doc)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc), pointer) from exc


def cmd_runge_jones(run: Run):
    cfg = run.config
    v = runge.jones_check(_region(cfg["region"], "/region"), cfg.get("resolution", runge.DEFAULT_RESOLUTION))
    return v.to_json(), v.ok


def cmd_runge_diaz(run: Run):
    cfg = run.config
    v = runge.diaz_check(_region(cfg["omega1"], "/omega1"), _region(cfg["omega2"], "/omega2"),
                         cfg.get("resolution", runge.DEFAULT_RESOLUTION))
    return v.to_json(), v.ok


def cmd_poles_validate(run: Run):
    cfg = run.config
    K = [runge.Box.from_json(b) for b in cfg["K"]]
    U = runge.Box.from_json(cfg["U"])
    poles = _poles(cfg["poles"], U.n + 1, cfg.get("seed"))
    cov = runge.validate_pole_set(K, U, poles, cfg.get("resolution", runge.DEFAULT_RESOLUTION))
    return {**cov.to_json(), "pole_count": int(len(poles))}, cov.ok


COMMANDS = {
    "kernel-eval": cmd_kernel_eval,
    "approx-riemann": cmd_approx_riemann,
    "approx-fit": cmd_approx_fit,
    "burgers-transform": cmd_burgers_transform,
    "burgers-compose": cmd_burgers_compose,
    "burgers-residual": cmd_burgers_residual,
    "universal-ladder": cmd_universal_ladder,
    "universal-series": cmd_universal_series,
    "universal-translates": cmd_universal_translates,
    "runge-jones": cmd_runge_jones,
    "runge-diaz": cmd_runge_diaz,
    "poles-validate": cmd_poles_validate,
}
assert set(COMMANDS) == set(CONFIG_SCHEMAS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caloric", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    return parser


def run_command(command: str, config: dict, out: Path, threads: int = 1) -> tuple:
    """Run one subcommand in-process; returns (exit_code, report)."""
    if isinstance(config, dict) and config.get("command", command) != command:
        raise ConfigError(f"config is for {config['command']!r}, not {command!r}", "/command")
    errors = validate_config(command, config)
    if errors:
        pointer, msg = errors[0]
        raise ConfigError(msg, pointer)
    out.mkdir(parents=True, exist_ok=True)
    run = Run(config, out, threads)
    results, ok = COMMANDS[command](run)
    results = to_plain(results)
    code = EXIT_OK if ok else EXIT_FAILED
    report = {"command": command, "status": "ok" if ok else "failed", "exit_code": code,
              "inputs": to_plain(config), "results": results, "display": rounded(results),
              "artifacts": sorted(run.artifacts + ["report.json"])}
    problems = validate_report(report)
    if problems:
        raise RuntimeError(f"emitted report violates its schema: {problems[0]}")
    dump_json(out / "report.json", report)
    return code, report


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        code, report = run_command(args.command, config, Path(args.out), args.threads)
    except ConfigError as exc:
        print(f"config error at {exc.pointer}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CaloricError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.info("%s finished with status %s", args.command, report["status"])
    if args.verbose:
        print(json.dumps(report["display"], indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
