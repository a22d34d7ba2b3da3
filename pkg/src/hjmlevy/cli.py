"""Command line: hjmlevy {classify,solve,simulate,martingale,examples}."""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import yaml

from .curves import curve_from_config, on_grid, volatility_from_config
from .existence_classifier import EXISTS, NOT_EXISTS, ClassifyOptions, classify
from .field_solver import CONVERGED, DIVERGED, a_sup, bound_constant_c, solve_fixed_point
from .laplace_exponent import GrowthOptions, LaplaceExponent, cube_log_exponent, scaled_exponent
from .levy_model import AssumptionError, FiniteAtomList, LevyModel, LogModified, TruncatedStable, measure_from_config
from .levy_path import TriangularGrid, a_field, simulate_path, write_field_csv, write_path_csv
from .martingale import MartingaleAbort, martingale_test

DEFAULTS = {
    "t_star": 1.0,
    "model": {"drift": 0.0, "q": 0.0, "measure": {"family": "none"}},
    "lambda": {"constant": 0.2},
    "f0": {"kind": "constant", "level": 0.03},
    "grid": {"n": 20},
    "solver": {"tol": 1e-9, "max_iters": 500, "blowup_threshold": 1e12},
    "mc": {"paths": 1000, "seed": 0, "epsilon_cut": 0.0, "maturities": None},
    "growth": {"z_max": 1e12, "margin": 0.1},
    "classify": {"margin": 0.05},
    "exponent": {"kind": "model", "scale": 1.0, "alpha": 4.0, "gamma": 2.0, "beta": 0.0},
    "output": {"dir": "out"},
}

# blocks whose keys depend on a selector; replaced whole, then checked per kind
MEASURE_KEYS = {
    "none": set(),
    "TruncatedStable": {"p"},
    "LogModified": {"gamma"},
    "LogPowerDensity": {"gamma", "cut"},
    "UniformDensity": {"c", "support"},
    "FiniteAtomList": {"points", "masses"},
}
F0_KEYS = {"constant": {"level"}, "affine": {"level", "slope"}, "samples": {"knots", "values"}}
FREE_BLOCKS = {("model", "measure"), ("lambda",), ("f0",)}


class ConfigError(ValueError):
    pass


def _number(v):
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    if isinstance(v, list):
        return [_number(x) for x in v]
    if isinstance(v, dict):
        return {k: _number(x) for k, x in v.items()}
    return v


def _coerce(default, value, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if isinstance(default, int):
        try:
            f = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected an integer, got {value!r}") from None
        if f != int(f):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(f)
    return _number(value)


def _merge(defaults, user, prefix=()):
    if not isinstance(user, dict):
        raise ConfigError(f"{'.'.join(prefix) or '<root>'}: expected a mapping")
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        path = prefix + (key,)
        name = ".".join(path)
        if key not in defaults:
            raise ConfigError(f"unknown key {name}")
        if path in FREE_BLOCKS:
            if not isinstance(val, dict):
                raise ConfigError(f"{name}: expected a mapping")
            out[key] = _number(val)
        elif isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], val, path)
        else:
            out[key] = _coerce(defaults[key], val, name)
    return out


def _check_free_blocks(cfg):
    meas = cfg["model"]["measure"]
    fam = meas.get("family", "none")
    if fam not in MEASURE_KEYS:
        raise ConfigError(f"model.measure.family: unknown family {fam!r}")
    for k in meas:
        if k != "family" and k not in MEASURE_KEYS[fam]:
            raise ConfigError(f"unknown key model.measure.{k} for family {fam}")
    lam = cfg["lambda"]
    if set(lam) not in ({"constant"}, {"separable"}):
        raise ConfigError("lambda: give exactly one of 'constant' or 'separable'")
    if "separable" in lam:
        for n, term in enumerate(lam["separable"]):
            extra = set(term) - {"t_coeffs", "T_coeffs"}
            if extra:
                raise ConfigError(f"unknown key lambda.separable[{n}].{sorted(extra)[0]}")
    f0 = cfg["f0"]
    kind = f0.get("kind", "constant")
    if kind not in F0_KEYS:
        raise ConfigError(f"f0.kind: unknown kind {kind!r}")
    f0.setdefault("kind", kind)
    for k in f0:
        if k != "kind" and k not in F0_KEYS[kind]:
            raise ConfigError(f"unknown key f0.{k} for kind {kind}")
    if kind == "constant":
        f0.setdefault("level", 0.03)
    if kind == "affine":
        f0.setdefault("level", 0.03)
        f0.setdefault("slope", 0.0)
    if cfg["exponent"]["kind"] not in ("model", "cube_log"):
        raise ConfigError("exponent.kind: expected 'model' or 'cube_log'")
    if cfg["mc"]["maturities"] is None:
        cfg["mc"]["maturities"] = [cfg["t_star"]]


def _set_path(d, dotted, value):
    keys = dotted.split(".")
    for k in keys[:-1]:
        nxt = d.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"--set {dotted}: {k} is not a mapping")
        d = nxt
    d[keys[-1]] = value


def load_config(path=None, overrides=(), seed=None, out=None):
    """Effective config: defaults, then the file, then --set, --seed and --out."""
    user = {}
    if path:
        try:
            user = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        _set_path(user, key.strip(), yaml.safe_load(raw))
    cfg = _merge(DEFAULTS, user)
    if seed is not None:
        cfg["mc"]["seed"] = int(seed)
    if out is not None:
        cfg["output"]["dir"] = str(out)
    _check_free_blocks(cfg)
    return cfg


def config_hash(cfg):
    """Hash of everything that affects results (the output location does not)."""
    body = {k: v for k, v in cfg.items() if k != "output"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_model(cfg):
    block = dict(cfg["model"]["measure"])
    try:
        measure = measure_from_config(block)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"model.measure: {exc}") from None
    try:
        return LevyModel(drift=float(cfg["model"]["drift"]), gaussian_q=float(cfg["model"]["q"]), measure=measure)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None


def build_lambda(cfg):
    try:
        lam = volatility_from_config(cfg["lambda"])
    except ValueError as exc:
        raise ConfigError(f"lambda: {exc}") from None
    lo, _ = lam.bounds(cfg["t_star"])
    if not lo > 0:
        raise ConfigError("lambda: must be positive on the triangle")
    return lam


def build_exponent(cfg, model, lambda_bar):
    e = cfg["exponent"]
    if e["kind"] == "cube_log":
        exp = cube_log_exponent(e["alpha"], e["gamma"], e["beta"])
    else:
        exp = LaplaceExponent(model, lambda_bar)
    return exp if e["scale"] == 1.0 else scaled_exponent(exp, e["scale"])


def _maturity_indices(cfg, grid):
    idx = []
    for T in cfg["mc"]["maturities"]:
        j = round(T / grid.delta)
        if not (0 <= j <= grid.n) or abs(j * grid.delta - T) > 1e-9:
            raise ConfigError(f"mc.maturities: {T} is not a grid node")
        idx.append(j)
    return idx


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _outfile(cfg, stem, ext):
    d = Path(cfg["output"]["dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{stem}-{config_hash(cfg)}.{ext}"


def _echo_config(cfg):
    path = _outfile(cfg, "config", "yaml")
    path.write_text(yaml.safe_dump(cfg, sort_keys=True))
    return path


def cmd_classify(cfg):
    model = build_model(cfg)
    lam = build_lambda(cfg)
    bounds = lam.bounds(cfg["t_star"])
    opts = ClassifyOptions(margin=cfg["classify"]["margin"],
                           growth=GrowthOptions(z_max=cfg["growth"]["z_max"], margin=cfg["growth"]["margin"]))
    v = classify(model, bounds, cfg["t_star"], opts)
    print(f"verdict: {v.verdict}")
    print(f"{'rule':<16}{'conclusive':<12}{'verdict':<12}basis")
    for ev in v.evidence:
        print(f"{ev.rule:<16}{str(ev.conclusive):<12}{(ev.verdict or '-'):<12}{ev.basis}")
    path = _outfile(cfg, "classify", "txt")
    path.write_text(v.to_record())
    print(f"record: {path}")
    return 0


def _solve(cfg):
    model = build_model(cfg)
    lam = build_lambda(cfg)
    f0 = curve_from_config(cfg["f0"])
    grid = TriangularGrid(int(cfg["grid"]["n"]), cfg["t_star"])
    path = simulate_path(model, cfg["mc"]["seed"], cfg["mc"]["epsilon_cut"], cfg["t_star"])
    af = a_field(path, lam, f0, grid)
    lambda_bar = lam.bounds(cfg["t_star"])[1]
    exp = build_exponent(cfg, model, lambda_bar)
    s = cfg["solver"]
    out = solve_fixed_point(af.values, on_grid(lam, grid), exp, grid, tol=s["tol"], max_iters=s["max_iters"],
                            blowup_threshold=s["blowup_threshold"])
    out.bound_c = bound_constant_c(a_sup(af.values, grid), exp, lambda_bar, cfg["t_star"])
    return grid, out


def cmd_solve(cfg):
    grid, out = _solve(cfg)
    field_path = _outfile(cfg, "field", "csv")
    with open(field_path, "w", newline="") as fh:
        write_field_csv(grid, out.field.values, fh)
    hist_path = _outfile(cfg, "residuals", "csv")
    with open(hist_path, "w", newline="") as fh:
        fh.write("iteration,residual\n")
        for k, r in enumerate(out.residual_history, 1):
            fh.write(f"{k},{r!r}\n")
    print(f"status={out.status}")
    print(f"iterations={out.iterations}")
    print(f"residual={out.residual!r}")
    print(f"bound_c={out.bound_c!r}")
    if out.status == DIVERGED:
        i, j = out.blowup_node
        print(f"blowup_t={float(grid.t[i])!r}")
        print(f"blowup_T={float(grid.t[j])!r}")
    print(f"field: {field_path}")
    print(f"residuals: {hist_path}")
    return 0 if out.status == CONVERGED else 1


def cmd_simulate(cfg):
    model = build_model(cfg)
    path = simulate_path(model, cfg["mc"]["seed"], cfg["mc"]["epsilon_cut"], cfg["t_star"])
    out = _outfile(cfg, "path", "csv")
    with open(out, "w", newline="") as fh:
        write_path_csv(path, fh)
    print(f"jumps={len(path.jump_times)} slope={path.slope!r} epsilon={path.epsilon!r}")
    print(f"path: {out}")
    return 0


def cmd_martingale(cfg):
    model = build_model(cfg)
    lam = build_lambda(cfg)
    f0 = curve_from_config(cfg["f0"])
    grid = TriangularGrid(int(cfg["grid"]["n"]), cfg["t_star"])
    exp = None
    if cfg["exponent"]["kind"] != "model" or cfg["exponent"]["scale"] != 1.0:
        exp = build_exponent(cfg, model, lam.bounds(cfg["t_star"])[1])
    mc = cfg["mc"]
    rep = martingale_test(model, lam, f0, grid, _maturity_indices(cfg, grid), int(mc["paths"]), int(mc["seed"]),
                          mc["epsilon_cut"], exponent=exp, keep_samples=False)
    out = _outfile(cfg, "martingale", "csv")
    with open(out, "w", newline="") as fh:
        rep.write_csv(fh)
    print(rep.summary())
    print(f"report: {out}")
    return 0 if rep.passed else 1


EXAMPLES = [
    ("truncated-stable p=0.5", LevyModel(measure=TruncatedStable(0.5)), 1.0, EXISTS),
    ("truncated-stable p=1, lambda_bar T*=0.5", LevyModel(measure=TruncatedStable(1.0)), 0.5, EXISTS),
    ("truncated-stable p=1.5", LevyModel(measure=TruncatedStable(1.5)), 1.0, NOT_EXISTS),
    ("log-modified gamma=0.5", LevyModel(measure=LogModified(0.5)), 1.0, EXISTS),
    ("log-modified gamma=2", LevyModel(measure=LogModified(2.0)), 1.0, EXISTS),
    ("compound Poisson subordinator", LevyModel(drift=1.0, measure=FiniteAtomList((0.1, 0.5), (2.0, 1.0))), 1.0,
     EXISTS),
    ("drift only", LevyModel(drift=0.5), 1.0, EXISTS),
    ("gaussian q=0.5", LevyModel(gaussian_q=0.5, measure=TruncatedStable(0.5)), 1.0, NOT_EXISTS),
    ("negative jumps", LevyModel(measure=FiniteAtomList((-0.3, 0.2), (1.0, 1.0))), 1.0, NOT_EXISTS),
]


def run_examples(out=None):
    out = out or sys.stdout
    rows = []
    for name, model, lambda_bar, expected in EXAMPLES:
        v = classify(model, (lambda_bar, lambda_bar), 1.0)
        decisive = next((e.rule for e in v.evidence if e.conclusive), "-")
        rows.append((name, expected, v.verdict, decisive, v.verdict == expected))
    print(f"{'fixture':<42}{'expected':<12}{'got':<14}{'rule':<16}ok", file=out)
    for name, exp, got, rule, ok in rows:
        print(f"{name:<42}{exp:<12}{got:<14}{rule:<16}{'yes' if ok else 'NO'}", file=out)
    return rows


def cmd_examples(cfg):
    rows = run_examples()
    return 0 if all(r[-1] for r in rows) else 1


COMMANDS = {
    "classify": cmd_classify,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "martingale": cmd_martingale,
    "examples": cmd_examples,
}


def make_parser():
    p = argparse.ArgumentParser(prog="hjmlevy", description="Bounded HJM forward fields under Lévy noise.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (dotted path), repeatable")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="random seed (mc.seed)")
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, args.seed, args.out)
        if args.command != "examples":
            path = _echo_config(cfg)
            print(f"config: {path}")
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        if exc.report is not None:
            for k, v in vars(exc.report).items():
                print(f"  {k}={v}", file=sys.stderr)
        return 1
    except MartingaleAbort as exc:
        print(f"martingale test aborted: {exc} (seed {exc.seed}, path {exc.path_index})", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
