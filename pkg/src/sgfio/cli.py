"""Batch experiment runner.

A JSON config names one experiment, the presets it uses and the grid and
orders.  ``run_experiment`` writes ``report.json`` (deterministic for a given
config and seed), ``metadata.json`` (timestamps and environment) and flat CSV
tables into one output directory per experiment.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import calculus as C
from . import operators as O
from . import presets as P
from . import verify as V
from .grid import TEST_FUNCTION_KINDS, make_grid, save_binary, test_function
from .phases import phase_probe
from .symbols import seminorm_probe
from .weights import default_probes, theta_weight, weight_probe

SCHEMA_VERSION = 1
KINDS = ("check-symbol", "check-phase", "check-weight", "apply", "compose", "parametrix",
         "egorov", "l2norm", "remainder")
OUT_ENV = "SGFIO_OUT"
DEFAULT_OUT = "sgfio-out"
MAX_ORDER = 6
MAX_K = 4

# fields each experiment requires, beyond the common ones
REQUIRED = {
    "check-symbol": ("symbol",),
    "check-phase": ("phase",),
    "check-weight": ("weight",),
    "apply": ("operator", "symbol", "grid"),
    "compose": ("mode", "symbol", "amplitude", "phase", "grid"),
    "parametrix": ("amplitude", "phase"),
    "egorov": ("symbol", "amplitude", "phase"),
    "l2norm": ("operator", "symbol"),
    "remainder": ("symbol", "amplitude", "phase", "grid"),
}

DEFAULTS = {
    "dim": 1,
    "orders": {"M": 2, "K": 2},
    "classes": {"r": 1.0, "rho": 1.0},
    "tolerances": {},
    "test_functions": [{"kind": "gaussian"}],
    "output": {"save_functions": True},
    "seed": 0,
    "name": "",
}

FIELDS = ("schema_version", "experiment", "name", "dim", "symbol", "amplitude", "phase",
          "weight", "operator", "mode", "variant", "grid", "grids", "orders", "classes",
          "tolerances", "test_functions", "rays", "output", "seed")


class ConfigError(ValueError):
    """All violations found in a config, each as ``(field path, message)``."""

    def __init__(self, violations: list):
        self.violations = violations
        super().__init__("; ".join(f"{p}: {m}" for p, m in violations))


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``data`` holds the normalized document."""

    data: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.data["experiment"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def get(self, key, default=None):
        return self.data.get(key, default)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# parsing

def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _check_preset(ref, table, kind, path, errs):
    if isinstance(ref, str):
        ref = {"name": ref}
    if not isinstance(ref, dict) or "name" not in ref:
        errs.append((path, f"expected a {kind} preset name or {{name, params}} object"))
        return None
    name = ref["name"]
    if name not in table:
        e = P.PresetError(kind, str(name), table)
        errs.append((f"{path}.name", str(e)))
    params = ref.get("params", {})
    if not isinstance(params, dict):
        errs.append((f"{path}.params", "expected an object"))
        params = {}
    for k, v in params.items():
        if not _is_num(v):
            errs.append((f"{path}.params.{k}", "expected a finite number"))
    extra = set(ref) - {"name", "params"}
    for k in sorted(extra):
        errs.append((f"{path}.{k}", "unknown field"))
    return {"name": name, "params": dict(params)}


def _check_grid(g, path, errs):
    if not isinstance(g, dict):
        errs.append((path, "expected an object with points_per_axis and half_width"))
        return None
    N, L = g.get("points_per_axis"), g.get("half_width")
    if not _is_int(N) or N < 4 or N % 2:
        errs.append((f"{path}.points_per_axis", "must be an even integer >= 4"))
    if not _is_num(L) or L <= 0:
        errs.append((f"{path}.half_width", "must be a positive number"))
    for k in sorted(set(g) - {"points_per_axis", "half_width"}):
        errs.append((f"{path}.{k}", "unknown field"))
    return {"points_per_axis": N, "half_width": float(L) if _is_num(L) else L}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config; raises :class:`ConfigError` listing every violation."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"invalid JSON: {exc}")]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([("$", "config must be a JSON object")])
    errs: list = []
    out = copy.deepcopy(DEFAULTS)
    for k in sorted(set(raw) - set(FIELDS)):
        errs.append((k, "unknown field"))
    if raw.get("schema_version") != SCHEMA_VERSION:
        errs.append(("schema_version", f"must be {SCHEMA_VERSION}"))
    out["schema_version"] = SCHEMA_VERSION
    kind = raw.get("experiment")
    if kind not in KINDS:
        errs.append(("experiment", f"must be one of {', '.join(KINDS)}"))
    out["experiment"] = kind
    if "name" in raw:
        if not isinstance(raw["name"], str):
            errs.append(("name", "expected a string"))
        out["name"] = raw["name"]
    dim = raw.get("dim", 1)
    if dim not in (1, 2) or not _is_int(dim):
        errs.append(("dim", "must be 1 or 2"))
    out["dim"] = dim
    for key, table, what in (("symbol", P.SYMBOLS, "symbol"), ("amplitude", P.SYMBOLS, "symbol"),
                             ("phase", P.PHASES, "phase"), ("weight", P.WEIGHTS, "weight")):
        if key in raw:
            out[key] = _check_preset(raw[key], table, what, key, errs)
    if "operator" in raw:
        if raw["operator"] not in ("pdo", "fio1", "fio2"):
            errs.append(("operator", "must be one of pdo, fio1, fio2"))
        out["operator"] = raw["operator"]
        if raw["operator"] in ("fio1", "fio2") and "phase" not in raw:
            errs.append(("phase", "required for operator " + str(raw["operator"])))
    if "mode" in raw:
        if raw["mode"] not in C.MODES + C.PAIR_ORDERS:
            errs.append(("mode", f"must be one of {', '.join(C.MODES + C.PAIR_ORDERS)}"))
        out["mode"] = raw["mode"]
    if "variant" in raw:
        if raw["variant"] not in ("sandwich_adjoint", "conjugation"):
            errs.append(("variant", "must be sandwich_adjoint or conjugation"))
        out["variant"] = raw["variant"]
    if "grid" in raw:
        out["grid"] = _check_grid(raw["grid"], "grid", errs)
    if "grids" in raw:
        if not isinstance(raw["grids"], list) or not raw["grids"]:
            errs.append(("grids", "expected a nonempty list of grids"))
        else:
            out["grids"] = [_check_grid(g, f"grids[{i}]", errs) for i, g in enumerate(raw["grids"])]
    orders = dict(DEFAULTS["orders"])
    if "orders" in raw:
        o = raw["orders"]
        if not isinstance(o, dict):
            errs.append(("orders", "expected an object"))
            o = {}
        for k in sorted(set(o) - {"M", "K"}):
            errs.append((f"orders.{k}", "unknown field"))
        if "M" in o:
            Ms = o["M"] if isinstance(o["M"], list) else [o["M"]]
            if not Ms or not all(_is_int(m) and 0 <= m <= MAX_ORDER for m in Ms):
                errs.append(("orders.M", f"must be an integer or list of integers in 0..{MAX_ORDER}"))
            orders["M"] = o["M"]
        if "K" in o:
            if not _is_int(o["K"]) or not 0 <= o["K"] <= MAX_K:
                errs.append(("orders.K", f"must be an integer in 0..{MAX_K}"))
            orders["K"] = o["K"]
    out["orders"] = orders
    for key in ("classes", "tolerances"):
        if key in raw:
            v = raw[key]
            if not isinstance(v, dict) or not all(_is_num(x) for x in v.values()):
                errs.append((key, "expected an object of numbers"))
            else:
                out[key] = {**out[key], **v}
    if "test_functions" in raw:
        tf = raw["test_functions"]
        if not isinstance(tf, list) or not tf:
            errs.append(("test_functions", "expected a nonempty list"))
        else:
            for i, t in enumerate(tf):
                if not isinstance(t, dict) or t.get("kind") not in TEST_FUNCTION_KINDS:
                    errs.append((f"test_functions[{i}].kind",
                                 f"must be one of {', '.join(TEST_FUNCTION_KINDS)}"))
            out["test_functions"] = tf
    if "rays" in raw:
        r = raw["rays"]
        if not isinstance(r, list) or not all(_is_num(v) for v in r):
            errs.append(("rays", "expected a list of base points (numbers)"))
        out["rays"] = r
    if "output" in raw:
        o = raw["output"]
        if not isinstance(o, dict) or not all(isinstance(v, bool) for v in o.values()):
            errs.append(("output", "expected an object of booleans"))
        else:
            out["output"] = {**out["output"], **o}
    if "seed" in raw:
        s = raw["seed"]
        if not _is_int(s) or not 0 <= s < 2 ** 64:
            errs.append(("seed", "must be an unsigned 64-bit integer"))
        out["seed"] = s
    for key in REQUIRED.get(kind, ()):
        if key not in raw:
            errs.append((key, f"required for experiment {kind}"))
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(out)


# ---------------------------------------------------------------------------
# running

def _preset(cfg, key, maker):
    ref = cfg.get(key)
    return maker(ref["name"], cfg.get("dim"), **ref["params"])


def _grid(g: dict, dim: int = 1):
    return make_grid(dim, g["points_per_axis"], g["half_width"]) if g else None


def _operator(cfg):
    a = _preset(cfg, "symbol", P.make_symbol)
    kind = cfg.get("operator")
    if kind == "pdo":
        return O.pdo(a)
    phase = _preset(cfg, "phase", P.make_phase)
    return O.fio1(phase, a) if kind == "fio1" else O.fio2(phase, a)


def _tests(cfg, grid):
    out = []
    for t in cfg.get("test_functions"):
        params = {k: v for k, v in t.items() if k != "kind"}
        out.append(test_function(grid, t["kind"], **params))
    return out


def _Ms(cfg):
    M = cfg.get("orders")["M"]
    return sorted(M) if isinstance(M, list) else [M]


def _tol(cfg, key, default):
    return cfg.get("tolerances").get(key, default)


def _run_check_symbol(cfg, ctx):
    a = _preset(cfg, "symbol", P.make_symbol)
    if cfg.get("weight"):
        w = _preset(cfg, "weight", P.make_weight)
    else:
        m, mu = a.meta.get("order", (0.0, 0.0))
        w = theta_weight(m, mu, cfg.get("dim"))
    cl = cfg.get("classes")
    rep = seminorm_probe(a, w, cl["r"], cl["rho"], cfg.get("orders")["K"],
                         default_probes(cfg.get("dim"), ctx["seed"]),
                         _tol(cfg, "threshold", 100.0))
    ctx["tables"]["seminorms"] = (["alpha", "beta", "constant"],
                                  [[_mi(a_), _mi(b_), c] for a_, b_, c in rep.orders])
    return {"seminorm_probe": rep.to_dict(), "weight": w.name}, {"seminorm_probe": rep.passed}


def _mi(m):
    return "|".join(str(int(v)) for v in m)


def _run_check_phase(cfg, ctx):
    phase = _preset(cfg, "phase", P.make_phase)
    rep = phase_probe(phase, default_probes(cfg.get("dim"), ctx["seed"]))
    need = "regular" if _tol(cfg, "require_regular", 1) else "simple"
    ok = rep.regular if need == "regular" else rep.simple
    ctx["tables"]["phase_seminorms"] = (["alpha", "beta", "constant"],
                                        [[_mi(a_), _mi(b_), c] for a_, b_, c in rep.seminorms])
    body = {"phase_probe": rep.to_dict(), "required": need}
    if not ok:
        body["failed_probe"] = f"phase_probe({phase.name})"
        body["failures"] = rep.failures()
    return body, {f"phase_probe.{need}": ok}


def _run_check_weight(cfg, ctx):
    w = _preset(cfg, "weight", P.make_weight)
    cl = cfg.get("classes")
    rep = weight_probe(w, cl["r"], cl["rho"], cfg.get("orders")["K"],
                       default_probes(cfg.get("dim"), ctx["seed"]),
                       threshold=_tol(cfg, "threshold", 100.0), seed=ctx["seed"])
    ctx["tables"]["weight_constants"] = (["alpha", "beta", "constant"],
                                         [[_mi(a_), _mi(b_), c] for a_, b_, c in rep.orders])
    return {"weight_probe": rep.to_dict()}, {"weight_probe": rep.passed}


def _run_apply(cfg, ctx):
    op = _operator(cfg)
    g = _grid(cfg.get("grid"), cfg.get("dim"))
    rows, flags, body = [], {}, {"operator": op.describe(), "grid": g.describe(), "outputs": []}
    for i, u in enumerate(_tests(cfg, g)):
        with O.recording_tail_warnings() as tails:
            v = O.apply(op, u, ctx["threads"])
        if cfg.get("output").get("save_functions"):
            save_binary(u, ctx["out"] / f"input_{i}.bin")
            save_binary(v, ctx["out"] / f"output_{i}.bin")
        rows.append([i, u.norm(), v.norm(), len(tails)])
        body["outputs"].append({"index": i, "input_norm": u.norm(), "output_norm": v.norm(),
                                "tail_warnings": tails})
        flags[f"tail_mass[{i}]"] = not tails
    ctx["tables"]["apply"] = (["test_function", "input_norm", "output_norm", "tail_warnings"],
                              rows)
    return body, flags


def _run_compose(cfg, ctx):
    p = _preset(cfg, "symbol", P.make_symbol)
    a = _preset(cfg, "amplitude", P.make_symbol)
    phase = _preset(cfg, "phase", P.make_phase)
    g = _grid(cfg.get("grid"), cfg.get("dim"))
    tests = _tests(cfg, g)
    mode = cfg.get("mode")
    Ms = _Ms(cfg)
    rows = []
    if mode in C.PAIR_ORDERS:
        defects = {}
        for M in Ms:
            res = C.compose_fio_pair(mode, p, a, phase, max(M, 1))
            defects[M] = V.pair_defect(res, p, a, phase, tests, ctx["threads"])
        monotone = all(defects[b][i] <= defects[a_][i] * (1 + 1e-9)
                       for a_, b in zip(Ms, Ms[1:]) for i in range(len(tests)))
    else:
        rep = V.remainder_probe(p, a, phase, Ms, tests, mode=mode, threads=ctx["threads"])
        defects, monotone = rep.defects, rep.monotone
    for M in Ms:
        for i, v in enumerate(defects[M]):
            rows.append([M, i, v])
    ctx["tables"]["defects"] = (["M", "test_function", "relative_defect"], rows)
    body = {"mode": mode, "Ms": Ms, "defects": {str(k): v for k, v in defects.items()}}
    return body, {"defects_monotone": monotone}


def _run_parametrix(cfg, ctx):
    a = _preset(cfg, "amplitude", P.make_symbol)
    phase = _preset(cfg, "phase", P.make_phase)
    M = max(_Ms(cfg))
    res = C.parametrix(a, phase, M=max(M, 1), K=cfg.get("orders")["K"],
                       threshold=_tol(cfg, "threshold", 100.0))
    rows = [[k + 1, r.max_constant, r.passed] for k, r in enumerate(res.reports)]
    ctx["tables"]["parametrix"] = (["step", "max_constant", "pass"], rows)
    body = {"steps": len(res.steps), "ellipticity": res.ellipticity.to_dict(),
            "reports": [r.to_dict() for r in res.reports]}
    return body, {f"defect_step_{k + 1}": r.passed for k, r in enumerate(res.reports)}


def _run_egorov(cfg, ctx):
    p = _preset(cfg, "symbol", P.make_symbol)
    a = _preset(cfg, "amplitude", P.make_symbol)
    phase = _preset(cfg, "phase", P.make_phase)
    variant = cfg.get("variant", "sandwich_adjoint")
    if variant == "sandwich_adjoint":
        chain_sym = C.sandwich_chain(p, a, phase).symbol
    else:
        par = C.parametrix(a, phase, M=2)
        first = C.compose_mixed("fio1_pdo", p, a, phase, 2, check_hypotheses=False)
        chain_sym = C.compose_fio_pair("I_II", first.symbol, par.symbol, phase, 2,
                                       check_hypotheses=False).symbol
    eg = C.egorov_symbol(p, a, phase, variant)
    ts = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    xi = np.sqrt(ts ** 2 - 1)[None]
    limit = _tol(cfg, "ratio", 10.0)
    rows, flags, body = [], {}, {"variant": variant, "rays": {}}
    for x0 in cfg.get("rays", [0.5, 1.5, -1.0]):
        x = np.full_like(xi, float(x0))
        dd = np.abs(np.asarray(chain_sym.evaluate(x, xi)) - np.asarray(eg.evaluate(x, xi))) * ts
        ratio = float(dd.max() / dd[0])
        body["rays"][str(x0)] = {"scaled_discrepancy": dd.tolist(), "ratio": ratio}
        flags[f"bounded@x={x0}"] = ratio <= limit
        rows += [[x0, t, v] for t, v in zip(ts, dd)]
    ctx["tables"]["egorov"] = (["x", "japanese_xi", "scaled_discrepancy"], rows)
    return body, flags


def _run_l2norm(cfg, ctx):
    op = _operator(cfg)
    gs = cfg.get("grids") or [{"points_per_axis": N, "half_width": L}
                              for N in (64, 128, 256) for L in (5.0, 10.0, 20.0)]
    grids = [_grid(g, cfg.get("dim")) for g in gs]
    tab = V.norm_table(op, grids, seed=ctx["seed"], threads=ctx["threads"])
    rows = []
    schur_ok = True
    for g, r in zip(grids, tab["rows"]):
        try:
            s = V.schur_bound(op, g)
        except O.TailMassError:
            s = None
        if s is not None:
            r["schur"] = s
            schur_ok &= s >= r["estimate"] - 1e-6
        rows.append([g.points_per_axis, g.half_width, r["estimate"], r["iterations"],
                     r["converged"], "" if s is None else s])
    ctx["tables"]["norms"] = (["N", "L", "norm", "iterations", "converged", "schur"], rows)
    flags = {"spread": tab["spread"] <= _tol(cfg, "spread", 0.10), "schur_dominance": schur_ok}
    return {"operator": op.describe(), "table": tab}, flags


def _run_remainder(cfg, ctx):
    p = _preset(cfg, "symbol", P.make_symbol)
    a = _preset(cfg, "amplitude", P.make_symbol)
    phase = _preset(cfg, "phase", P.make_phase)
    g = _grid(cfg.get("grid"), cfg.get("dim"))
    rays = [V.xi_ray([float(x0)]) for x0 in cfg.get("rays", [0.5, -1.5])]
    rep = V.remainder_probe(p, a, phase, _Ms(cfg), _tests(cfg, g), rays,
                            mode=cfg.get("mode", "pdo_fio1"), threads=ctx["threads"])
    ctx["tables"]["remainder"] = (["quantity", "M", "index", "value"], rep.csv_rows())
    return rep.to_dict(), {"monotone": rep.monotone, "slopes": rep.slopes_ok}


RUNNERS = {
    "check-symbol": _run_check_symbol, "check-phase": _run_check_phase,
    "check-weight": _run_check_weight, "apply": _run_apply, "compose": _run_compose,
    "parametrix": _run_parametrix, "egorov": _run_egorov, "l2norm": _run_l2norm,
    "remainder": _run_remainder,
}


def write_csv(path: Path, header: list, rows: list) -> None:
    """Comma-separated, '.' decimals, mandatory header, floats via ``repr``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _dump(obj) -> str:
    from .acceptance import _plain
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _metadata(started: float, extra: dict | None = None) -> dict:
    now = _dt.datetime.now(_dt.timezone.utc)
    return {"started": _dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
            "finished": now.isoformat(), "seconds": time.time() - started,
            "version": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "platform": platform.platform(), **(extra or {})}


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1) -> tuple[dict, int]:
    """Run one experiment; returns ``(report, exit status)``.

    Module errors are captured into the report (status 1); whatever was
    produced before the error is still written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    ctx = {"out": out, "threads": threads, "seed": cfg.seed, "tables": {}}
    report = {"config": cfg.to_dict(), "experiment": cfg.kind}
    try:
        body, flags = RUNNERS[cfg.kind](cfg, ctx)
        report["result"] = body
        report["checks"] = {k: bool(v) for k, v in flags.items()}
        report["pass"] = all(report["checks"].values())
    except Exception as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["checks"] = {}
        report["pass"] = False
    for name, (header, rows) in ctx["tables"].items():
        write_csv(out / f"{name}.csv", header, rows)
    (out / "report.json").write_text(_dump(report))
    (out / "metadata.json").write_text(_dump(_metadata(started, {"threads": threads})))
    return report, 0 if report["pass"] else 1


def run_acceptance_suite(out_dir, threads: int = 1, only=None) -> tuple[dict, int]:
    """Run the acceptance criteria and write ``report.json`` and ``acceptance.csv``."""
    from .acceptance import run_acceptance

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    results = run_acceptance(only, threads)
    report = {"criteria": [r.to_dict() for r in results],
              "pass": all(r.passed for r in results)}
    write_csv(out / "acceptance.csv", ["criterion", "name", "pass", "summary"],
              [[r.number, r.name, r.passed, r.summary] for r in results])
    (out / "report.json").write_text(_dump(report))
    timings = {str(r.number): r.seconds for r in results}
    (out / "metadata.json").write_text(_dump(_metadata(started, {"criterion_seconds": timings})))
    for r in results:
        print(r.line())
    return report, 0 if report["pass"] else 1


# ---------------------------------------------------------------------------
# command line

def _out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _load(path: str, kind: str | None, seed: int | None) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text())
    if kind is not None:
        if raw.get("experiment", kind) != kind:
            raise ConfigError([("experiment", f"config is {raw.get('experiment')!r}, "
                                              f"subcommand is {kind!r}")])
        raw["experiment"] = kind
    if seed is not None:
        raw["seed"] = seed
    return parse_config(json.dumps(raw))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgfio", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"sgfio {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, action="append",
                       help="JSON experiment config (repeatable for suite)")
        p.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads per apply")

    for kind in KINDS:
        common(sub.add_parser(kind, help=f"run one {kind} experiment"))
    common(sub.add_parser("run", help="run the experiment named in the config"))
    s = sub.add_parser("suite", help="run several configs and/or the acceptance criteria")
    common(s, config_required=False)
    s.add_argument("--acceptance", action="store_true", help="run the acceptance criteria")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--jobs", type=int, default=1, help="experiments run concurrently")
    v = sub.add_parser("validate", help="check configs without running them")
    v.add_argument("--config", required=True, action="append")
    sub.add_parser("presets", help="list preset names")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print(json.dumps(P.listing(), indent=2, sort_keys=True))
        return 0
    if args.command == "validate":
        status = 0
        for path in args.config:
            try:
                _load(path, None, None)
                print(f"{path}: ok")
            except (ConfigError, json.JSONDecodeError, OSError) as exc:
                status = 2
                for p, m in getattr(exc, "violations", [("$", str(exc))]):
                    print(f"{path}: {p}: {m}", file=sys.stderr)
        return status
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    root = _out_root(args.out)
    status = 0
    if args.command == "suite":
        if not args.acceptance and not args.config:
            print("suite needs --acceptance and/or --config", file=sys.stderr)
            return 2
        if args.acceptance:
            only = [int(v) for v in args.only.split(",")] if args.only else None
            _, st = run_acceptance_suite(root / "acceptance", args.threads, only)
            status = max(status, st)
    kind = args.command if args.command in KINDS else None
    jobs = []
    for path in args.config or []:
        try:
            cfg = _load(path, kind, args.seed)
        except (ConfigError, json.JSONDecodeError, OSError) as exc:
            for p, m in getattr(exc, "violations", [("$", str(exc))]):
                print(f"{path}: {p}: {m}", file=sys.stderr)
            status = max(status, 2)
            continue
        jobs.append((cfg, cfg.get("name") or Path(path).stem))
    names = [n for _, n in jobs]
    if len(set(names)) != len(names):
        print("experiment names (or config file stems) must be unique", file=sys.stderr)
        return 2
    workers = getattr(args, "jobs", 1) or 1
    # experiments are independent and write to separate directories
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(run_experiment, cfg, root / name, args.threads) for cfg, name in jobs]
        for (cfg, name), fut in zip(jobs, futs):
            report, st = fut.result()
            print(f"{'PASS' if report['pass'] else 'FAIL'} {cfg.kind} {name} -> {root / name}")
            if "error" in report:
                print(f"  error: {report['error']['type']}: {report['error']['message']}",
                      file=sys.stderr)
            status = max(status, st)
    return status


__all__ = ["SCHEMA_VERSION", "KINDS", "ConfigError", "ExperimentConfig", "parse_config",
           "run_experiment", "run_acceptance_suite", "write_csv", "build_parser", "main"]
