"""Command line front end.

One JSON document describes a run; command line flags override single fields
of it.  Commands:

  bounds        cluster-count bound K and its ingredients
  energy        score a configuration file
  doublebubble  solve one standard double bubble
  optimize      search for a low-energy cluster partition
  verify        run the mass-transfer competitors on a configuration file
  sweep         tabulate K or the optimised energy over one parameter

Exit status: 0 on success, 2 on invalid input, 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .bounds import cluster_count_bound
from .competitors import actual_floor, dispatch_move, verify_chain
from .coulomb import QuadratureSpec
from .energy import cluster_energy, two_ball_upper_bound
from .errors import NotMixed, PreconditionViolated, SchemaError, ValidationError
from .geometry import double_bubble_area, hutchings_lower_bound, solve_double_bubble, sphere_area
from .io import cluster_to_dict, dump_configuration, dumps, load_configuration, write_csv
from .model import ProblemParams, ball_radius
from .optimizer import DEFAULT_BUDGET, minimize_E0_chains

COMMANDS = ("bounds", "energy", "doublebubble", "optimize", "verify", "sweep")
PARAM_KEYS = ("M1", "M2", "gamma11", "gamma12", "gamma22", "kernel_prefactor")
SWEEP_QUANTITIES = ("K", "E0")
FORMATS = ("json", "csv")

_SCHEMA = {
    "command": None,
    "params": {k: None for k in PARAM_KEYS},
    "quadrature": {"method": None, "samples": None, "grid_h": None, "seed": None},
    "optimizer": {"budget": None, "seeds": None, "jobs": None},
    "sweep": {"param": None, "values": None, "quantity": None},
    "output": {"path": None, "format": None, "configuration": None},
    "clusters": None,
    "doublebubble": {"m1": None, "m2": None},
    "bounds": {"m_B": None},
}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    quantity: str = "K"


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ProblemParams | None = None
    quadrature: QuadratureSpec = QuadratureSpec()
    budget: int = DEFAULT_BUDGET
    seeds: tuple = (0,)
    jobs: int = 1
    sweep: SweepSpec | None = None
    output_path: str | None = None
    output_format: str = "json"
    configuration_out: str | None = None
    clusters: str | None = None
    db_masses: tuple | None = None
    m_B: tuple | None = None


# -- parsing -------------------------------------------------------------------

def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise SchemaError(f"duplicate key {k!r}", "")
        out[k] = v
    return out


def parse_config(text) -> RunConfig:
    """Strict parse of a JSON run document (bytes or str)."""
    return parse_document(_decode(text))


def _decode(text):
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"config is not UTF-8: {exc}", "") from exc
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "") from exc


def _check_keys(doc, schema, ptr):
    if not isinstance(doc, dict):
        raise SchemaError("expected an object", ptr or "")
    for k, v in doc.items():
        if k not in schema:
            raise SchemaError(f"unknown key {k!r}", f"{ptr}/{k}")
        if isinstance(schema[k], dict):
            _check_keys(v, schema[k], f"{ptr}/{k}")


def _number(v, ptr, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaError(f"expected a finite number, got {v!r}", ptr)
    if positive and not v > 0:
        raise SchemaError(f"must be > 0, got {v!r}", ptr)
    if nonneg and not v >= 0:
        raise SchemaError(f"must be >= 0, got {v!r}", ptr)
    return float(v)


def _integer(v, ptr, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"expected an integer, got {v!r}", ptr)
    if minimum is not None and v < minimum:
        raise SchemaError(f"must be >= {minimum}, got {v!r}", ptr)
    return v


def _string(v, ptr, choices=None):
    if not isinstance(v, str):
        raise SchemaError(f"expected a string, got {v!r}", ptr)
    if choices is not None and v not in choices:
        raise SchemaError(f"must be one of {list(choices)}, got {v!r}", ptr)
    return v


def _params(d) -> ProblemParams:
    for k in ("M1", "M2"):
        if k not in d:
            raise SchemaError("missing required key", f"/params/{k}")
    vals = {k: _number(v, f"/params/{k}") for k, v in d.items()}
    try:
        return ProblemParams(**vals)
    except ValidationError as exc:
        raise SchemaError(str(exc), f"/params/{exc.field}") from exc


def _quadrature(d) -> QuadratureSpec:
    kw = {}
    if "method" in d:
        kw["method"] = _string(d["method"], "/quadrature/method")
    if "samples" in d:
        kw["samples"] = _integer(d["samples"], "/quadrature/samples")
    if d.get("grid_h") is not None:
        kw["grid_h"] = _number(d["grid_h"], "/quadrature/grid_h")
    if "seed" in d:
        kw["seed"] = _integer(d["seed"], "/quadrature/seed")
    try:
        return QuadratureSpec(**kw)
    except ValidationError as exc:
        raise SchemaError(str(exc), f"/quadrature/{exc.field}") from exc


def parse_document(doc) -> RunConfig:
    """Validate an already decoded run document."""
    _check_keys(doc, _SCHEMA, "")
    if "command" not in doc:
        raise SchemaError("missing required key", "/command")
    command = _string(doc["command"], "/command", COMMANDS)
    kw = {"command": command}
    if "params" in doc:
        kw["params"] = _params(doc["params"])
    elif command != "doublebubble":
        raise SchemaError("missing required key", "/params")
    kw["quadrature"] = _quadrature(doc.get("quadrature", {}))

    opt = doc.get("optimizer", {})
    if "budget" in opt:
        kw["budget"] = _integer(opt["budget"], "/optimizer/budget", 1)
    if "seeds" in opt:
        seeds = opt["seeds"]
        if not isinstance(seeds, list) or not seeds:
            raise SchemaError("expected a nonempty list of integers", "/optimizer/seeds")
        kw["seeds"] = tuple(_integer(s, f"/optimizer/seeds/{i}", 0) for i, s in enumerate(seeds))
    if "jobs" in opt:
        kw["jobs"] = _integer(opt["jobs"], "/optimizer/jobs", 1)

    if "sweep" in doc:
        sw = doc["sweep"]
        for k in ("param", "values"):
            if k not in sw:
                raise SchemaError("missing required key", f"/sweep/{k}")
        param = _string(sw["param"], "/sweep/param", PARAM_KEYS)
        values = sw["values"]
        if not isinstance(values, list) or not values:
            raise SchemaError("expected a nonempty list of numbers", "/sweep/values")
        values = tuple(_number(v, f"/sweep/values/{i}") for i, v in enumerate(values))
        quantity = _string(sw.get("quantity", "K"), "/sweep/quantity", SWEEP_QUANTITIES)
        kw["sweep"] = SweepSpec(param, values, quantity)
    elif command == "sweep":
        raise SchemaError("missing required key", "/sweep")

    out = doc.get("output", {})
    if out.get("path") is not None:
        kw["output_path"] = _string(out["path"], "/output/path")
    if "format" in out:
        kw["output_format"] = _string(out["format"], "/output/format", FORMATS)
    if out.get("configuration") is not None:
        kw["configuration_out"] = _string(out["configuration"], "/output/configuration")

    if doc.get("clusters") is not None:
        kw["clusters"] = _string(doc["clusters"], "/clusters")
    elif command in ("energy", "verify"):
        raise SchemaError("missing required key (configuration file path)", "/clusters")

    if "doublebubble" in doc:
        db = doc["doublebubble"]
        for k in ("m1", "m2"):
            if k not in db:
                raise SchemaError("missing required key", f"/doublebubble/{k}")
        m = tuple(_number(db[k], f"/doublebubble/{k}", nonneg=True) for k in ("m1", "m2"))
        if not sum(m) > 0:
            raise SchemaError("m1 + m2 must be > 0", "/doublebubble")
        kw["db_masses"] = m
    elif command == "doublebubble":
        raise SchemaError("missing required key", "/doublebubble")

    mb = doc.get("bounds", {}).get("m_B")
    if mb is not None:
        if not isinstance(mb, list) or len(mb) != 2:
            raise SchemaError("expected [m_1B, m_2B]", "/bounds/m_B")
        kw["m_B"] = tuple(_number(v, f"/bounds/m_B/{i}", positive=True) for i, v in enumerate(mb))
    return RunConfig(**kw)


# -- commands ------------------------------------------------------------------

def _params_dict(p: ProblemParams) -> dict:
    return {k: getattr(p, k) for k in PARAM_KEYS}


def _quad_dict(q: QuadratureSpec) -> dict:
    return {"method": q.method, "samples": q.samples, "grid_h": q.grid_h, "seed": q.seed}


def _finite_or_none(x):
    return x if math.isfinite(x) else None


def _flatten(d: dict, prefix="") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (list, tuple)) and all(not isinstance(x, (dict, list)) for x in v):
            for i, x in enumerate(v, 1):
                out[f"{prefix}{k}_{i}"] = x
        elif isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}_"))
        else:
            out[f"{prefix}{k}"] = v
    return out


def cmd_bounds(cfg: RunConfig):
    rep = cluster_count_bound(cfg.params, cfg.m_B).as_dict()
    doc = {"command": "bounds", "params": _params_dict(cfg.params), **rep}
    if cfg.m_B is not None:
        doc["m_B"] = list(cfg.m_B)
    row = _flatten({k: v for k, v in doc.items() if k != "command"})
    return doc, [row], list(row)


def _db_report(m1: float, m2: float) -> dict:
    doc = {
        "command": "doublebubble",
        "m1": m1,
        "m2": m2,
        "area": double_bubble_area(m1, m2),
        "hutchings_lower_bound": hutchings_lower_bound(m1, m2),
        "separate_spheres_area": sphere_area(m1) + sphere_area(m2),
    }
    if m1 > 0 and m2 > 0:
        g = solve_double_bubble(m1, m2)
        doc.update(
            degenerate=g.degenerate,
            r1=g.r1,
            r2=g.r2,
            r0=_finite_or_none(g.r0),
            theta1=g.theta1,
            theta2=g.theta2,
            theta0=g.theta0,
            junction_radius=g.a,
            iterations=g.iterations,
            residuals=g.residuals(),
        )
    else:
        # one empty lobe: a single sphere, the wall is flat and empty
        r = ball_radius(m1 + m2)
        doc.update(
            degenerate=True,
            r1=r if m1 > 0 else None,
            r2=r if m2 > 0 else None,
            r0=None,
            theta1=math.pi if m1 > 0 else None,
            theta2=math.pi if m2 > 0 else None,
            theta0=None,
            junction_radius=0.0,
            iterations=0,
            residuals={"volume": 0.0, "curvature": 0.0, "angle": 0.0},
        )
    return doc


def cmd_doublebubble(cfg: RunConfig):
    doc = _db_report(*cfg.db_masses)
    row = _flatten({k: v for k, v in doc.items() if k != "command"})
    return doc, [row], list(row)


def _load_clusters(cfg: RunConfig):
    with open(cfg.clusters, encoding="utf-8") as fh:
        return load_configuration(fh.read(), cfg.params)


def cmd_energy(cfg: RunConfig):
    conf = _load_clusters(cfg)
    rows = []
    for k, a in enumerate(conf.clusters):
        e = cluster_energy(a, cfg.params, cfg.quadrature)
        rows.append({"index": k, **cluster_to_dict(a), **e.as_dict()})
    total = math.fsum(r["total"] for r in rows)
    err = math.sqrt(math.fsum(r["std_error"] ** 2 for r in rows))
    doc = {
        "command": "energy",
        "params": _params_dict(cfg.params),
        "quadrature": _quad_dict(cfg.quadrature),
        "clusters": rows,
        "total": total,
        "std_error": err,
        "relaxed": any(r["relaxed"] for r in rows),
        "upper_energy": two_ball_upper_bound(cfg.params),
    }
    cols = ["index", "shape", "m1", "m2", "distance", "perimeter", "self1", "self2", "cross", "total",
            "std_error", "relaxed"]
    return doc, [{c: r.get(c, "") for c in cols} for r in rows], cols


def _chain(p, budget, seeds):
    return minimize_E0_chains(p, budget, seeds)


def _optimize(cfg: RunConfig, p: ProblemParams):
    if cfg.jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_chain, [p] * len(cfg.seeds), [cfg.budget] * len(cfg.seeds),
                                  [(s,) for s in cfg.seeds]))
        return min(results, key=lambda r: (r.energy, r.seed))
    return minimize_E0_chains(p, cfg.budget, cfg.seeds)


def cmd_optimize(cfg: RunConfig):
    res = _optimize(cfg, cfg.params)
    if cfg.configuration_out:
        with open(cfg.configuration_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(dump_configuration(res.configuration))
    doc = {
        "command": "optimize",
        "params": _params_dict(cfg.params),
        "budget": cfg.budget,
        "seeds": list(cfg.seeds),
        "upper_energy": two_ball_upper_bound(cfg.params),
        **res.as_dict(),
    }
    rows = [{"index": k, **c} for k, c in enumerate(doc["clusters"])]
    cols = ["index", "shape", "m1", "m2", "distance"]
    return doc, [{c: r.get(c, "") for c in cols} for r in rows], cols


def cmd_verify(cfg: RunConfig):
    conf = _load_clusters(cfg)
    mixed = [k for k, a in enumerate(conf.clusters) if a.masses.is_mixed]
    if not mixed:
        raise NotMixed("configuration has no mixed cluster to test")
    moves = []
    for k in mixed:
        try:
            mv = dispatch_move(conf, k)
        except PreconditionViolated as exc:
            moves.append({"index": k, "skipped": str(exc)})
            continue
        rep = verify_chain(conf, mv, cfg.quadrature)
        moves.append({
            "index": k,
            "target": mv.target,
            "ball_mass": mv.ball_mass,
            "ball_phase": mv.ball_phase,
            "H": mv.H,
            **rep.as_dict(),
        })
    doc = {
        "command": "verify",
        "params": _params_dict(cfg.params),
        "quadrature": _quad_dict(cfg.quadrature),
        "floor": actual_floor(conf),
        "moves": moves,
        "any_improving": any(m.get("improving", False) for m in moves),
    }
    cols = ["index", "case_tag", "target", "r", "eps_main", "floor", "improving", "delta_bound",
            "delta_actual", "delta_std_error", "scaling_margin", "perimeter_margin", "source_margin", "skipped"]
    return doc, [{c: m.get(c, "") for c in cols} for m in moves], cols


def _sweep_cell(cfg: RunConfig, value: float):
    p = replace(cfg.params, **{cfg.sweep.param: value})
    if cfg.sweep.quantity == "K":
        rep = cluster_count_bound(p, cfg.m_B)
        return {"K": rep.K, "K_pure": rep.K_pure, "K_mixed": rep.K_mixed, "eps_min": rep.eps_min,
                "m_S_1": rep.m_S[0], "m_S_2": rep.m_S[1]}
    res = minimize_E0_chains(p, cfg.budget, cfg.seeds)
    return {"energy": res.energy, "n_clusters": len(res.configuration.clusters), "seed": res.seed,
            "upper_energy": two_ball_upper_bound(p)}


def cmd_sweep(cfg: RunConfig):
    sw = cfg.sweep
    if cfg.jobs > 1 and len(sw.values) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            cells = list(ex.map(_sweep_cell, [cfg] * len(sw.values), sw.values))
    else:
        cells = [_sweep_cell(cfg, v) for v in sw.values]
    rows = [{sw.param: v, **c} for v, c in zip(sw.values, cells)]
    doc = {
        "command": "sweep",
        "params": _params_dict(cfg.params),
        "param": sw.param,
        "quantity": sw.quantity,
        "rows": rows,
    }
    return doc, rows, list(rows[0])


HANDLERS = {
    "bounds": cmd_bounds,
    "energy": cmd_energy,
    "doublebubble": cmd_doublebubble,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def render(cfg: RunConfig) -> str:
    """Run the command and return the report text in the requested format."""
    doc, rows, cols = HANDLERS[cfg.command](cfg)
    if cfg.output_format == "csv":
        return write_csv(rows, cols)
    return dumps(doc)


def run(cfg: RunConfig, stdout=None) -> int:
    text = render(cfg)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        (stdout or sys.stdout).write(text)
    return 0


# -- argument handling -----------------------------------------------------------

def _seeds(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def _values(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run document; flags override its fields")
    g = common.add_argument_group("problem")
    for k in ("M1", "M2", "gamma11", "gamma12", "gamma22"):
        g.add_argument(f"--{k}", type=float)
    g.add_argument("--kernel-prefactor", dest="kernel_prefactor", type=float)
    q = common.add_argument_group("quadrature")
    q.add_argument("--method", choices=("monte_carlo", "voxel", "analytic"))
    q.add_argument("--samples", type=int)
    q.add_argument("--grid-h", dest="grid_h", type=float)
    q.add_argument("--seed", type=int)
    o = common.add_argument_group("output")
    o.add_argument("--output", "-o", help="report path (default: stdout)")
    o.add_argument("--format", choices=FORMATS)

    parser = argparse.ArgumentParser(prog="okdroplet", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", dest="top_config", help="JSON run document (command taken from it)")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.add_parser("bounds", parents=[common], help="cluster-count bound K")
    p = sub.add_parser("energy", parents=[common], help="score a configuration file")
    p.add_argument("--clusters", help="configuration file (JSON list of clusters)")
    p = sub.add_parser("doublebubble", parents=[common], help="solve a standard double bubble")
    p.add_argument("--m1", type=float)
    p.add_argument("--m2", type=float)
    for name, help_ in (("optimize", "search for a low-energy partition"), ("sweep", "tabulate over one parameter")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--budget", type=int)
        p.add_argument("--seeds", type=_seeds, help="comma separated chain seeds")
        p.add_argument("--jobs", type=int, help="worker processes for chains or sweep cells")
        if name == "optimize":
            p.add_argument("--save-configuration", dest="configuration", help="write the best configuration here")
        else:
            p.add_argument("--param", choices=PARAM_KEYS)
            p.add_argument("--values", type=_values, help="comma separated values")
            p.add_argument("--quantity", choices=SWEEP_QUANTITIES)
    p = sub.add_parser("verify", parents=[common], help="competitor self-check on a configuration file")
    p.add_argument("--clusters", help="configuration file (JSON list of clusters)")
    return parser


def _overlay(doc: dict, args: argparse.Namespace) -> dict:
    a = vars(args)

    def put(section, key, value):
        if value is None:
            return
        if section is None:
            doc[key] = value
            return
        tgt = doc.setdefault(section, {})
        if not isinstance(tgt, dict):
            raise SchemaError("expected an object", f"/{section}")
        tgt[key] = value

    if a.get("command"):
        doc["command"] = a["command"]
    for k in PARAM_KEYS:
        put("params", k, a.get(k))
    for k in ("method", "samples", "grid_h", "seed"):
        put("quadrature", k, a.get(k))
    put("output", "path", a.get("output"))
    put("output", "format", a.get("format"))
    put("output", "configuration", a.get("configuration"))
    put("optimizer", "budget", a.get("budget"))
    put("optimizer", "seeds", a.get("seeds"))
    put("optimizer", "jobs", a.get("jobs"))
    put("sweep", "param", a.get("param"))
    put("sweep", "values", a.get("values"))
    put("sweep", "quantity", a.get("quantity"))
    put(None, "clusters", a.get("clusters"))
    put("doublebubble", "m1", a.get("m1"))
    put("doublebubble", "m2", a.get("m2"))
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = {}
        path = getattr(args, "config", None) or args.top_config
        if path:
            with open(path, "rb") as fh:
                doc = _decode(fh.read())
            if not isinstance(doc, dict):
                raise SchemaError("expected an object", "")
        cfg = parse_document(_overlay(doc, args))
        return run(cfg)
    except ValueError as exc:
        print(f"okdroplet: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"okdroplet: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"okdroplet: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
