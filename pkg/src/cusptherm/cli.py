"""``cusptherm`` command line.

Every command resolves one configuration (built-in defaults, then the JSON
file given by ``--config``, then explicit flags), validates it, runs, and
writes its outputs with the resolved configuration and library version
embedded.  Outputs go to ``--out``, else the ``output_dir`` field, else
``$CUSPTHERM_OUT``, else the current directory.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .fuchsian import RepresentationError, conjugate, rep_from_config
from .hypgeom import GeometryError, MobiusMap

OUT_ENV = "CUSPTHERM_OUT"

EXIT_OK, EXIT_USAGE, EXIT_DIVERGENCE, EXIT_CONVERGENCE = 0, 1, 2, 3

COMMANDS = ("pressure", "bowen", "manhattan", "intersection", "entropy-bs", "metric", "spectrum", "oracle", "validate")

DEFAULTS = {
    "coding": {"n_star": 1, "L_max": 200},
    "tolerances": {},
    "s": 1.0,
    "a": 1.0,
    "b": 0.0,
    "grid": 21,
    "path": {"kind": "markov", "base": [3.0, 3.0, 3.0], "direction": [1.0, 0.0]},
    "h": 1e-2,
    "routes": ["variance", "hessian", "manhattan"],
    "N": 16,
    "directions": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
    "cutoff": 6.0,
    "max_length": 10,
    "agreement": 0.05,
    "seed": 0,
    "threads": 1,
}

# commands that need a second representation
NEEDS_PARTNER = {"manhattan", "intersection", "entropy-bs"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _floats(text: str, n=None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) not in ((n,) if isinstance(n, int) else n):
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _flag_overrides(ns: argparse.Namespace) -> dict:
    o: dict = {}
    if ns.family is not None:
        rep = {"family": ns.family}
        if ns.family == "punctured_torus":
            rep["markov"] = ns.markov if ns.markov is not None else [3.0, 3.0, 3.0]
        o["representation"] = rep
    elif ns.markov is not None:
        o["representation"] = {"family": "punctured_torus", "markov": ns.markov}
    if ns.partner_markov is not None:
        o["partner"] = {"family": "punctured_torus", "markov": ns.partner_markov}
    if ns.conjugate is not None:
        a, b, c, d = ns.conjugate
        o["partner"] = {"conjugate_by": [[a, b], [c, d]]}
    for key in ("s", "a", "b", "h", "N", "cutoff", "max_length", "threads", "seed"):
        v = getattr(ns, key)
        if v is not None:
            o[key] = v
    if ns.L_max is not None or ns.n_star is not None:
        o["coding"] = {k: v for k, v in (("L_max", ns.L_max), ("n_star", ns.n_star)) if v is not None}
    if ns.grid is not None:
        o["grid"] = ns.grid
    if ns.route is not None:
        o["routes"] = [ns.route]
    if ns.path is not None or ns.direction is not None:
        o["path"] = {k: v for k, v in (("kind", ns.path), ("direction", ns.direction)) if v is not None}
    if ns.out is not None:
        o["output_dir"] = ns.out
    return o


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if ns.config is not None:
        try:
            doc = json.loads(Path(ns.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {ns.config} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, doc)
    cfg = _merge(cfg, _flag_overrides(ns))
    cfg.setdefault("output_dir", os.environ.get(OUT_ENV, "."))
    validate_config(cfg, ns.command)
    return cfg


def _num(cfg: dict, key: str, lo: float | None = None, integer: bool = False):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"field {key!r} must be a finite number")
    if integer and int(v) != v:
        raise ConfigError(f"field {key!r} must be an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"field {key!r} must be >= {lo}")
    return v


def _check_rep_entry(entry, where: str) -> None:
    if not isinstance(entry, dict):
        raise ConfigError(f"{where} must be an object")
    fam = entry.get("family")
    if fam is None:
        raise ConfigError(f"{where} is missing the field 'family'")
    if fam == "punctured_torus":
        m = entry.get("markov")
        if not isinstance(m, list) or len(m) not in (2, 3):
            raise ConfigError(f"{where}.markov must be [x, y] or [x, y, z]; z may be 'upper' or 'lower'")
    elif fam == "custom":
        for k in ("vertices", "matrices", "pairing", "genus", "punctures"):
            if k not in entry:
                raise ConfigError(f"{where} is missing the field {k!r}")
    elif fam != "s03":
        raise ConfigError(f"{where}.family must be punctured_torus, s03 or custom")


def validate_config(cfg: dict, command: str) -> None:
    if command != "metric" or cfg["path"].get("kind") == "conjugation":
        if "representation" not in cfg:
            raise ConfigError("missing field 'representation' (use --family or --config)")
    if "representation" in cfg:
        _check_rep_entry(cfg["representation"], "representation")
    partner = cfg.get("partner")
    if partner is not None and "conjugate_by" not in partner:
        _check_rep_entry(partner, "partner")
    if partner is not None and "conjugate_by" in partner:
        m = np.asarray(partner["conjugate_by"], dtype=float)
        if m.shape != (2, 2):
            raise ConfigError("partner.conjugate_by must be a 2x2 matrix")
    if command in NEEDS_PARTNER and partner is None:
        raise ConfigError(f"'{command}' needs a second representation (partner)")
    coding = cfg["coding"]
    _num(coding, "n_star", 1, integer=True)
    _num(coding, "L_max", 2, integer=True)
    for key in ("s", "h", "cutoff", "agreement"):
        _num(cfg, key)
    for key in ("a", "b"):
        _num(cfg, key, 0.0)
    if cfg["a"] + cfg["b"] == 0:
        raise ConfigError("a + b must be positive")
    _num(cfg, "N", 1, integer=True)
    _num(cfg, "max_length", 1, integer=True)
    _num(cfg, "threads", 1, integer=True)
    _num(cfg, "seed", integer=True)
    if cfg["h"] <= 0:
        raise ConfigError("field 'h' must be positive")
    known = {f.name for f in fields(_tolerances_cls())}
    bad = set(cfg["tolerances"]) - known
    if bad:
        raise ConfigError(f"unknown tolerance fields: {sorted(bad)}")
    g = cfg["grid"]
    if isinstance(g, list):
        if not g or any(not isinstance(x, (int, float)) or not 0 <= x <= 1 for x in g):
            raise ConfigError("grid must be a count or a list of values in [0, 1]")
    elif not isinstance(g, int) or g < 3:
        raise ConfigError("grid must be a count >= 3 or a list")
    kind = cfg["path"].get("kind")
    if kind not in ("markov", "conjugation"):
        raise ConfigError("path.kind must be markov or conjugation")
    routes = cfg["routes"]
    if not routes or any(r not in ("variance", "hessian", "manhattan") for r in routes):
        raise ConfigError("routes must be drawn from variance, hessian, manhattan")
    dirs = cfg["directions"]
    if not dirs or any(len(d) != 2 or min(d) < 0 or sum(d) == 0 for d in dirs):
        raise ConfigError("directions must be pairs (a, b) with a, b >= 0 and a + b > 0")


def _tolerances_cls():
    from .pressure import Tolerances

    return Tolerances


def tolerances(cfg: dict):
    return _tolerances_cls()(**cfg["tolerances"])


def grid_values(cfg: dict) -> np.ndarray:
    g = cfg["grid"]
    if isinstance(g, list):
        return np.asarray(g, dtype=float)
    return np.round(np.linspace(0.0, 1.0, g), 12)


def build_reps(cfg: dict):
    rep1 = rep_from_config(cfg["representation"]) if "representation" in cfg else None
    partner = cfg.get("partner")
    if partner is None:
        return rep1, None
    if "conjugate_by" in partner:
        g = MobiusMap.from_matrix(partner["conjugate_by"])
        return rep1, conjugate(rep1, g)
    return rep1, rep_from_config(partner)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def provenance(cfg: dict, command: str) -> dict:
    return {"command": command, "version": __version__, "config": _clean(cfg)}


class Writer:
    def __init__(self, cfg: dict, command: str):
        self.dir = Path(cfg["output_dir"])
        self.prov = provenance(cfg, command)
        self.stem = command.replace("-", "_")
        self.written: list[str] = []

    def json(self, result: dict, suffix: str = "") -> dict:
        self.dir.mkdir(parents=True, exist_ok=True)
        doc = {"result": _clean(result), "provenance": self.prov}
        p = self.dir / f"{self.stem}{suffix}.json"
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        self.written.append(str(p))
        return doc

    def csv(self, header, rows, suffix: str = "") -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / f"{self.stem}{suffix}.csv"
        with open(p, "w", newline="") as fh:
            fh.write("# " + json.dumps(self.prov, sort_keys=True) + "\n")
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for row in rows:
                wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        self.written.append(str(p))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _shift_and_tables(cfg: dict, rep1, rep2):
    from .coding import build_induced
    from .potential import evaluate_kappa, evaluate_tau
    from .pressure import TransferGraph

    shift = build_induced(rep1, cfg["coding"]["n_star"], cfg["coding"]["L_max"])
    graph = TransferGraph.from_shift(shift)
    tau = evaluate_tau(rep1, shift)
    kappa = evaluate_kappa(rep2, shift) if rep2 is not None else tau
    return shift, graph, tau, kappa


def cmd_pressure(cfg: dict, out: Writer) -> dict:
    from .pressure import WeightedPotential, pressure

    rep1, rep2 = build_reps(cfg)
    _, graph, tau, kappa = _shift_and_tables(cfg, rep1, rep2)
    pot = WeightedPotential(tau.values, kappa.values, cfg["a"], cfg["b"], cfg["s"], 0.0, max(tau.C1, kappa.C1))
    res = pressure(graph, pot, tolerances(cfg))
    return out.json(asdict(res))


def cmd_bowen(cfg: dict, out: Writer) -> dict:
    from .pressure import bowen_root

    rep1, rep2 = build_reps(cfg)
    _, graph, tau, kappa = _shift_and_tables(cfg, rep1, rep2)
    r = bowen_root(graph, tau.values, kappa.values, cfg["a"], cfg["b"], tolerances(cfg))
    return out.json({"root": r.root, "pressure_residual": r.pressure_residual, "bracket": list(r.bracket),
                     "evaluations": r.evaluations, "L_max": graph.L_max, "a": cfg["a"], "b": cfg["b"]})


def _pair(cfg: dict):
    from .manhattan import build_pair

    rep1, rep2 = build_reps(cfg)
    return build_pair(rep1, rep2, cfg["coding"]["n_star"], cfg["coding"]["L_max"], tolerances(cfg))


def cmd_manhattan(cfg: dict, out: Writer) -> dict:
    from .manhattan import bishop_steiger_entropy, intersection_number, rigidity_classifier, trace_curve

    tol = tolerances(cfg)
    system = _pair(cfg)
    curve = trace_curve(system, grid_values(cfg), tol)
    I = intersection_number(system, tol)
    h = bishop_steiger_entropy(system, tol)
    v = rigidity_classifier(curve, I, h)
    out.csv(["s", "chi", "residual", "tail_bound", "L_max"],
            [(s, c, r, t, curve.L_max) for s, c, r, t in zip(curve.s, curve.chi, curve.residual, curve.tail_bound)])
    res = asdict(v)
    res.update({"intersection": I, "h_BS": h, "curve_shape": curve.verdict, "max_error": float(curve.error.max()),
                "renormalization": [system.scale_tau, system.scale_kappa]})
    return out.json(res, "_verdict")


def cmd_intersection(cfg: dict, out: Writer) -> dict:
    from .manhattan import intersection_number

    system = _pair(cfg)
    return out.json({"intersection": intersection_number(system, tolerances(cfg)),
                     "renormalization": [system.scale_tau, system.scale_kappa]})


def cmd_entropy(cfg: dict, out: Writer) -> dict:
    from .manhattan import bishop_steiger_entropy

    system = _pair(cfg)
    return out.json({"h_BS": bishop_steiger_entropy(system, tolerances(cfg)),
                     "renormalization": [system.scale_tau, system.scale_kappa]})


def _path(cfg: dict):
    from .metric import ConjugationPath, MarkovPath

    p = cfg["path"]
    if p["kind"] == "conjugation":
        return ConjugationPath(rep_from_config(cfg["representation"]), float(p.get("speed", 1.0)))
    return MarkovPath(tuple(float(x) for x in p.get("base", (3.0, 3.0, 3.0))),
                      tuple(float(x) for x in p.get("direction", (1.0, 0.0))))


def cmd_metric(cfg: dict, out: Writer) -> dict:
    from .metric import pressure_metric

    res = pressure_metric(_path(cfg), cfg["h"], cfg["coding"]["n_star"], cfg["coding"]["L_max"],
                          tuple(cfg["routes"]), cfg["s"] if 0 < cfg["s"] < 1 else 0.5, tolerances(cfg))
    doc = asdict(res)
    doc["depth"] = cfg["coding"]["L_max"]
    return out.json(doc)


def cmd_spectrum(cfg: dict, out: Writer) -> dict:
    from .fuchsian import label_name
    from .oracle import marked_length_spectrum

    rep1, _ = build_reps(cfg)
    lengths = marked_length_spectrum(rep1, cfg["cutoff"], cfg["max_length"])
    out.csv(["word", "length"], [(" ".join(label_name(s) for s in w), l) for w, l in lengths])
    return out.json({"classes": len(lengths), "shortest": lengths[0][1] if lengths else None})


def cmd_oracle(cfg: dict, out: Writer) -> dict:
    from .oracle import cross_check_bowen, enumerate_words, estimate_critical_exponent

    rep1, rep2 = build_reps(cfg)
    _, graph, tau, kappa = _shift_and_tables(cfg, rep1, rep2)
    dirs = tuple(tuple(float(x) for x in d) for d in cfg["directions"])
    enum = enumerate_words(rep1, rep2, cfg["N"], dirs, threads=cfg["threads"])
    rows = cross_check_bowen(enum, graph, tau.values, kappa.values, cfg["agreement"], tolerances(cfg))
    table = []
    for r in rows:
        est = estimate_critical_exponent(enum, *r.direction)
        table.append({"direction": list(r.direction), "oracle": r.oracle, "oracle_error": r.oracle_error,
                      "oracle_raw": est.raw, "counting_slope": est.slope, "complete_radius": est.complete_radius,
                      "bowen": r.bowen, "difference": r.difference, "agrees": r.agrees})
    T = np.round(np.arange(0.5, max(enum.complete_radius(d) for d in dirs) + 1e-9, 0.25), 10)
    out.csv(["T"] + [f"count_{a:g}_{b:g}" for a, b in dirs],
            [[t] + [int(enum.counts_up_to(d, t)) for d in dirs] for t in T], "_counts")
    return out.json({"N": enum.N, "shell_counts": enum.shell_counts, "table": table,
                     "all_agree": all(r["agrees"] for r in table)})


def cmd_validate(cfg: dict, out: Writer) -> dict:
    from .fuchsian import cusp_words, label_name, vertex_cycles

    rep1, rep2 = build_reps(cfg)
    report = {}
    for key, rep in (("representation", rep1), ("partner", rep2)):
        if rep is None:
            continue
        cycles, lcm = vertex_cycles(rep)
        report[key] = {
            "name": rep.name,
            "genus": rep.genus,
            "punctures": rep.punctures,
            "generators": [m.matrix().tolist() for m in rep.maps[::2]],
            "cycles": [" ".join(label_name(s) for s in c.word) for c in cycles],
            "cycle_lcm": lcm,
        }
    if rep2 is not None and sorted(set(cusp_words(rep1))) != sorted(set(cusp_words(rep2))):
        raise ConfigError("the two representations have different vertex cycles")
    report["valid"] = True
    return out.json(report)


HANDLERS = {
    "pressure": cmd_pressure,
    "bowen": cmd_bowen,
    "manhattan": cmd_manhattan,
    "intersection": cmd_intersection,
    "entropy-bs": cmd_entropy,
    "metric": cmd_metric,
    "spectrum": cmd_spectrum,
    "oracle": cmd_oracle,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--family", choices=("punctured_torus", "s03"))
    common.add_argument("--markov", type=lambda t: _floats(t, (2, 3)),
                        help="Markov triple x,y,z, or x,y with z on the upper branch")
    common.add_argument("--partner-markov", type=lambda t: _floats(t, (2, 3)),
                        help="second representation, same format as --markov")
    common.add_argument("--conjugate", type=lambda t: _floats(t, 4), help="second rep as g rep g^-1, g = a,b,c,d")
    common.add_argument("--s", type=float)
    common.add_argument("--a", type=float)
    common.add_argument("--b", type=float)
    common.add_argument("--L-max", dest="L_max", type=int)
    common.add_argument("--n-star", dest="n_star", type=int)
    common.add_argument("--grid", type=int, help="number of equally spaced s values on [0, 1]")
    common.add_argument("--route", choices=("variance", "hessian", "manhattan"))
    common.add_argument("--path", choices=("markov", "conjugation"))
    common.add_argument("--direction", type=lambda t: _floats(t, 2), help="Markov path direction dx,dy")
    common.add_argument("--h", type=float, help="finite-difference step along the path")
    common.add_argument("--N", type=int, help="oracle word length")
    common.add_argument("--cutoff", type=float)
    common.add_argument("--max-length", dest="max_length", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    p = argparse.ArgumentParser(prog="cusptherm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cusptherm {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None) -> int:
    from .coding import CodingError
    from .metric import PathError
    from .oracle import InsufficientDataError, OracleError
    from .potential import TypePreservingError
    from .pressure import BracketError, ConvergenceError, DivergenceError

    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve_config(ns)
        doc = HANDLERS[ns.command](cfg, Writer(cfg, ns.command))
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ConvergenceError, BracketError, InsufficientDataError) as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, RepresentationError, GeometryError, TypePreservingError, CodingError, PathError,
            OracleError, KeyError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(doc["result"], indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
