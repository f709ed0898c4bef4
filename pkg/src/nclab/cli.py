"""Command-line runner: one JSON config in, one CSV table out.

    nclab run config.json     run the experiment, write CSV (to "output" or stdout)
    nclab echo config.json    print the config with every default made explicit

Exit status: 0 on success, 1 for invalid configuration, 2 for numeric failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__, competitor, energy, kernel2d, limits, minimize, summation
from .geometry import Domain1D, GeometryError, GridPartition2D, LipschitzGraph, Partition1D

log = logging.getLogger("nclab")

COMMANDS = ("alphas", "energy", "strip-scan", "s-sweep", "minimize", "separate")

DEFAULTS = {"far_cutoff": kernel2d.DEFAULT_FAR_CUTOFF, "near_depth": kernel2d.DEFAULT_NEAR_DEPTH, "max_sweeps": 100}

COMMON = {"command", "sigma", "output", "far_cutoff", "near_depth", "max_sweeps"}
ALLOWED = {
    "alphas": COMMON,
    "energy": COMMON | {"s", "cluster", "domain"},
    "strip-scan": COMMON | {"s", "cluster", "domain", "eps_list", "x0", "psi"},
    "s-sweep": COMMON | {"s_list", "cluster", "domain", "target"},
    "minimize": COMMON | {"s", "cluster", "domain", "grid_m", "method"},
    "separate": COMMON | {"s_list", "cluster", "domain", "eps"},
}
REQUIRED = {
    "alphas": {"sigma"},
    "energy": {"sigma", "s", "cluster"},
    "strip-scan": {"sigma", "s", "cluster", "eps_list"},
    "s-sweep": {"sigma", "s_list", "cluster"},
    "minimize": {"sigma", "s", "cluster"},
    "separate": {"sigma", "s_list", "cluster", "eps"},
}
CLUSTER_1D = {"breakpoints", "labels"}
CLUSTER_2D = {"h", "nx", "ny", "omega", "labels", "origin", "far_field"}
PSI_KEYS = {"r", "samples", "R", "c0", "center"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# ---------------------------------------------------------------------------
# config parsing and normalization
# ---------------------------------------------------------------------------


def _num(cfg, key, where=None, positive=False, integer=False):
    name = f"{where}.{key}" if where else key
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{name}: expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(f"{name}: must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{name}: must be positive, got {v}")
    return v


def _num_list(cfg, key, length=None, positive=False):
    v = cfg[key]
    if not isinstance(v, list):
        raise ConfigError(f"{key}: expected a list of numbers")
    if length is not None and len(v) != length:
        raise ConfigError(f"{key}: expected {length} entries, got {len(v)}")
    if not v:
        raise ConfigError(f"{key}: must not be empty")
    return [_num({key: x}, key, positive=positive) for x in v]


def _order(v, name):
    if not 0.0 < v < 1.0:
        raise ConfigError(f"{name}: fractional order must lie in (0, 1), got {v}")
    return v


def _normalize_cluster(raw) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("cluster: expected an object")
    keys = set(raw)
    if "breakpoints" in keys:
        extra = keys - CLUSTER_1D
        if extra:
            raise ConfigError(f"cluster.{sorted(extra)[0]}: unknown field for a 1D cluster")
        bps = raw["breakpoints"]
        labs = raw.get("labels")
        if not isinstance(bps, list) or not isinstance(labs, list):
            raise ConfigError("cluster: breakpoints and labels must be lists")
        out = {
            "breakpoints": [_num({"b": x}, "b", "cluster.breakpoints") for x in bps],
            "labels": [_num({"l": x}, "l", "cluster.labels", integer=True) for x in labs],
        }
        try:
            Partition1D(tuple(out["breakpoints"]), tuple(out["labels"]))
        except (GeometryError, ValueError) as exc:
            raise ConfigError(f"cluster: {exc}") from None
        return out
    extra = keys - CLUSTER_2D
    if extra:
        raise ConfigError(f"cluster.{sorted(extra)[0]}: unknown field")
    for k in ("h", "nx", "ny", "omega", "labels"):
        if k not in raw:
            raise ConfigError(f"cluster.{k}: missing")
    out = {
        "h": _num(raw, "h", "cluster", positive=True),
        "nx": _num(raw, "nx", "cluster", positive=True, integer=True),
        "ny": _num(raw, "ny", "cluster", positive=True, integer=True),
    }
    om = raw["omega"]
    if not isinstance(om, list) or len(om) != 4:
        raise ConfigError("cluster.omega: expected [i0, j0, i1, j1]")
    out["omega"] = [_num({"o": x}, "o", "cluster.omega", integer=True) for x in om]
    labels = raw["labels"]
    if isinstance(labels, list):
        if not all(isinstance(x, str) for x in labels):
            raise ConfigError("cluster.labels: expected a string or a list of strings")
        labels = "".join(labels)
    if not isinstance(labels, str):
        raise ConfigError("cluster.labels: expected a string")
    out["labels"] = "".join(labels.split())
    origin = raw.get("origin", [0.0, 0.0])
    if not isinstance(origin, list) or len(origin) != 2:
        raise ConfigError("cluster.origin: expected [x0, y0]")
    out["origin"] = [_num({"o": x}, "o", "cluster.origin") for x in origin]
    ff = raw.get("far_field", "truncate")
    if ff not in ("truncate", "extend"):
        raise ConfigError(f"cluster.far_field: expected 'truncate' or 'extend', got {ff!r}")
    out["far_field"] = ff
    try:
        _grid_from(out)
    except (GeometryError, ValueError) as exc:
        raise ConfigError(f"cluster: {exc}") from None
    return out


def _grid_from(c: dict) -> GridPartition2D:
    return GridPartition2D.from_string(
        c["h"], c["nx"], c["ny"], tuple(c["omega"]), c["labels"], tuple(c["origin"]), c["far_field"]
    )


def normalize_config(raw) -> dict:
    """Validate ``raw`` and return it with all defaults explicit (raises ConfigError)."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    cmd = raw.get("command")
    if cmd is None:
        raise ConfigError("command: missing")
    if cmd not in COMMANDS:
        raise ConfigError(f"command: unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    for k in raw:
        if k not in ALLOWED[cmd]:
            raise ConfigError(f"{k}: unknown field for command {cmd}")
    for k in sorted(REQUIRED[cmd]):
        if k not in raw:
            raise ConfigError(f"{k}: missing (required by {cmd})")

    cfg = {"command": cmd, "sigma": _num_list(raw, "sigma", 3, positive=True)}
    for k, v in DEFAULTS.items():
        cfg[k] = _num(raw, k, integer=True) if k in raw else v
    if cfg["far_cutoff"] < 2:
        raise ConfigError(f"far_cutoff: must be >= 2, got {cfg['far_cutoff']}")
    if cfg["near_depth"] < 0:
        raise ConfigError(f"near_depth: must be >= 0, got {cfg['near_depth']}")
    if cfg["max_sweeps"] < 1:
        raise ConfigError(f"max_sweeps: must be >= 1, got {cfg['max_sweeps']}")
    if "output" in raw:
        if not isinstance(raw["output"], str) or not raw["output"]:
            raise ConfigError("output: expected a file path")
        cfg["output"] = raw["output"]
    else:
        cfg["output"] = None
    if cmd == "alphas":
        return cfg

    if "s" in raw:
        cfg["s"] = _order(_num(raw, "s"), "s")
    if "s_list" in raw:
        sl = _num_list(raw, "s_list")
        for v in sl:
            _order(v, "s_list")
        if any(b <= a for a, b in zip(sl, sl[1:])):
            raise ConfigError("s_list: must be strictly increasing")
        cfg["s_list"] = sl

    cluster = _normalize_cluster(raw["cluster"])
    cfg["cluster"] = cluster
    one_d = "breakpoints" in cluster
    if one_d:
        if "domain" not in raw:
            raise ConfigError("domain: missing (required for a 1D cluster)")
        dom = _num_list(raw, "domain", 2)
        try:
            Domain1D(*dom)
        except GeometryError as exc:
            raise ConfigError(f"domain: {exc}") from None
        cfg["domain"] = dom
    elif "domain" in raw:
        raise ConfigError("domain: not used for a 2D cluster (omega is part of the cluster)")

    if cmd == "strip-scan":
        cfg["eps_list"] = _num_list(raw, "eps_list", positive=True)
        if any(b < a for a, b in zip(cfg["eps_list"], cfg["eps_list"][1:])):
            raise ConfigError("eps_list: must be sorted increasing")
        if one_d:
            if "x0" not in raw:
                raise ConfigError("x0: missing (required for a 1D strip scan)")
            if "psi" in raw:
                raise ConfigError("psi: not used for a 1D cluster")
            cfg["x0"] = _num(raw, "x0")
        else:
            if "psi" not in raw:
                raise ConfigError("psi: missing (required for a 2D strip scan)")
            if "x0" in raw:
                raise ConfigError("x0: not used for a 2D cluster")
            cfg["psi"] = _normalize_psi(raw["psi"])
    elif cmd == "s-sweep":
        tgt = raw.get("target", "energy")
        if tgt not in limits.TARGETS:
            raise ConfigError(f"target: expected one of {limits.TARGETS}, got {tgt!r}")
        cfg["target"] = tgt
    elif cmd == "minimize":
        default_method = "exhaustive" if one_d else "greedy"
        method = raw.get("method", default_method)
        if method not in ("exhaustive", "greedy"):
            raise ConfigError(f"method: expected 'exhaustive' or 'greedy', got {method!r}")
        if method == "exhaustive" and not one_d:
            raise ConfigError("method: exhaustive search is available for 1D clusters only")
        cfg["method"] = method
        if one_d:
            cfg["grid_m"] = _num(raw, "grid_m", integer=True) if "grid_m" in raw else 16
            if cfg["grid_m"] < 1:
                raise ConfigError(f"grid_m: must be >= 1, got {cfg['grid_m']}")
        elif "grid_m" in raw:
            raise ConfigError("grid_m: not used for a 2D cluster")
    elif cmd == "separate":
        cfg["eps"] = _num(raw, "eps", positive=True)
    return cfg


def _normalize_psi(raw) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("psi: expected an object")
    extra = set(raw) - PSI_KEYS
    if extra:
        raise ConfigError(f"psi.{sorted(extra)[0]}: unknown field")
    for k in ("r", "samples", "R", "c0"):
        if k not in raw:
            raise ConfigError(f"psi.{k}: missing")
    out = {
        "r": _num(raw, "r", "psi", positive=True),
        "samples": [_num({"v": x}, "v", "psi.samples") for x in raw["samples"]] if isinstance(raw["samples"], list) else None,
        "R": _num(raw, "R", "psi", positive=True),
        "c0": _num(raw, "c0", "psi"),
        "center": [float(x) for x in raw.get("center", [0.0, 0.0])],
    }
    if out["samples"] is None:
        raise ConfigError("psi.samples: expected a list of numbers")
    try:
        _psi_from(out)
    except GeometryError as exc:
        raise ConfigError(f"psi: {exc}") from None
    return out


def _psi_from(p: dict) -> LipschitzGraph:
    return LipschitzGraph(p["r"], tuple(p["samples"]), p["R"], p["c0"], tuple(p["center"]))


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return normalize_config(raw)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _s_tag(cfg) -> str:
    if "s_list" in cfg:
        return ";".join(fmt(v) for v in cfg["s_list"])
    if "s" in cfg:
        return fmt(cfg["s"])
    return "none"


def _cluster(cfg):
    c = cfg["cluster"]
    if "breakpoints" in c:
        return Partition1D(tuple(c["breakpoints"]), tuple(c["labels"])), Domain1D(*cfg["domain"])
    return _grid_from(c), None


def _table(cfg, s, cluster):
    if isinstance(cluster, GridPartition2D):
        return kernel2d.build_offset_table(s, cluster.h, cfg["far_cutoff"], cfg["near_depth"])
    return None


def run_config(cfg: dict) -> tuple[list[str], list[list]]:
    """Execute a normalized config; returns (header, rows)."""
    cmd = cfg["command"]
    sw = energy.SigmaWeights(*cfg["sigma"])
    if cmd == "alphas":
        a = energy.alphas_from_sigmas(sw)
        return ["a_m1", "a_0", "a_1", "triangle"], [[a.a_m1, a.a_0, a.a_1, "true" if a.triangle_inequality else "false"]]

    cluster, dom = _cluster(cfg)
    if cmd == "energy":
        s = cfg["s"]
        tab = _table(cfg, s, cluster)
        rows = [
            energy.f_s(s, sw, cluster, dom, tab),
            energy.f_one(sw, cluster, dom, closure=False),
            energy.f_one(sw, cluster, dom, closure=True),
            energy.f_star(sw, cluster, dom),
        ]
        return list(energy.EnergyBreakdown.CSV_HEADER), [r.csv_row() for r in rows]
    if cmd == "strip-scan":
        s = cfg["s"]
        where = cfg["x0"] if dom is not None else _psi_from(cfg["psi"])
        rows = competitor.scan_gap(s, sw, cluster, where, cfg["eps_list"], dom, _table(cfg, s, cluster))
        return list(competitor.GapScanRow.CSV_HEADER), [r.csv_row() for r in rows]
    if cmd == "s-sweep":
        factory = lambda s, h: kernel2d.build_offset_table(s, h, cfg["far_cutoff"], cfg["near_depth"])  # noqa: E731
        rows = limits.s_sweep(cluster, dom, sw, cfg["s_list"], cfg["target"], factory)
        return list(limits.SweepRow.CSV_HEADER), [r.csv_row() for r in rows]
    if cmd == "minimize":
        s = cfg["s"]
        if cfg["method"] == "exhaustive":
            rep = minimize.exhaustive_1d(s, sw, dom, cluster, cfg["grid_m"])
        elif dom is not None:
            rep = minimize.greedy_descent_1d(s, sw, dom, cluster, cfg["grid_m"], cfg["max_sweeps"])
        else:
            rep = minimize.greedy_descent(s, sw, cluster, cfg["max_sweeps"], _table(cfg, s, cluster))
        return list(minimize.MinimizeReport.CSV_HEADER), [rep.csv_row()]
    if cmd == "separate":
        sep = limits.separate_phases(cluster, cfg["eps"], dom)
        factory = lambda s, h: kernel2d.build_offset_table(s, h, cfg["far_cutoff"], cfg["near_depth"])  # noqa: E731
        rows = limits.cross_interaction_decay(sep, dom, sw, cfg["s_list"], cfg["eps"], factory)
        return list(limits.DecayRow.CSV_HEADER), [r.csv_row() for r in rows]
    raise ConfigError(f"command: unknown command {cmd!r}")  # unreachable after validation


def render_csv(cfg: dict, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# nonlocal-cluster-lab v1, command={cfg['command']}, s={_s_tag(cfg)}\n")
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _fail(code: int, msg: str) -> int:
    print(f"nclab: error: {msg}", file=sys.stderr)
    return code


def cmd_run(path: str) -> int:
    try:
        summation.worker_count()
        cfg = load_config(path)
    except ValueError as exc:
        return _fail(1, str(exc))
    try:
        header, rows = run_config(cfg)
    except ArithmeticError as exc:
        return _fail(2, f"numeric failure: {exc}")
    except (GeometryError, ValueError) as exc:
        return _fail(1, str(exc))
    text = render_csv(cfg, header, rows)
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
        log.info("wrote %d rows to %s", len(rows), cfg["output"])
    else:
        sys.stdout.write(text)
    return 0


def cmd_echo(path: str) -> int:
    try:
        cfg = load_config(path)
    except ValueError as exc:
        return _fail(1, str(exc))
    out = {k: v for k, v in cfg.items() if v is not None}
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nclab", description="Nonlocal three-phase cluster experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="action", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a JSON config")
    p_run.add_argument("config")
    p_echo = sub.add_parser("echo", help="print the normalized config with defaults filled in")
    p_echo.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.action == "run":
        return cmd_run(args.config)
    return cmd_echo(args.config)


if __name__ == "__main__":
    sys.exit(main())
