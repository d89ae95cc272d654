"""Command-line runner: ``ggbm [global flags] <command> [--param key=value ...]``.

Configuration comes from an optional YAML or JSON file, then ``--param``
overrides (dotted keys reach nested blocks, e.g. ``params.beta=0.5``), then
the global flags. Every run writes its result files plus one
``manifest.json`` into ``--out``.

Exit codes: 0 success, 1 a check failed (or a computation raised), 2 the
configuration was rejected.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__, checks, fracops, io, sampler, silt, specfun
from .sampler import ModelParams, SeedSpec, TimeGrid

__all__ = ["COMMANDS", "ConfigError", "ExperimentConfig", "parse_config", "run", "main"]

COMMANDS = ("specfun", "kernel", "sample", "silt", "sweep", "verify")

log = logging.getLogger("ggbm")

DEFAULTS: dict[str, Any] = {
    "command": None,
    "seed": 0,
    "format": "json",
    "threads": 1,
    "out": "ggbm-out",
    "params": {"beta": 0.5, "alpha": 1.0, "d": 1},
    "grid": {"t_max": 1.0, "n": 256},
    "n_paths": 1000,
    "method": "circulant",
    "eps": 0.1,
    "eps_list": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
    "diagonal_included": True,
    "phi_norm_sq": 0.0,
    "specfun": {
        "function": "mittag_leffler",
        "beta": 0.5,
        "negate": True,
        "x_start": 0.0,
        "x_stop": 5.0,
        "x_step": 0.5,
        "abs_tol": 1e-12,
    },
    "kernel": {
        "alphas": [0.4, 0.8, 1.0, 1.2, 1.6],
        "times": [0.2, 0.5, 1.0, 1.5, 2.0],
        "abs_tol": 1e-6,
    },
    "sample": {"binary": False},
    "verify": {"criteria": list(range(1, 11)), "scale": 1.0},
}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-5`` as a float (YAML 1.1 wants ``1.0e-5``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?|\.[0-9_]+(?:[eE][-+]?[0-9]+)?"""
        r"""|[0-9][0-9_]*[eE][-+]?[0-9]+|\.(?:inf|Inf|INF)|[-+]\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$""",
    ),
    list("-+0123456789."),
)


def _yaml_load(text: str):
    return yaml.load(text, Loader=_Loader)


class ConfigError(ValueError):
    """Configuration rejected; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    format: str
    threads: int
    out: str
    params: ModelParams
    grid: TimeGrid
    n_paths: int
    method: str
    eps: float
    eps_list: list
    diagonal_included: bool
    phi_norm_sq: float
    specfun: dict
    kernel: dict
    sample: dict
    verify: dict
    warnings: list = field(default_factory=list)

    def resolved(self) -> dict:
        """Plain-data view used for the config digest (output directory excluded)."""
        out = {k: getattr(self, k) for k in DEFAULTS if k != "out"}
        out["params"] = asdict(self.params)
        out["grid"] = {"t_max": self.grid.t_max, "n": self.grid.n}
        return out

    def digest(self) -> str:
        text = json.dumps(self.resolved(), sort_keys=True, default=float)
        return hashlib.sha256(text.encode()).hexdigest()


def _merge(base: dict, over: dict, errors: list[str], prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        name = prefix + str(key)
        if key not in base:
            errors.append(f"{name}: unknown field")
        elif isinstance(base[key], dict):
            if not isinstance(val, dict):
                errors.append(f"{name}: expected a mapping")
            else:
                out[key] = _merge(base[key], val, errors, name + ".")
        else:
            out[key] = val
    return out


def _num(errors, name, val, lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False, integer=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append(f"{name}: expected a number, got {val!r}")
        return None
    if integer and int(val) != val:
        errors.append(f"{name}: expected an integer, got {val!r}")
        return None
    if not math.isfinite(val) and (math.isfinite(lo) or math.isfinite(hi)):
        errors.append(f"{name}: must be finite, got {val!r}")
        return None
    bad_lo = val <= lo if lo_open else val < lo
    bad_hi = val >= hi if hi_open else val > hi
    if bad_lo or bad_hi:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        errors.append(f"{name}: must lie in {lb}{lo:g}, {hi:g}{rb}, got {val!r}")
        return None
    return int(val) if integer else float(val)


def _choice(errors, name, val, options):
    if val not in options:
        errors.append(f"{name}: must be one of {', '.join(map(str, options))}, got {val!r}")
        return None
    return val


def _bool(errors, name, val):
    if not isinstance(val, bool):
        errors.append(f"{name}: expected true or false, got {val!r}")
        return None
    return val


def _num_list(errors, name, val, **kw):
    if not isinstance(val, list) or not val:
        errors.append(f"{name}: expected a nonempty list")
        return None
    out = [_num(errors, f"{name}[{i}]", v, **kw) for i, v in enumerate(val)]
    return None if any(v is None for v in out) else out


def parse_config(doc: str | dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config document (YAML/JSON text or mapping) against the schema.

    Missing fields take their defaults. All problems are collected and
    raised together as ``ConfigError``, each naming its field.
    """
    errors: list[str] = []
    if doc is None or doc == "":
        data = {}
    elif isinstance(doc, str):
        try:
            data = _yaml_load(doc)
        except yaml.YAMLError as exc:
            raise ConfigError([f"config: not valid YAML/JSON ({exc})"]) from exc
        data = {} if data is None else data
    else:
        data = doc
    if not isinstance(data, dict):
        raise ConfigError(["config: top level must be a mapping"])
    merged = _merge(DEFAULTS, data, errors)
    for key, val in (overrides or {}).items():
        parts = key.split(".")
        node = merged
        ref = DEFAULTS
        ok = True
        for part in parts[:-1]:
            if not isinstance(ref.get(part), dict):
                errors.append(f"{key}: unknown field")
                ok = False
                break
            node, ref = node[part], ref[part]
        if ok:
            last = parts[-1]
            if last not in ref:
                errors.append(f"{key}: unknown field")
            elif isinstance(ref[last], dict):
                if isinstance(val, dict):
                    node[last] = _merge(node[last], val, errors, key + ".")
                else:
                    errors.append(f"{key}: expected a mapping")
            else:
                node[last] = val
    m = merged

    command = _choice(errors, "command", m["command"], COMMANDS)
    seed = _num(errors, "seed", m["seed"], 0, 2**64, hi_open=True, integer=True)
    fmt = _choice(errors, "format", m["format"], ("csv", "json"))
    threads = _num(errors, "threads", m["threads"], 1, 1024, integer=True)
    out = m["out"] if isinstance(m["out"], str) and m["out"] else None
    if out is None:
        errors.append(f"out: expected a nonempty path, got {m['out']!r}")

    p = m["params"]
    beta = _num(errors, "beta", p["beta"], 0.0, 1.0, lo_open=True)
    alpha = _num(errors, "alpha", p["alpha"], 0.0, 2.0, lo_open=True, hi_open=True)
    d = _num(errors, "d", p["d"], 1, 64, integer=True)
    g = m["grid"]
    t_max = _num(errors, "grid.t_max", g["t_max"], 0.0, lo_open=True)
    n_grid = _num(errors, "grid.n", g["n"], 2, 1 << 20, integer=True)
    n_paths = _num(errors, "n_paths", m["n_paths"], 2, 10**8, integer=True)
    method = _choice(errors, "method", m["method"], ("circulant", "cholesky"))
    eps = _num(errors, "eps", m["eps"], 0.0, lo_open=True)
    eps_list = _num_list(errors, "eps_list", m["eps_list"], lo=0.0, lo_open=True)
    if eps_list is not None and any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        errors.append("eps_list: must be strictly decreasing")
    diag = _bool(errors, "diagonal_included", m["diagonal_included"])
    phi = _num(errors, "phi_norm_sq", m["phi_norm_sq"], 0.0, silt.C_MAX)

    sf = m["specfun"]
    _choice(errors, "specfun.function", sf["function"], ("mittag_leffler", "mwright"))
    _num(errors, "specfun.beta", sf["beta"], 0.0, 1.0, lo_open=True)
    _bool(errors, "specfun.negate", sf["negate"])
    x0 = _num(errors, "specfun.x_start", sf["x_start"])
    x1 = _num(errors, "specfun.x_stop", sf["x_stop"])
    _num(errors, "specfun.x_step", sf["x_step"], 0.0, lo_open=True)
    _num(errors, "specfun.abs_tol", sf["abs_tol"], 0.0, 1.0, lo_open=True)
    if x0 is not None and x1 is not None and x1 < x0:
        errors.append("specfun.x_stop: must not be below specfun.x_start")
    kn = m["kernel"]
    _num_list(errors, "kernel.alphas", kn["alphas"], lo=0.0, hi=2.0, lo_open=True, hi_open=True)
    _num_list(errors, "kernel.times", kn["times"], lo=0.0)
    _num(errors, "kernel.abs_tol", kn["abs_tol"], 0.0, 1.0, lo_open=True)
    _bool(errors, "sample.binary", m["sample"]["binary"])
    vf = m["verify"]
    crit = vf["criteria"]
    if not isinstance(crit, list) or not crit or any(c not in checks.CRITERIA for c in crit):
        errors.append(f"verify.criteria: expected a nonempty list drawn from 1..10, got {crit!r}")
    _num(errors, "verify.scale", vf["scale"], 0.0, 10.0, lo_open=True)

    if errors:
        raise ConfigError(errors)

    warnings = []
    if alpha * d >= 2 and command in ("silt", "sweep"):
        warnings.append(
            f"alpha*d = {alpha * d:g} >= 2: the expected SILT diverges as eps -> 0 and the bound is infinite"
        )
    if command == "sample" and method == "cholesky" and n_grid > sampler.N_CHOL_MAX:
        raise ConfigError([f"grid.n: cholesky supports at most {sampler.N_CHOL_MAX} points"])
    return ExperimentConfig(
        command, seed, fmt, threads, out,
        ModelParams(beta, alpha, d), TimeGrid(t_max, n_grid),
        n_paths, method, eps, eps_list, diag, phi,
        dict(sf), dict(kn), dict(m["sample"]), {"criteria": list(crit), "scale": float(vf["scale"])},
        warnings,
    )


# ---------------------------------------------------------------------------
# commands; each returns (files {name: (schema, rows-or-obj)}, checks list)


def _xs(sf: dict) -> np.ndarray:
    n = int(math.floor((sf["x_stop"] - sf["x_start"]) / sf["x_step"] + 1e-9)) + 1
    return sf["x_start"] + sf["x_step"] * np.arange(n)


def _cmd_specfun(cfg: ExperimentConfig):
    sf = cfg.specfun
    rows = []
    sign = -1.0 if sf["negate"] else 1.0
    for x in _xs(sf):
        arg = sign * float(x) + 0.0  # no negative zero
        if sf["function"] == "mittag_leffler":
            r = specfun.ml_eval(sf["beta"], arg, sf["abs_tol"])
        else:
            r = specfun.mwright_eval(sf["beta"], arg, sf["abs_tol"])
        rows.append((sf["function"], float(sf["beta"]), arg, r.value, r.est_error, r.method))
    return {"specfun": rows}, []


def _cmd_kernel(cfg: ExperimentConfig):
    kn = cfg.kernel
    rows = []
    worst = 0.0
    for a in kn["alphas"]:
        for t in kn["times"]:
            for s in kn["times"]:
                closed = fracops.cov_kernel(a, t, s)
                quad, _ = fracops.eta_l2_inner(a, t, s, abs_tol=min(1e-9, kn["abs_tol"]))
                diff = abs(quad - closed)
                worst = max(worst, diff)
                rows.append((a, t, s, closed, quad, diff))
    check = checks.CheckResult("kernel quadrature vs covariance", worst <= kn["abs_tol"], worst, kn["abs_tol"])
    return {"kernel": rows}, [check]


def _cmd_sample(cfg: ExperimentConfig):
    batch = sampler.sample_paths(
        cfg.params, cfg.grid, cfg.n_paths, cfg.seed, cfg.method, threads=cfg.threads
    )
    files = {"paths": (batch.values, cfg.grid.times)}
    return files, []


def _cmd_silt(cfg: ExperimentConfig):
    batch = sampler.sample_paths(
        cfg.params, cfg.grid, cfg.n_paths, cfg.seed, cfg.method, threads=cfg.threads
    )
    est = silt.estimate_silt(batch, cfg.eps, cfg.diagonal_included)
    oracle = silt.expected_silt_oracle(cfg.params, cfg.eps, cfg.grid.t_max)
    bias = silt.discretization_bias(cfg.params, cfg.grid, cfg.eps, cfg.diagonal_included)
    tol = 4 * est.stderr + abs(bias)
    check = checks.CheckResult(
        "SILT estimate vs oracle", abs(est.mean - oracle) <= tol, abs(est.mean - oracle), tol, cfg.n_paths
    )
    bound = silt.silt_bound(cfg.params, cfg.grid.t_max, cfg.phi_norm_sq)
    report = {
        "estimate": est.to_dict(),
        "oracle": oracle,
        "bias": bias,
        "bound": bound.to_dict(),
        "t_transform": silt.compare_t_transforms(cfg.params, cfg.grid.t_max).to_dict(),
    }
    p = cfg.params
    row = (p.beta, p.alpha, p.d, est.t, est.eps, est.mean, est.stderr, est.n_paths,
           est.diagonal_included, oracle, bias)
    return {"silt": (report, [row])}, [check]


def _cmd_sweep(cfg: ExperimentConfig):
    rep = silt.eps_sweep(
        cfg.params, cfg.grid.t_max, cfg.eps_list, cfg.n_paths, SeedSpec(cfg.seed),
        n_grid=cfg.grid.n, method=cfg.method, diagonal_included=cfg.diagonal_included,
        threads=cfg.threads,
    )
    rows = [(e.eps, e.mean, e.stderr, e.n_paths, o) for e, o in zip(rep.estimates, rep.oracle_values)]
    return {"sweep": (rep.to_dict(), rows)}, []


def _cmd_verify(cfg: ExperimentConfig):
    results = checks.run_all(cfg.seed, cfg.verify["scale"], cfg.threads, cfg.verify["criteria"])
    for r in results:
        print(r.line(), flush=True)
    return {"checks": None}, results


_RUNNERS = {
    "specfun": _cmd_specfun,
    "kernel": _cmd_kernel,
    "sample": _cmd_sample,
    "silt": _cmd_silt,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_results(cfg: ExperimentConfig, out: Path, files: dict, results: list) -> list[Path]:
    written = []
    csv_mode = cfg.format == "csv"
    for name, payload in files.items():
        if name == "paths":
            values, times = payload
            if csv_mode:
                path = out / "paths.csv"
                io.paths_to_csv(path, values, times)
            else:
                path = out / "paths.json"
                path.write_text(io.dumps_json({"times": times, "values": values}))
            written.append(path)
            if cfg.sample["binary"]:
                path = out / "paths.bin"
                path.write_bytes(io.paths_to_bytes(values, times))
                written.append(path)
            continue
        if name == "checks":
            rows = [(r.name, r.passed, r.measured, r.tolerance) for r in results]
            obj = [
                {k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results
            ]
        elif isinstance(payload, tuple):
            obj, rows = payload
        else:
            rows = payload
            obj = [dict(zip(io.CSV_SCHEMAS[name][1], r)) for r in rows]
        path = out / f"{name}.{cfg.format}"
        if csv_mode:
            io.write_csv(path, name, rows)
        else:
            path.write_text(io.dumps_json(obj))
        written.append(path)
    return written


def run(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Execute ``cfg`` and write results plus manifest; returns (manifest, exit code)."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for w in cfg.warnings:
        log.warning(w)
    t0 = time.perf_counter()
    error = None
    try:
        files, results = _RUNNERS[cfg.command](cfg)
        written = _write_results(cfg, out, files, results)
    except (ArithmeticError, ValueError, sampler.SamplerError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        written, results = [], []
    elapsed = time.perf_counter() - t0
    failed = error is not None or any(not r.passed for r in results)
    schemas = {}
    for p in written:
        key = "paths" if p.stem == "paths" else p.stem
        if p.suffix == ".csv":
            ver = io.CSV_SCHEMAS[key][0]
            schemas[p.name] = f"{key}/csv/v{ver}"
        elif p.suffix == ".bin":
            schemas[p.name] = f"{key}/binary/{io.PATHS_MAGIC.decode()}"
        else:
            schemas[p.name] = f"{key}/json/v1"
    manifest = {
        "toolkit_version": __version__,
        "command": cfg.command,
        "config_digest": cfg.digest(),
        "config": cfg.resolved(),
        "master_seed": cfg.seed,
        "threads": cfg.threads,
        "wall_clock_seconds": elapsed,
        "files": [{"name": p.name, "schema": schemas[p.name], "sha256": _sha256(p)} for p in written],
        "checks": [r.to_dict() for r in results],
        "warnings": list(cfg.warnings),
        "error": error,
        "status": "failed" if failed else "ok",
    }
    (out / "manifest.json").write_text(io.dumps_json(manifest))
    if error:
        print(f"error: {error}", file=sys.stderr)
    return manifest, 1 if failed else 0


def _parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError([f"--param {text!r}: expected key=value"])
    key, val = text.split("=", 1)
    try:
        parsed = _yaml_load(val)
    except yaml.YAMLError:
        parsed = val
    return key.strip(), parsed


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ggbm", description="ggBm simulation and verification runner")
    ap.add_argument("--version", action="version", version=f"ggbm {__version__}")
    ap.add_argument("--config", help="YAML or JSON config file")
    ap.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"), help="result file format")
    ap.add_argument("--threads", type=int, help="worker threads for path sampling")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument(
        "--param", "-p", action="append", default=[], metavar="KEY=VALUE",
        help="override a config field, e.g. params.beta=0.5 or eps_list=[0.1,0.01]",
    )
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        text = None
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError([f"config: cannot read {args.config} ({exc.strerror})"]) from exc
        overrides = dict(_parse_override(p) for p in args.param)
        overrides["command"] = args.command
        for key in ("seed", "out", "format", "threads"):
            val = getattr(args, key)
            if val is not None:
                overrides[key] = val
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    _, code = run(cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
