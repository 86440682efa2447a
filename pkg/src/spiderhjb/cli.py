"""Batch front end.

A single YAML configuration file drives everything:

.. code-block:: yaml

    instance:
      name: reflecting_distance_payoff     # catalog entry
      params: {ray_count: 2, sigma: 1.0}   # builder keyword arguments
    grid:          # finite-difference domain (needed by solve and PDE checks)
      x_max: 6.0
      n_x: 201
      l_max: 1.0
      n_l: 3
      safety: 0.9
    simulation:    # Monte Carlo defaults (needed by simulate and MC checks)
      dt: 1.0e-4
      n_paths: 10000
      seed: 1234
      start: {t: 0.0, x: 0.0, ray: 1, l: 0.0}
      policy: constant       # or "solved" (requires grid)
      dump_paths: 0          # number of individual paths to export
    verify:
      checks:
        - name: comparison
          params: {shift: 1.0}
        - name: diffraction
          params: {deltas: [0.05, 0.1], n_paths: 20000}
    output:
      directory: out
      prefix: run

Commands: ``validate`` (structural-assumption report), ``solve`` (value/policy
CSV), ``simulate`` (value estimate, optional path dump), ``verify`` (check
report CSV), ``all`` (chain of the configured stages). Unknown keys anywhere
are rejected with the offending field path. Exit status: 0 all good, 1 a
check or assumption failed, 2 configuration/schema error, 3 numerical
failure (the stage is named on stderr).

Every output file starts with a ``config_sha256`` header over the raw config
bytes, plus a timestamp line unless ``--no-timestamp`` is given; with the
timestamp suppressed, rerunning the same config and seed reproduces every
file byte for byte. A run assumes it owns its output directory: nothing
locks concurrent runs writing the same prefix.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import hjb, model, simulate, verify
from .network import NetworkPoint


class ConfigError(ValueError):
    """Configuration violates the schema; the message names the field path."""


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

# leaf kinds: float / int / str / bool accept exactly that YAML scalar type
# (bool is never a number); number_list is a non-empty list of floats;
# probe is [t, x, ray, l]; probe_list a non-empty list of probes; params a
# free-form mapping handed to the catalog builder.

_GRID_KEYS = {"x_max": "float", "n_x": "int", "l_max": "float", "n_l": "int", "safety": "float"}
_GRID_REQUIRED = ("x_max", "n_x", "l_max", "n_l")

_SIM_KEYS = {
    "dt": "float",
    "n_paths": "int",
    "seed": "int",
    "start": {"t": "float", "x": "float", "ray": "int", "l": "float"},
    "policy": "str",
    "dump_paths": "int",
}
_SIM_REQUIRED = ("dt", "n_paths", "seed")

_CHECK_PARAM_KEYS = {
    "diffraction": {
        "t0": "float", "l0": "float", "deltas": "number_list",
        "n_paths": "int", "dt": "float", "seed": "int", "t_cap": "float",
    },
    "nonstickiness": {
        "t0": "float", "x": "float", "ray": "int", "l0": "float",
        "eps": "number_list", "n_paths": "int", "dt": "float", "seed": "int",
    },
    "localtime_rate": {
        "t_star": "float", "l_star": "float", "radii": "number_list",
        "n_paths": "int", "dt": "float", "seed": "int", "t_cap": "float",
    },
    "value": {
        "probes": "probe_list", "tol_disc": "float",
        "n_paths": "int", "dt": "float", "seed": "int",
    },
    "dpp": {
        "probe": "probe", "stop_kind": "str", "stop_level": "float",
        "tol_disc": "float", "n_paths": "int", "dt": "float", "seed": "int",
    },
    "comparison": {"shift": "float"},
    "truncation": {"probes": "probe_list", "rel_tol": "float"},
}
_CHECK_REQUIRED = {
    "diffraction": ("deltas",),
    "nonstickiness": ("eps",),
    "localtime_rate": ("radii",),
    "value": ("probes", "tol_disc"),
    "dpp": ("probe", "stop_kind", "stop_level", "tol_disc"),
    "comparison": ("shift",),
    "truncation": ("probes",),
}
_CHECKS_NEEDING_GRID = ("value", "dpp", "comparison", "truncation")

_SCHEMA = {
    "instance": {"name": "str", "params": "params"},
    "grid": _GRID_KEYS,
    "simulation": _SIM_KEYS,
    "verify": {"checks": "checks"},
    "output": {"directory": "str", "prefix": "str"},
}


def _check_scalar(value, kind: str, path: str):
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"at {path}: expected a number, got {type(value).__name__}")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"at {path}: expected an integer, got {type(value).__name__}")
        return int(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"at {path}: expected a string, got {type(value).__name__}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"at {path}: expected a boolean, got {type(value).__name__}")
        return value
    raise AssertionError(kind)


def _check_probe(value, path: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigError(f"at {path}: a probe is [t, x, ray, l]")
    t = _check_scalar(value[0], "float", f"{path}[0]")
    x = _check_scalar(value[1], "float", f"{path}[1]")
    ray = _check_scalar(value[2], "int", f"{path}[2]")
    l = _check_scalar(value[3], "float", f"{path}[3]")
    return (t, NetworkPoint(x, ray), l)


def _check_leaf(value, kind, path: str):
    if isinstance(kind, dict):
        return _check_mapping(value, kind, path)
    if kind in ("float", "int", "str", "bool"):
        return _check_scalar(value, kind, path)
    if kind == "number_list":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"at {path}: expected a non-empty list of numbers")
        return [_check_scalar(v, "float", f"{path}[{j}]") for j, v in enumerate(value)]
    if kind == "probe":
        return _check_probe(value, path)
    if kind == "probe_list":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"at {path}: expected a non-empty list of probes")
        return [_check_probe(v, f"{path}[{j}]") for j, v in enumerate(value)]
    if kind == "params":
        if not isinstance(value, dict) or not all(isinstance(k, str) for k in value):
            raise ConfigError(f"at {path}: expected a mapping with string keys")
        return dict(value)
    if kind == "checks":
        return _check_checks(value, path)
    raise AssertionError(kind)


def _check_mapping(value, keys: dict, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"at {path}: expected a mapping")
    out = {}
    for k, v in value.items():
        if k not in keys:
            raise ConfigError(f"unknown key at {path}: {k!r} (allowed: {sorted(keys)})")
        out[k] = _check_leaf(v, keys[k], f"{path}.{k}")
    return out


def _check_checks(value, path: str) -> list[dict]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"at {path}: expected a non-empty list of checks")
    out = []
    for j, item in enumerate(value):
        here = f"{path}[{j}]"
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigError(f"at {here}: a check is a mapping with a 'name'")
        extra = set(item) - {"name", "params"}
        if extra:
            raise ConfigError(f"unknown key at {here}: {sorted(extra)[0]!r}")
        name = item["name"]
        if name not in _CHECK_PARAM_KEYS:
            raise ConfigError(
                f"at {here}.name: unknown check {name!r} "
                f"(available: {sorted(_CHECK_PARAM_KEYS)})"
            )
        params = _check_mapping(item.get("params", {}), _CHECK_PARAM_KEYS[name], f"{here}.params")
        for req in _CHECK_REQUIRED[name]:
            if req not in params:
                raise ConfigError(f"at {here}.params: check {name!r} requires {req!r}")
        out.append({"name": name, "params": params})
    return out


def load_config(path) -> dict:
    """Parse and schema-validate a YAML config; raise ConfigError on any
    violation, naming the offending field."""
    raw = Path(path).read_bytes()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping of sections")
    cfg = _check_mapping(doc, _SCHEMA, "config")
    if "instance" not in cfg or "name" not in cfg["instance"]:
        raise ConfigError("at config.instance: section with a 'name' is required")
    if cfg["instance"]["name"] not in model.CATALOG:
        raise ConfigError(
            f"at config.instance.name: {cfg['instance']['name']!r} is not in the "
            f"catalog (available: {sorted(model.CATALOG)})"
        )
    if "grid" in cfg:
        for req in _GRID_REQUIRED:
            if req not in cfg["grid"]:
                raise ConfigError(f"at config.grid: {req!r} is required")
    if "simulation" in cfg:
        for req in _SIM_REQUIRED:
            if req not in cfg["simulation"]:
                raise ConfigError(f"at config.simulation: {req!r} is required")
        pol = cfg["simulation"].get("policy", "constant")
        if pol not in ("constant", "solved"):
            raise ConfigError("at config.simulation.policy: must be 'constant' or 'solved'")
        if pol == "solved" and "grid" not in cfg:
            raise ConfigError("at config.simulation.policy: 'solved' needs a grid section")
        if cfg["simulation"].get("dump_paths", 0) < 0:
            raise ConfigError("at config.simulation.dump_paths: must be >= 0")
    for j, chk in enumerate(cfg.get("verify", {}).get("checks", ())):
        if chk["name"] in _CHECKS_NEEDING_GRID and "grid" not in cfg:
            raise ConfigError(
                f"at config.verify.checks[{j}]: check {chk['name']!r} needs a grid section"
            )
    cfg["config_sha256"] = hashlib.sha256(raw).hexdigest()
    return cfg


# ---------------------------------------------------------------------------
# assembly from validated sections
# ---------------------------------------------------------------------------


def _build_instance(cfg) -> tuple[model.ProblemData, model.ControlSets]:
    sec = cfg["instance"]
    builder = model.CATALOG[sec["name"]]
    try:
        return builder(**sec.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"at config.instance.params: {exc}") from exc


def _build_grid(cfg, data) -> hjb.Grid:
    sec = cfg["grid"]
    try:
        return hjb.build_grid(
            data,
            x_max=sec["x_max"],
            n_x=sec["n_x"],
            l_max=sec["l_max"],
            n_l=sec["n_l"],
            cfl_safety=sec.get("safety", 0.9),
        )
    except ValueError as exc:
        raise ConfigError(f"at config.grid: {exc}") from exc


def _sim_defaults(cfg) -> dict:
    return cfg.get("simulation", {})


def _start_state(cfg) -> tuple[float, NetworkPoint, float]:
    s = _sim_defaults(cfg).get("start", {})
    return (
        s.get("t", 0.0),
        NetworkPoint(s.get("x", 0.0), s.get("ray", 1)),
        s.get("l", 0.0),
    )


def _header_lines(cfg, args) -> list[str]:
    lines = [f"config_sha256={cfg['config_sha256']}"]
    if not args.no_timestamp:
        lines.append(f"generated={datetime.now(timezone.utc).isoformat()}")
    return lines


def _out_path(cfg, args, stem: str) -> Path:
    sec = cfg.get("output", {})
    directory = Path(args.out) if args.out else Path(sec.get("directory", "."))
    directory.mkdir(parents=True, exist_ok=True)
    prefix = sec.get("prefix", "")
    return directory / (f"{prefix}_{stem}" if prefix else stem)


def _run_seed(cfg, args) -> int:
    if args.seed is not None:
        return args.seed
    return _sim_defaults(cfg).get("seed", 0)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_validate(cfg, args) -> int:
    data, controls = _build_instance(cfg)
    grid_sec = cfg.get("grid", {})
    report = model.validate_assumptions(
        data, controls,
        x_max=grid_sec.get("x_max", 4.0),
        l_max=grid_sec.get("l_max", 2.0),
    )
    lines = [f"# {h}" for h in _header_lines(cfg, args)]
    lines.append("condition,measured,declared,satisfied")
    for e in report.entries:
        declared = "" if e.declared is None else repr(e.declared)
        lines.append(f"{e.condition},{e.measured!r},{declared},{str(e.satisfied).lower()}")
    path = _out_path(cfg, args, "assumptions.csv")
    path.write_text("\n".join(lines) + "\n")
    print(report.summary())
    print(f"wrote {path}")
    return 0 if report.satisfied else 1


def _cmd_solve(cfg, args) -> int:
    if "grid" not in cfg:
        raise ConfigError("at config: 'solve' needs a grid section")
    data, controls = _build_instance(cfg)
    grid = _build_grid(cfg, data)
    field, policy = hjb.solve_backward(data, controls, grid)
    meta = {h.split("=", 1)[0]: h.split("=", 1)[1] for h in _header_lines(cfg, args)}
    path = _out_path(cfg, args, "value.csv")
    hjb.export_value_csv(field, policy, path, meta=meta)
    print(f"solved on {grid.n_t} time levels; wrote {path}")
    return 0


def _policy_for_simulation(cfg, data, controls):
    if _sim_defaults(cfg).get("policy", "constant") == "solved":
        _, policy = hjb.solve_backward(data, controls, _build_grid(cfg, data))
        return policy
    return simulate.constant_policy(data, controls)


def _cmd_simulate(cfg, args) -> int:
    if "simulation" not in cfg:
        raise ConfigError("at config: 'simulate' needs a simulation section")
    data, controls = _build_instance(cfg)
    sim = _sim_defaults(cfg)
    config = simulate.SimConfig(dt=sim["dt"], n_paths=sim["n_paths"], seed=_run_seed(cfg, args))
    init = _start_state(cfg)
    policy = _policy_for_simulation(cfg, data, controls)
    mean, se = simulate.estimate_value(data, policy, init, config)
    lines = [f"# {h}" for h in _header_lines(cfg, args)]
    lines.append("t,x,ray,l,n_paths,dt,seed,estimate,std_error")
    t0, point, l0 = init
    lines.append(
        f"{t0!r},{point.x!r},{point.ray},{l0!r},{config.n_paths},"
        f"{config.dt!r},{config.seed},{mean!r},{se!r}"
    )
    path = _out_path(cfg, args, "estimate.csv")
    path.write_text("\n".join(lines) + "\n")
    print(f"estimate {mean:.6g} +- {se:.3g} (n={config.n_paths}); wrote {path}")
    n_dump = sim.get("dump_paths", 0)
    if n_dump > 0:
        paths = [
            simulate.simulate_path(data, policy, init, config, path_index=j)[0]
            for j in range(n_dump)
        ]
        dump = _out_path(cfg, args, "paths.csv")
        simulate.export_paths_csv(paths, dump, header_lines=_header_lines(cfg, args))
        print(f"dumped {n_dump} paths to {dump}")
    return 0


def _run_check(name, params, data, controls, grid, sim, fallback_seed):
    """Execute one configured check; pure function of its arguments."""
    n_paths = params.get("n_paths", sim.get("n_paths", 10000))
    seed = params.get("seed", fallback_seed)

    if name == "diffraction":
        return verify.check_diffraction_law(
            data, params.get("t0", 0.0), params.get("l0", 0.0), params["deltas"],
            n_paths, seed, dt=params.get("dt", sim.get("dt", 1e-4)),
            t_cap=params.get("t_cap"),
        )
    if name == "nonstickiness":
        start = (
            params.get("t0", 0.0),
            NetworkPoint(params.get("x", 0.0), params.get("ray", 1)),
            params.get("l0", 0.0),
        )
        return verify.check_nonstickiness(
            data, start, params["eps"], n_paths, seed,
            dt=params.get("dt", sim.get("dt", 1e-4)),
        )
    if name == "localtime_rate":
        return verify.check_localtime_rate(
            data, params.get("t_star", 0.0), params.get("l_star", 0.0), params["radii"],
            n_paths, seed, dt=params.get("dt", sim.get("dt", 2.5e-5)),
            t_cap=params.get("t_cap"),
        )
    if name == "value":
        config = simulate.SimConfig(
            dt=params.get("dt", sim.get("dt", 1e-3)), n_paths=n_paths, seed=seed
        )
        return verify.check_value_characterization(
            data, controls, grid, config, params["probes"], tol_disc=params["tol_disc"]
        )
    if name == "dpp":
        config = simulate.SimConfig(
            dt=params.get("dt", sim.get("dt", 1e-3)), n_paths=n_paths, seed=seed
        )
        return verify.check_dpp(
            data, controls, grid, config, params["probe"],
            (params["stop_kind"], params["stop_level"]), tol_disc=params["tol_disc"],
        )
    if name == "comparison":
        return verify.check_comparison_monotonicity(data, controls, grid, params["shift"])
    if name == "truncation":
        return verify.check_truncation_robustness(
            data, controls, grid, params["probes"], rel_tol=params.get("rel_tol", 0.005)
        )
    raise AssertionError(name)


def _cmd_verify(cfg, args) -> int:
    if "verify" not in cfg:
        raise ConfigError("at config: 'verify' needs a verify section")
    data, controls = _build_instance(cfg)
    grid = _build_grid(cfg, data) if "grid" in cfg else None
    sim = _sim_defaults(cfg)
    run_seed = _run_seed(cfg, args)
    checks = cfg["verify"]["checks"]
    # per-check seeds are fixed by list position, so the report is identical
    # however the checks are scheduled
    jobs = [
        (chk["name"], chk["params"], data, controls, grid, sim, run_seed + 1000 * j)
        for j, chk in enumerate(checks)
    ]
    if args.jobs > 1 and len(jobs) > 1:
        from joblib import Parallel, delayed

        reports = Parallel(n_jobs=args.jobs)(delayed(_run_check)(*job) for job in jobs)
    else:
        reports = [_run_check(*job) for job in jobs]
    path = _out_path(cfg, args, "checks.csv")
    verify.export_check_csv(reports, path, header_lines=_header_lines(cfg, args))
    print(verify.summarize_reports(reports))
    print(f"wrote {path}")
    return 0 if all(r.passed for r in reports) else 1


_COMMANDS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
}


def _cmd_all(cfg, args) -> int:
    status = _cmd_validate(cfg, args)
    for name in ("solve", "simulate", "verify"):
        if name == "solve" and "grid" not in cfg:
            continue
        if name == "simulate" and "simulation" not in cfg:
            continue
        if name == "verify" and "verify" not in cfg:
            continue
        status = max(status, _COMMANDS[name](cfg, args))
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spiderhjb",
        description="Solve, simulate and cross-verify controlled diffusions "
        "on star networks from a YAML config.",
    )
    parser.add_argument(
        "command", choices=["validate", "solve", "simulate", "verify", "all"],
        help="stage to run ('all' chains the configured stages)",
    )
    parser.add_argument("--config", required=True, help="YAML configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument(
        "--no-timestamp", action="store_true",
        help="suppress the timestamp header (for byte-reproducible outputs)",
    )
    parser.add_argument(
        "--jobs", type=int, default=1, help="parallel workers for verify checks"
    )
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    runner = _cmd_all if args.command == "all" else _COMMANDS[args.command]
    try:
        return runner(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (hjb.NumericalError, simulate.SimulationError) as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # out-of-domain probes and similar runtime rejections
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
