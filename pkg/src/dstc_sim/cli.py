"""Command-line front end.

Subcommands:
  ber       run BER sweeps from a JSON config, writing CSV plus a manifest
  powalloc  tabulate optimum power allocations over a power range
  snrmap    dump the closed-form SNR over the whole allocation simplex
  validate  run the fast self-check suite

Exit codes: 0 success, 1 failed validation checks, 2 configuration or
argument problems, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from .harness import RunConfig, config_hash, run_ber, write_ber_csv, write_manifest
from .powalloc import GridSpec, allocation_table, fit_quadratic, simplex_grid, write_allocation_csv
from .protocols import Protocol
from .snr import snr_closed_form
from .validate import KNOWN_FAULTS, run_validation

CONFIG_KEYS = {
    "protocol": str,
    "protocols": list,
    "T": int,
    "N": int,
    "M": int,
    "sigma2sq": (int, float, list),
    "P_dB": list,
    "blocks": int,
    "seed": int,
    "allocation": str,
    "p1": (int, float),
    "p2": (int, float),
    "p3": (int, float),
    "matrix_family": str,
    "matrix_redraw": str,
    "grid_delta": (int, float),
    "grid_eps": (int, float),
}

REQUIRED_KEYS = ("T", "N", "M", "sigma2sq", "P_dB", "blocks", "seed")


class ConfigError(Exception):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _line_of_key(path: str, key: str) -> str:
    """Best-effort line number of a key, for pinpointing diagnostics."""
    try:
        for lineno, line in enumerate(open(path), start=1):
            if f'"{key}"' in line:
                return f" (line {lineno})"
    except OSError:
        pass
    return ""


def expand_configs(data: dict, path: str) -> list[RunConfig]:
    """Strictly validate the JSON mapping and expand list-valued fields."""
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown config key {key!r}{_line_of_key(path, key)}")
    for key, types in CONFIG_KEYS.items():
        if key in data and not isinstance(data[key], types):
            raise ConfigError(f"config key {key!r}{_line_of_key(path, key)} has the wrong type")
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    if "protocol" in data and "protocols" in data:
        raise ConfigError("give either 'protocol' or 'protocols', not both")
    if "protocol" not in data and "protocols" not in data:
        raise ConfigError("missing required config key: protocol (or protocols)")

    protocols = data.get("protocols", [data.get("protocol")])
    sigmas = data["sigma2sq"]
    if not isinstance(sigmas, list):
        sigmas = [sigmas]

    configs = []
    for proto in protocols:
        try:
            protocol = Protocol(proto)
        except ValueError:
            raise ConfigError(f"protocol: unknown value {proto!r}{_line_of_key(path, 'protocol')}") from None
        for sigma in sigmas:
            config = RunConfig(
                protocol=protocol,
                sigma2sq=float(sigma),
                p_dbs=tuple(float(p) for p in data["P_dB"]),
                blocks=int(data["blocks"]),
                seed=int(data["seed"]),
                t=int(data["T"]),
                n_relays=int(data["N"]),
                m=int(data["M"]),
                allocation=data.get("allocation"),
                p1=data.get("p1"),
                p2=data.get("p2"),
                p3=data.get("p3"),
                matrix_family=data.get("matrix_family", "real-orthogonal"),
                matrix_redraw=data.get("matrix_redraw", "per-run"),
                grid_delta=float(data.get("grid_delta", 0.001)),
                grid_eps=float(data.get("grid_eps", 0.001)),
            )
            problems = config.validate()
            if problems:
                raise ConfigError("; ".join(problems))
            configs.append(config)
    return configs


def _default_threads(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("DSTC_SIM_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def cmd_ber(args) -> int:
    try:
        data = _load_config(args.config)
        configs = expand_configs(data, args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed_override is not None:
        import dataclasses

        configs = [dataclasses.replace(c, seed=args.seed_override) for c in configs]
        data = dict(data, seed=args.seed_override)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = _default_threads(args.threads)
    config_dicts = [c.to_dict() for c in configs]
    try:
        all_results = []
        for config in configs:
            all_results.extend(run_ber(config, threads=threads))
    except Exception as exc:  # noqa: BLE001 - report and signal runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    csv_path = out_dir / "ber.csv"
    write_ber_csv(
        all_results,
        csv_path,
        header_comments=[f"config_hash={config_hash({'configs': config_dicts})}"],
    )
    write_manifest(
        out_dir / "manifest.json",
        config_dicts,
        threads=threads,
        created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    print(f"wrote {csv_path}")
    return 0


def _parse_range(spec: str):
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) in (2, 3):
        start, stop = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else 1.0
        if step <= 0 or stop < start:
            raise ValueError
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    raise ValueError


def cmd_powalloc(args) -> int:
    try:
        p_dbs = _parse_range(args.p_db)
    except ValueError:
        print(f"bad P_dB range {args.p_db!r}; expected START:STOP[:STEP]", file=sys.stderr)
        return 2
    try:
        protocol = Protocol(args.protocol)
    except ValueError:
        print(f"unknown protocol {args.protocol!r}", file=sys.stderr)
        return 2
    grid = GridSpec(args.grid, args.grid)
    rows = allocation_table(protocol, args.sigma2sq, p_dbs, grid=grid, n_relays=args.n_relays)
    params = {
        "command": "powalloc",
        "protocol": protocol.value,
        "sigma2sq": args.sigma2sq,
        "P_dB": p_dbs,
        "grid": args.grid,
        "N": args.n_relays,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_allocation_csv(rows, out, header_comments=[f"config_hash={config_hash(params)}"])
    if args.fit:
        fit = fit_quadratic([(10.0 ** (r["P_dB"] / 10.0), r["p1_frac"]) for r in rows])
        fit_path = out.with_suffix(".fit.json")
        with open(fit_path, "w") as fh:
            json.dump(
                {"abscissa": "P_linear", "fraction": "p1", "a": fit.a, "b": fit.b, "c": fit.c},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        print(f"wrote {fit_path}")
    print(f"wrote {out}")
    return 0


def cmd_snrmap(args) -> int:
    try:
        protocol = Protocol(args.protocol)
    except ValueError:
        print(f"unknown protocol {args.protocol!r}", file=sys.stderr)
        return 2
    total = 10.0 ** (args.p_db / 10.0)
    grid = GridSpec(args.grid, args.grid)
    p1, p2, p3 = simplex_grid(total, grid)
    values = snr_closed_form(protocol, p1, p2, p3, args.sigma2sq, n_relays=args.n_relays)
    params = {
        "command": "snrmap",
        "protocol": protocol.value,
        "sigma2sq": args.sigma2sq,
        "P_dB": args.p_db,
        "grid": args.grid,
        "N": args.n_relays,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash(params)}\n")
        fh.write("p1,p2,p3,snr\n")
        for a, b, c, v in zip(p1, p2, p3, values):
            fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r},{float(v)!r}\n")
    print(f"wrote {out}")
    return 0


def cmd_validate(args) -> int:
    results = run_validation(inject_fault=args.inject_fault)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.seconds:6.2f}s  {r.detail}")
        failed += not r.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dstc-sim",
        description="Link-level simulator for two-layer amplify-and-forward relay protocols",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ber = sub.add_parser("ber", help="run BER sweeps from a JSON config")
    ber.add_argument("--config", required=True, help="JSON run configuration")
    ber.add_argument("--out", required=True, help="output directory")
    ber.add_argument("--threads", type=int, default=None, help="worker processes (env DSTC_SIM_THREADS)")
    ber.add_argument("--seed-override", type=int, default=None)
    ber.set_defaults(func=cmd_ber)

    pa = sub.add_parser("powalloc", help="tabulate optimum power allocations")
    pa.add_argument("--protocol", required=True)
    pa.add_argument("--sigma2sq", type=float, required=True)
    pa.add_argument("--p-db", required=True, help="range START:STOP[:STEP] in dB")
    pa.add_argument("--grid", type=float, default=0.001, help="search granularity")
    pa.add_argument("--n-relays", type=int, default=5)
    pa.add_argument("--out", required=True, help="output CSV path")
    pa.add_argument("--fit", action="store_true", help="also fit a quadratic rule to p1 fractions")
    pa.set_defaults(func=cmd_powalloc)

    sm = sub.add_parser("snrmap", help="dump closed-form SNR over the simplex")
    sm.add_argument("--protocol", required=True)
    sm.add_argument("--sigma2sq", type=float, required=True)
    sm.add_argument("--p-db", type=float, required=True)
    sm.add_argument("--grid", type=float, default=0.01, help="simplex granularity")
    sm.add_argument("--n-relays", type=int, default=5)
    sm.add_argument("--out", required=True, help="output CSV path")
    sm.set_defaults(func=cmd_snrmap)

    va = sub.add_parser("validate", help="run the fast self-check suite")
    va.add_argument("--inject-fault", choices=KNOWN_FAULTS, default=None)
    va.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
