"""Command line: ``swnalg verify SUITE``, ``swnalg classify-endo``, ``swnalg sweep``.

Every subcommand prints one JSON array of check reports on standard output
and exits with status 0 exactly when every report passes.  Progress goes to
standard error unless ``--quiet`` is given.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from .kcell import KLinearMap
from .kms import CheckReport, KmsConfig, SWEEP_FIELDS, sweep
from .suites import SUITES, VERIFY, suite_config
from .swnlie import REASON_CONDITIONS, classify_quasifree

# flag name -> KmsConfig field
CONFIG_FLAGS = {"lambda": "lam", "gamma": "gamma", "sl2_cutoff": "sl2_cutoff",
                "particle_cutoff": "particle_cutoff", "half_width": "half_width",
                "cells": "cells", "tolerance": "tolerance", "seed": "seed", "pad": "pad"}

SWEEP_DEFAULTS = {"N": [10, 20, 40], "P": [2, 3, 4], "cells": [4, 8], "lambda": [0.3, 0.5, 0.7]}


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="JSON configuration file")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--sl2-cutoff", "-N", dest="sl2_cutoff", type=int)
    p.add_argument("--particle-cutoff", "-P", dest="particle_cutoff", type=int)
    p.add_argument("--half-width", dest="half_width", type=float)
    p.add_argument("--cells", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--pad", type=int, help="extra sl2 levels kept above the cutoff")
    p.add_argument("--quiet", action="store_true", help="print nothing but the JSON array")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swnalg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run one or more verification suites")
    v.add_argument("suites", nargs="+", choices=SUITES + ("all",))
    _add_config_flags(v)

    c = sub.add_parser("classify-endo", help="classify a triple (T1, T2, T3) of cell maps")
    c.add_argument("--t1", required=True, metavar="FILE")
    c.add_argument("--t2", required=True, metavar="FILE")
    c.add_argument("--t3", required=True, metavar="FILE")
    c.add_argument("--quiet", action="store_true")

    s = sub.add_parser("sweep", help="rerun the state suites while varying one parameter")
    s.add_argument("--vary", required=True, choices=sorted(SWEEP_FIELDS))
    s.add_argument("--values", help="comma separated values (default depends on --vary)")
    _add_config_flags(s)
    return parser


def load_config(args) -> tuple[KmsConfig, set]:
    """Config from ``--config`` with flags on top; also the set of fields set explicitly."""
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    cfg = KmsConfig.from_json(data)
    explicit = set()
    for key in data:
        explicit |= {"half_width", "cells"} if key == "grid" else {CONFIG_FLAGS.get(key, key)}
    overrides = {CONFIG_FLAGS[k]: getattr(args, k) for k in CONFIG_FLAGS
                 if getattr(args, k, None) is not None}
    explicit |= set(overrides)
    return replace(cfg, **overrides), explicit


def _log(args, msg: str):
    if not args.quiet:
        print(msg, file=sys.stderr)


def run_verify(args) -> list:
    base, explicit = load_config(args)
    names = list(SUITES) if "all" in args.suites else list(dict.fromkeys(args.suites))
    reports = []
    for name in names:
        t0 = time.perf_counter()
        cfg = suite_config(name, base, explicit)
        rs = VERIFY[name](cfg)
        failed = [r.check for r in rs if not r.passed]
        _log(args, f"[verify {name}] {len(rs) - len(failed)}/{len(rs)} passed "
                   f"in {time.perf_counter() - t0:.1f}s" + (f"; failing: {failed}" if failed else ""))
        reports += rs
    return reports


def _read_map(path: str) -> KLinearMap:
    with open(path) as fh:
        return KLinearMap.from_json(json.load(fh))


def run_classify(args) -> list:
    t0 = time.perf_counter()
    T1, T2, T3 = (_read_map(p) for p in (args.t1, args.t2, args.t3))
    res = classify_quasifree(T1, T2, T3)
    if res:
        params = {"quasifree": True, "T": res.T.to_json(), "alpha": res.alpha.to_json()}
        rep = CheckReport("classify-endo", params, 0.0, True, 1e3 * (time.perf_counter() - t0))
        _log(args, "quasifree: T1 = T2 = exp(i alpha) T3")
    else:
        params = {"quasifree": False, "reason": res.reason.value,
                  "condition": REASON_CONDITIONS[res.reason], "detail": res.detail}
        rep = CheckReport("classify-endo", params, res.violation, False,
                          1e3 * (time.perf_counter() - t0))
        _log(args, f"not quasifree: {res.reason.value} (violation {res.violation:.3g})")
    return [rep]


def _parse_values(vary: str, text: str | None) -> list:
    if text is None:
        return list(SWEEP_DEFAULTS[vary])
    cast = float if vary == "lambda" else int
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"cannot parse --values {text!r} for {vary}") from None


def run_sweep(args) -> list:
    cfg, _ = load_config(args)
    values = _parse_values(args.vary, args.values)
    t0 = time.perf_counter()
    rs = sweep(cfg, args.vary, values)
    failed = [r.check for r in rs if not r.passed]
    _log(args, f"[sweep {args.vary}={values}] {len(rs) - len(failed)}/{len(rs)} passed "
               f"in {time.perf_counter() - t0:.1f}s")
    return rs


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"cannot serialize {type(o).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    runner = {"verify": run_verify, "classify-endo": run_classify, "sweep": run_sweep}[args.command]
    try:
        reports = runner(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"swnalg: error: {e}", file=sys.stderr)
        return 2
    json.dump([r.to_json() for r in reports], sys.stdout, default=_jsonable, indent=1)
    sys.stdout.write("\n")
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
