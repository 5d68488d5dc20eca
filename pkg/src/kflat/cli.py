"""Command line: ``kflat run``, ``kflat report`` and ``kflat validate-cover``.

Exit codes: 0 when every assertion passes, 1 when one fails
(AssertionFailed), 2 for an invalid config or input file (ConfigInvalid).
"""
import argparse
import csv
import datetime
import glob
import json
import logging
import os
import sys

import numpy as np

from .covers import GoodCoverPair, validate_cover
from .errors import ConfigInvalid, InvalidCover, KFlatError
from .scenarios import SCENARIOS, run_scenario

log = logging.getLogger("kflat")

EXIT_OK, EXIT_ASSERTION, EXIT_CONFIG = 0, 1, 2


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigInvalid("cannot read config %s: %s" % (path, e))
    except json.JSONDecodeError as e:
        raise ConfigInvalid("config %s is not valid JSON: %s" % (path, e))


def _int_list(s):
    try:
        v = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated integers, got %r" % s)
    return v[0] if len(v) == 1 else v


def apply_overrides(cfg, args):
    cfg = dict(cfg)
    params = dict(cfg.get("params", {}))
    if args.scenario:
        cfg["scenario"] = args.scenario
    for key in ("n", "N", "grid"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg["params"] = params
    return cfg


def summary_rows(report):
    """Flat CSV rows: one per result entry."""
    rows = []
    base = {"scenario": report["scenario"], "passed": report["passed"]}
    for r in report.get("results", []):
        row = dict(base)
        for key, val in r.items():
            if isinstance(val, dict):
                for k2, v2 in val.items():
                    if not isinstance(v2, (dict, list)):
                        row["%s.%s" % (key, k2)] = v2
            elif not isinstance(val, list):
                row[key] = val
        rows.append(row)
    return rows or [base]


def write_csv(path, rows):
    fields = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow(_jsonable(r))


def cmd_run(args):
    cfg = apply_overrides(load_config(args.config), args)
    report, runtimes = run_scenario(cfg)
    report["meta"] = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "runtimes": runtimes,
    }
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "%s.json" % report["scenario"])
    with open(path, "w") as fh:
        fh.write(dumps(report) + "\n")
    if report["scenario"] == "sweep":
        write_csv(os.path.join(args.out, "sweep.csv"), summary_rows(report))
    for a in report["assertions"]:
        print("%s  %s" % ("PASS" if a["passed"] else "FAIL", a["name"]))
    print("report written to %s" % path)
    return EXIT_OK if report["passed"] else EXIT_ASSERTION


def cmd_report(args):
    files = sorted(glob.glob(os.path.join(args.dir, "*.json")))
    if not files:
        raise ConfigInvalid("no JSON reports in %s" % args.dir)
    rows, ok = [], True
    for f in files:
        try:
            with open(f) as fh:
                rep = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid("cannot read report %s: %s" % (f, e))
        if "scenario" not in rep or "assertions" not in rep:
            log.warning("skipping %s: not a kflat report", f)
            continue
        ok = ok and bool(rep.get("passed"))
        rows.extend(summary_rows(rep))
    out = os.path.join(args.dir, "summary.csv")
    write_csv(out, rows)
    for r in rows:
        desc = ", ".join("%s=%s" % (k, r[k]) for k in ("n", "N", "lhs", "rhs") if k in r)
        print("%-18s %-5s %s" % (r["scenario"], "PASS" if r["passed"] else "FAIL", desc))
    print("summary written to %s" % out)
    return EXIT_OK if ok else EXIT_ASSERTION


def cmd_validate_cover(args):
    try:
        cover = GoodCoverPair.load(args.file, validate=False)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigInvalid("cannot read cover %s: %s" % (args.file, e))
    try:
        rep = validate_cover(cover)
    except InvalidCover as e:
        print("INVALID  %s" % e)
        return EXIT_ASSERTION
    print(dumps(rep) if rep is not None else "valid")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="kflat", description="Quantitative index pairings for almost flat bundles.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--out", default="out")
    r.add_argument("--scenario", choices=SCENARIOS)
    r.add_argument("--n", type=_int_list)
    r.add_argument("--N", type=_int_list)
    r.add_argument("--grid", type=int)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)
    rp = sub.add_parser("report", help="aggregate run reports into summary.csv")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    v = sub.add_parser("validate-cover", help="check a good cover pair JSON file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate_cover)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigInvalid as e:
        print("ConfigInvalid: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except KFlatError as e:
        print("AssertionFailed: %s: %s" % (type(e).__name__, e), file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
