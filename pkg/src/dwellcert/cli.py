"""Command-line front end.

    dwellcert analyze  SYSTEM.toml --mode {ranged,min,max,robust} --method {lemma,sos}
    dwellcert scan     SYSTEM.toml --range LO HI [--samples N]
    dwellcert simulate SYSTEM.toml (--periodic T | --uniform LO HI) [--cert REPORT.json]

``SYSTEM`` may also name a bundled example (``ex1`` .. ``ex5``). Reports are
JSON with sorted keys; numbers are given to 6 significant digits with an
exact ``float.hex`` sidecar. Exit codes: 0 success, 2 nothing certified,
3 numerical failure, 64 usage or input error.
"""
import argparse
import concurrent.futures
import csv
import hashlib
import io
import json
import math
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, dwell, linalg, sdp, sim

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64

DEFAULT_BRACKETS = {"min": (0.01, 100.0), "max": (0.001, 10.0), "ranged": (0.001, 10.0)}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# input


def _number(v):
    if isinstance(v, str):
        try:
            return float(Fraction(v.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad number {v!r}") from exc
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise UsageError(f"bad number {v!r}")
    return float(v)


def _matrices(value, key, n):
    """A single matrix or a list of vertex matrices -> list of arrays."""
    if not isinstance(value, list) or not value:
        raise UsageError(f"'{key}' must be a non-empty array")
    depth = 0
    probe = value
    while isinstance(probe, list):
        depth += 1
        probe = probe[0] if probe else None
    if depth == 2:
        value = [value]
    elif depth != 3:
        raise UsageError(f"'{key}' must be a matrix or a list of matrices")
    out = []
    for m in value:
        a = np.array([[_number(v) for v in row] for row in m])
        if a.shape != (n, n):
            raise UsageError(f"'{key}' vertex has shape {a.shape}, expected ({n}, {n})")
        out.append(a)
    return out


def load_system(path):
    """Parse a system file; returns ``(ImpulsiveSystem, raw bytes)``."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        bundled = resources.files("dwellcert") / "data" / f"{path}.toml"
        if bundled.is_file():
            raw = bundled.read_bytes()
            return _parse_system(raw, str(path)), raw
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    return _parse_system(raw, p.stem), raw


def _parse_system(raw, default_name):
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise UsageError(f"parse error: {exc}") from exc
    for key in ("n", "A", "J"):
        if key not in doc:
            raise UsageError(f"missing key '{key}'")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= linalg.MAX_DIM:
        raise UsageError(f"'n' must be an integer in 1..{linalg.MAX_DIM}")
    try:
        return dwell.ImpulsiveSystem(tuple(_matrices(doc["A"], "A", n)),
                                     tuple(_matrices(doc["J"], "J", n)),
                                     str(doc.get("name", default_name)))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_degrees(text):
    """``"3"`` or ``"1..4"`` -> list of ints."""
    try:
        if ".." in text:
            a, b = (int(s) for s in text.split("..", 1))
        else:
            a = b = int(text)
    except ValueError as exc:
        raise UsageError(f"bad degree range {text!r}") from exc
    if a < 1 or b < a:
        raise UsageError(f"bad degree range {text!r}")
    return list(range(a, b + 1))


# ---------------------------------------------------------------------------
# report helpers


def num(x):
    """6 significant digits plus an exact hex sidecar."""
    x = float(x)
    if not math.isfinite(x):
        return {"value": str(x), "hex": x.hex()}
    return {"value": float(f"{x:.6g}"), "hex": x.hex()}


def mat(m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return {"value": [[float(f"{v:.6g}") for v in row] for row in m],
            "hex": [[float(v).hex() for v in row] for row in m]}


def certificate_block(cert, sys_):
    d = dwell.certificate_to_dict(cert)
    d["display"] = {"P": mat(cert.P), "eps": num(cert.eps), "margin": num(cert.margin)}
    d["soundness_max_eig"] = num(dwell.soundness_check(cert, sys_))
    return d


def dump(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_output(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# analyze


SETTLE_STEPS = 6


def _settle(check, t, toward):
    """Move a bracket endpoint geometrically toward ``toward`` while the
    check fails numerically (tiny or huge periods are ill-conditioned for
    high degrees). Returns the endpoint used."""
    for _ in range(SETTLE_STEPS):
        if check(t).outcome != "numericalfailure":
            return t
        t = t * (toward / t) ** 0.25
    return t


def _bisect_row(check, lo, hi, tol):
    """Bisection plus bookkeeping: the bracket actually used and the number of
    numerical failures met (these count as not certified)."""
    seen = []

    def run(t):
        r = check(t)
        seen.append(r.outcome)
        return r

    lo = _settle(run, lo, hi)
    hi = _settle(run, hi, lo)
    extra = {"bracket": [num(lo), num(hi)]}
    try:
        res = dwell.bisect_dwell(run, lo, hi, tol)
    except dwell.BracketError as exc:
        ends = seen[-2:]
        if "numericalfailure" in ends:
            status = "numerical_failure"
        elif "both endpoints certified" in str(exc):
            status = "bracket_too_narrow"
        else:
            status = "not_certified"
        extra["numerical_failures"] = seen.count("numericalfailure")
        return None, status, str(exc), extra
    extra["numerical_failures"] = seen.count("numericalfailure")
    return res, "ok", "", extra


def _sos_options(args):
    return dwell.SosOptions(convention=args.degree_convention, eps_floor=args.eps_floor)


def _ranged_anchor(sys_, lo, hi):
    bands = [iv for iv, stable in dwell.periodic_scan(sys_, lo, hi, 2000) if stable]
    if not bands:
        return None
    a, b = max(bands, key=lambda iv: iv[1] - iv[0])
    return 0.5 * (a + b)


def analyze_row(sys_, mode, method, degree, lo, hi, tol, args, anchor=None):
    """One table row: boundary estimate(s) and certificate(s) for one degree."""
    opts = _sos_options(args)
    row = {"degree": degree}
    t0 = time.perf_counter()
    if mode == "ranged" or (mode == "robust" and args.robust_kind == "ranged"):
        if anchor is None:
            raise UsageError("ranged analysis needs a stable periodic anchor")
        if method == "lemma":
            chk = lambda a, b: dwell.lemma_ranged_check(sys_, a, b, args.grid)
        elif mode == "robust":
            chk = lambda a, b: dwell.thm_robust_check(sys_, dwell.DwellSpec.ranged(a, b), degree, opts)
        else:
            chk = lambda a, b: dwell.thm_ranged_check(sys_, a, b, degree, opts)
        left, s1, m1, x1 = _bisect_row(lambda t: chk(min(t, anchor), anchor), lo, anchor, tol)
        right, s2, m2, x2 = _bisect_row(lambda t: chk(anchor, max(t, anchor)), anchor, hi, tol)
        row["anchor"] = num(anchor)
        row["status"] = s1 if s1 != "ok" else s2
        row["message"] = m1 or m2
        row["search"] = {"t_min": x1, "t_max": x2}
        if left is not None and right is not None:
            row["t_min"], row["t_max"] = num(left.value), num(right.value)
            row["certificates"] = [certificate_block(left.certificate, sys_),
                                   certificate_block(right.certificate, sys_)]
            joint = chk(left.value, right.value)
            row["joint_interval_certified"] = bool(joint)
    else:
        kind = args.robust_kind if mode == "robust" else mode
        if method == "lemma":
            fn = dwell.lemma_min_dwell_check if kind == "min" else dwell.lemma_max_dwell_check
            chk = lambda t: fn(sys_, t)
        elif mode == "robust":
            make = dwell.DwellSpec.minimal if kind == "min" else dwell.DwellSpec.maximal
            chk = lambda t: dwell.thm_robust_check(sys_, make(t), degree, opts)
        else:
            fn = dwell.thm_min_dwell_check if kind == "min" else dwell.thm_max_dwell_check
            chk = lambda t: fn(sys_, t, degree, opts)
        res, status, msg, extra = _bisect_row(chk, lo, hi, tol)
        row["status"], row["message"], row["search"] = status, msg, extra
        if res is not None:
            row["boundary"] = num(res.value)
            row["steps"] = res.steps
            row["certificates"] = [certificate_block(res.certificate, sys_)]
    for c in row.get("certificates", []):
        if not float.fromhex(c["soundness_max_eig"]["hex"]) < 0:
            row["status"] = "unsound"
    row["_seconds"] = time.perf_counter() - t0
    return row


def _row_job(payload):
    return analyze_row(*payload)


def cmd_analyze(args):
    sys_, raw = load_system(args.file)
    mode, method = args.mode, args.method
    if mode == "robust" and method != "sos":
        raise UsageError("robust analysis requires --method sos")
    if mode != "robust" and not sys_.is_nominal:
        raise UsageError("polytopic systems need --mode robust")
    if method == "sos":
        degrees = parse_degrees(args.degree)
    else:
        degrees = [None]
    kind = args.robust_kind if mode == "robust" else mode
    lo, hi = args.bracket or DEFAULT_BRACKETS[kind]
    if not 0 < lo < hi:
        raise UsageError("bracket must satisfy 0 < lo < hi")
    anchor = args.anchor
    if kind == "ranged" and anchor is None:
        if not sys_.is_nominal:
            raise UsageError("robust ranged analysis needs --anchor")
        anchor = _ranged_anchor(sys_, lo, hi)
        if anchor is None:
            raise UsageError("no stable periodic band in the bracket; pass --anchor")
    start = time.perf_counter()
    payloads = [(sys_, mode, method, d, lo, hi, args.tol, args, anchor) for d in degrees]
    if args.jobs > 1 and len(payloads) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_row_job, payloads))
    else:
        rows = [_row_job(p) for p in payloads]
    timings = {"total_seconds": time.perf_counter() - start,
               "rows": [{"degree": r["degree"], "seconds": r.pop("_seconds")} for r in rows]}
    report = {
        "tool": {"name": "dwellcert", "version": __version__, "linalg_backend": linalg.BACKEND},
        "command": "analyze",
        "input": {"name": sys_.name, "sha256": hashlib.sha256(raw).hexdigest()},
        "mode": mode,
        "method": method,
        "options": {"tol": args.tol, "grid": args.grid, "eps_floor": args.eps_floor,
                    "degree_convention": args.degree_convention,
                    "bracket": [lo, hi], "robust_kind": args.robust_kind if mode == "robust" else None},
        "rows": rows,
        "timings": timings,
    }
    write_output(dump(report), args.out)
    if args.csv:
        _write_table_csv(rows, args.csv)
    statuses = [r["status"] for r in rows]
    if any(s in ("numerical_failure", "unsound") for s in statuses):
        return EXIT_NUMERICAL
    if all(s != "ok" for s in statuses):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _write_table_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        ranged = any("anchor" in r for r in rows)
        w.writerow(["degree", "t_min", "t_max", "status"] if ranged else ["degree", "boundary", "status"])
        for r in rows:
            deg = "" if r["degree"] is None else r["degree"]
            if ranged:
                vals = [r[k]["value"] if k in r else "" for k in ("t_min", "t_max")]
            else:
                vals = [r["boundary"]["value"] if "boundary" in r else ""]
            w.writerow([deg] + vals + [r["status"]])


# ---------------------------------------------------------------------------
# scan


def cmd_scan(args):
    sys_, raw = load_system(args.file)
    if not sys_.is_nominal:
        raise UsageError("scan needs a nominal system")
    lo, hi = args.range
    if not 0 < lo < hi:
        raise UsageError("range must satisfy 0 < lo < hi")
    start = time.perf_counter()
    bands = dwell.periodic_scan(sys_, lo, hi, args.samples)
    intervals = []
    for (a, b), stable in bands:
        entry = {"lo": num(a), "hi": num(b), "stable": bool(stable)}
        edges = [t for t in (a, b) if lo < t < hi]
        entry["edge_radius"] = [num(dwell.periodic_radius(sys_, t)) for t in edges]
        intervals.append(entry)
    report = {
        "tool": {"name": "dwellcert", "version": __version__, "linalg_backend": linalg.BACKEND},
        "command": "scan",
        "input": {"name": sys_.name, "sha256": hashlib.sha256(raw).hexdigest()},
        "options": {"range": [lo, hi], "samples": args.samples},
        "intervals": intervals,
        "timings": {"total_seconds": time.perf_counter() - start},
    }
    write_output(dump(report), args.out)
    return EXIT_OK if any(i["stable"] for i in intervals) else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# simulate


def load_certificate(path, degree=None):
    """First certificate of a report (or of the row with ``degree``)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read certificate report {path}: {exc}") from exc
    for row in doc.get("rows", []):
        if degree is not None and row.get("degree") != degree:
            continue
        for c in row.get("certificates", []):
            return dwell.certificate_from_dict(c)
    raise UsageError(f"no certificate found in {path}")


def cmd_simulate(args):
    sys_, raw = load_system(args.file)
    if not sys_.is_nominal:
        raise UsageError("simulate needs a nominal system")
    if (args.periodic is None) == (args.uniform is None):
        raise UsageError("give exactly one of --periodic or --uniform")
    kind = sim.Periodic(args.periodic) if args.periodic is not None else \
        sim.Uniform(args.uniform[0], args.uniform[1], args.seed)
    x0 = [_number(v) for v in args.x0.split(",")]
    if len(x0) != sys_.n:
        raise UsageError(f"x0 must have {sys_.n} entries")
    try:
        seq = sim.gen_sequence(kind, args.horizon)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.cert:
        cert = load_certificate(args.cert)
        p = cert.P
        sound = dwell.soundness_check(cert, sys_)
    else:
        p, sound = np.eye(sys_.n), None
    traj = sim.simulate(sys_, x0, seq, args.substeps)
    trace = sim.lyapunov_trace(traj, p)
    buf = io.StringIO()
    sim.write_trace_csv(traj, p, buf)
    write_output(buf.getvalue(), args.out)
    summary = {
        "impulses": len(seq),
        "envelope_decreasing": trace.envelope_decreasing,
        "flow_non_monotonic": sim.flow_increases(traj, trace.values),
        "certificate_soundness_max_eig": None if sound is None else num(sound),
        "input_sha256": hashlib.sha256(raw).hexdigest(),
    }
    sys.stderr.write(dump(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="dwellcert", description="Dwell-time certificates for linear impulsive systems")
    p.add_argument("--version", action="version", version=f"dwellcert {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="bisect dwell-time boundaries")
    a.add_argument("file")
    a.add_argument("--mode", choices=("ranged", "min", "max", "robust"), required=True)
    a.add_argument("--method", choices=("lemma", "sos"), default="sos")
    a.add_argument("--degree", default="1", help="degree or range a..b (sos only)")
    a.add_argument("--tol", type=float, default=1e-4)
    a.add_argument("--grid", type=int, default=20, help="grid points for the gridded lemma")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--eps-floor", type=float, default=1e-6)
    a.add_argument("--degree-convention", choices=("total", "tau-only"), default="total")
    a.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    a.add_argument("--anchor", type=float, help="interior point for ranged searches")
    a.add_argument("--robust-kind", choices=("max", "min", "ranged"), default="max")
    a.add_argument("--out", help="report path (default stdout)")
    a.add_argument("--csv", help="also write the table as CSV")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("scan", help="stability of periodic impulses")
    s.add_argument("file")
    s.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), default=(0.05, 1.0))
    s.add_argument("--samples", type=int, default=400)
    s.add_argument("--out")
    s.set_defaults(func=cmd_scan)

    m = sub.add_parser("simulate", help="simulate and write a Lyapunov trace CSV")
    m.add_argument("file")
    m.add_argument("--periodic", type=float, metavar="T")
    m.add_argument("--uniform", type=float, nargs=2, metavar=("LO", "HI"))
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--horizon", type=float, default=10.0)
    m.add_argument("--x0", default="1,1")
    m.add_argument("--substeps", type=int, default=sim.DEFAULT_SUBSTEPS)
    m.add_argument("--cert", help="report JSON holding a certificate")
    m.add_argument("--out", help="CSV path (default stdout)")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "tol", 1.0) <= 0 or getattr(args, "jobs", 1) < 1:
            raise UsageError("--tol must be positive and --jobs >= 1")
        if getattr(args, "samples", 2) < 2 or getattr(args, "grid", 2) < 2:
            raise UsageError("--samples and --grid must be >= 2")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"dwellcert: error: {exc}\n")
        return EXIT_USAGE
    except (sdp.linalg.ConvergenceError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"dwellcert: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
