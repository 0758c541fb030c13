"""Batch front end: problem files in, certified result files out.

The interchange dialect keeps every number exact.  Integers and
rationals travel as decimal strings ("3", "-7/2"), univariate
polynomials as low-to-high coefficient arrays, multivariate terms as
(coefficient, exponent tuple) pairs.  No binary floats appear anywhere
in the formats.
"""

import argparse
import json
import sys
from dataclasses import replace

from gmpy2 import mpq

from .exactcore import MPoly, tower, u_to_rat, u_trim
from .geomlift import ResourceLimitError
from .pieces import Problem, QuadMap, enum_pieces
from .pipeline import (PipelineConfig, PipelineError, _interval_from_thom,
                       _simplest_in, _value_box, decide, sample,
                       verify_membership)
from .realroots import RealURep, squarefree

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_RESOURCE = 4
EXIT_INTERNAL = 5


class InputFileError(Exception):
    """A problem or result file is malformed; str() names the field."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# -- exact number and file parsing --------------------------------------

def _rat(value, where):
    if not isinstance(value, str):
        raise InputFileError("%s: expected a number string, got %r"
                             % (where, value))
    try:
        return mpq(value)
    except (ValueError, ZeroDivisionError):
        raise InputFileError("%s: cannot read %r as an integer or a/b "
                             "rational" % (where, value)) from None


def _coeffs(value, where):
    if not isinstance(value, list):
        raise InputFileError("%s: expected a coefficient array" % where)
    return [_rat(x, "%s[%d]" % (where, i)) for i, x in enumerate(value)]


def _load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as err:
            raise InputFileError("%s: line %d column %d: %s"
                                 % (path, err.lineno, err.colno,
                                    err.msg)) from None


_FLAG_FIELDS = {
    "mode": str,
    "assume_bounded": bool,
    "assume_nonneg": bool,
    "jobs": int,
    "seed": int,
    "n_cap": int,
    "rational_eps1": "rational",
    "rational_eps2": "rational",
}


def _config_from(flags):
    if not isinstance(flags, dict):
        raise InputFileError("flags: expected an object")
    kw = {}
    for key, val in flags.items():
        want = _FLAG_FIELDS.get(key)
        if want is None:
            raise InputFileError("flags.%s: unknown flag" % key)
        if want == "rational":
            kw[key] = _rat(val, "flags.%s" % key)
        elif not isinstance(val, want) or (want is int
                                           and isinstance(val, bool)):
            raise InputFileError("flags.%s: expected %s"
                                 % (key, want.__name__))
        else:
            kw[key] = val
    try:
        return PipelineConfig(**kw)
    except ValueError as err:
        raise InputFileError("flags: %s" % err) from None


def parse_problem(path):
    """Problem plus run configuration from a JSON file, parsed exactly.

    The file holds n, k, the polynomial p as a term list over the k
    component values, the map Q as [H, b, c] triples of number strings,
    and optionally level, dist, and a flags object mirroring
    PipelineConfig.
    """
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise InputFileError("top level must be an object")
    for field in ("n", "k", "p", "Q"):
        if field not in doc:
            raise InputFileError("missing field %r" % field)
    n, k = doc["n"], doc["k"]
    if not isinstance(n, int) or not isinstance(k, int) or n < 1 or k < 1:
        raise InputFileError("n and k must be positive integers")
    tw = tower(())
    p = MPoly.zero(k, tw)
    if not isinstance(doc["p"], list):
        raise InputFileError("p: expected a term list")
    for t, term in enumerate(doc["p"]):
        if not isinstance(term, list) or len(term) != 2:
            raise InputFileError("p[%d]: expected [coefficient, exponents]"
                                 % t)
        c = _rat(term[0], "p[%d]" % t)
        exps = term[1]
        if (not isinstance(exps, list) or len(exps) != k
                or any(not isinstance(e, int) or isinstance(e, bool)
                       or e < 0 for e in exps)):
            raise InputFileError("p[%d]: exponents must be %d nonnegative "
                                 "integers" % (t, k))
        p = p + MPoly.mono(k, tw, tuple(exps), c)
    if not isinstance(doc["Q"], list) or len(doc["Q"]) != k:
        raise InputFileError("Q: expected %d components" % k)
    comps = []
    for j, comp in enumerate(doc["Q"]):
        if not isinstance(comp, list) or len(comp) != 3:
            raise InputFileError("Q[%d]: expected [H, b, c]" % j)
        Hraw, braw, craw = comp
        if (not isinstance(Hraw, list) or len(Hraw) != n
                or any(not isinstance(row, list) or len(row) != n
                       for row in Hraw)):
            raise InputFileError("Q[%d].H: expected a %d x %d matrix"
                                 % (j, n, n))
        H = tuple(tuple(_rat(x, "Q[%d].H[%d][%d]" % (j, r, s))
                        for s, x in enumerate(row))
                  for r, row in enumerate(Hraw))
        for r in range(n):
            for s in range(r):
                if H[r][s] != H[s][r]:
                    raise InputFileError(
                        "Q[%d].H[%d][%d]: matrix is not symmetric"
                        % (j, r, s))
        if not isinstance(braw, list) or len(braw) != n:
            raise InputFileError("Q[%d].b: expected %d entries" % (j, n))
        b = tuple(_rat(x, "Q[%d].b[%d]" % (j, i))
                  for i, x in enumerate(braw))
        comps.append((H, b, _rat(craw, "Q[%d].c" % j)))
    level = _rat(doc.get("level", "0"), "level")
    dist = doc.get("dist", 0)
    if not isinstance(dist, int) or isinstance(dist, bool) \
            or not 0 <= dist < n:
        raise InputFileError("dist: expected a coordinate index below %d"
                             % n)
    try:
        prob = Problem(p, QuadMap(n, tw, tuple(comps)), level, dist)
    except ValueError as err:
        raise InputFileError(str(err)) from None
    return prob, _config_from(doc.get("flags", {}))


def parse_result(path):
    """Raw document and reconstructed points from a result file."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise InputFileError("top level must be an object")
    status = doc.get("status")
    if status not in ("EMPTY", "NONEMPTY"):
        raise InputFileError("status: expected EMPTY or NONEMPTY")
    raw = doc.get("points")
    if not isinstance(raw, list):
        raise InputFileError("points: expected a list")
    if (status == "EMPTY") != (not raw):
        raise InputFileError("status does not match the point count")
    reps = []
    for i, pd in enumerate(raw):
        where = "points[%d]" % i
        if not isinstance(pd, dict):
            raise InputFileError(where + ": expected an object")
        f = _coeffs(pd.get("f"), where + ".f")
        g0 = _coeffs(pd.get("g0"), where + ".g0")
        if not isinstance(pd.get("g"), list) or not pd["g"]:
            raise InputFileError(where + ".g: expected a nonempty list")
        gs = [_coeffs(g, where + ".g[%d]" % s)
              for s, g in enumerate(pd["g"])]
        enc = pd.get("thom")
        if (not isinstance(enc, list)
                or any(isinstance(s, bool) or s not in (-1, 0, 1)
                       for s in enc)):
            raise InputFileError(where + ".thom: entries must be -1, 0, "
                                 "or 1")
        reps.append(RealURep(f=f, g0=g0, gs=gs, thom=tuple(enc),
                             interval=None))
    if len({len(r.gs) for r in reps}) > 1:
        raise InputFileError("points disagree on the coordinate count")
    return doc, reps


# -- serialization ------------------------------------------------------

def _ulist(a):
    return [str(x) for x in u_to_rat(a)]


def _sort_key(rep):
    return tuple(u_to_rat(rep.f)), tuple(rep.thom)


def _report_doc(report):
    pts = sorted(report.points, key=_sort_key)
    doc = {
        "status": report.status,
        "points": [{"f": _ulist(r.f), "g0": _ulist(r.g0),
                    "g": [_ulist(g) for g in r.gs],
                    "thom": [int(s) for s in r.thom]} for r in pts],
        "pieces_processed": report.pieces_processed,
        "candidates_pruned": report.candidates_pruned,
    }
    cert = report.certificate
    if cert is not None:
        doc["certificate"] = {
            "value": str(cert.value),
            "bounds": [None if b is None else str(b)
                       for b in cert.bounds],
            "test_polys": [[str(c) for c in h] for h in cert.test_polys],
            "conservative": bool(cert.conservative),
        }
    return doc


def _write_doc(doc, out):
    text = json.dumps(doc, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _approximate(reps, bits):
    """Per point, one rational per coordinate within 2^-bits of it."""
    width = mpq(1, 1 << bits)
    out = []
    for i, rep in enumerate(reps):
        f = u_trim(u_to_rat(rep.f))
        if len(f) < 2:
            raise InputFileError("points[%d].f: degree must be positive"
                                 % i)
        fs = squarefree(f)
        cur = rep.interval
        if cur is None:
            cur = _interval_from_thom(f, rep.thom)
        if cur is None:
            raise InputFileError("points[%d]: no real root carries the "
                                 "recorded sign sequence" % i)
        den = u_trim(u_to_rat(rep.g0))
        if not den:
            raise InputFileError("points[%d].g0: zero denominator" % i)
        coords = []
        for g in rep.gs:
            num = u_trim(u_to_rat(g))
            if not num:
                coords.append("0")
                continue
            got = _value_box(fs, cur, num, den, width)
            if got is None:
                raise InputFileError("points[%d]: the enclosure failed "
                                     "to shrink; is g0 zero at the root?"
                                     % i)
            lo, hi, cur = got
            coords.append(str(_simplest_in(lo, hi)))
        out.append(coords)
    return out


def _mpoly_doc(poly):
    return [[str(c.as_rat()), list(e)]
            for e, c in sorted(poly.terms.items())]


# -- subcommands --------------------------------------------------------

def _apply_overrides(cfg, args):
    kw = {}
    if getattr(args, "mode", None) is not None:
        kw["mode"] = args.mode
    for name in ("jobs", "seed", "n_cap"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "assume_bounded", False):
        kw["assume_bounded"] = True
    if getattr(args, "assume_nonneg", False):
        kw["assume_nonneg"] = True
    for name in ("rational_eps1", "rational_eps2"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = _rat(val, "--" + name.replace("_", "-"))
    if not kw:
        return cfg
    try:
        return replace(cfg, **kw)
    except ValueError as err:
        raise InputFileError(str(err)) from None


def _cmd_sample(args):
    prob, cfg = parse_problem(args.problem)
    cfg = _apply_overrides(cfg, args)
    report = sample(prob, cfg)
    doc = _report_doc(report)
    if args.approx or args.bits is not None:
        reps = sorted(report.points, key=_sort_key)
        doc["approximations"] = _approximate(
            reps, args.bits if args.bits is not None else 30)
    _write_doc(doc, args.out)
    return EXIT_OK if report.status == "NONEMPTY" else EXIT_EMPTY


def _cmd_decide(args):
    prob, cfg = parse_problem(args.problem)
    cfg = _apply_overrides(cfg, args)
    report = decide(prob, cfg)
    if args.out:
        _write_doc(_report_doc(report), args.out)
    print(report.status)
    return EXIT_OK if report.status == "NONEMPTY" else EXIT_EMPTY


def _cmd_approx(args):
    doc, reps = parse_result(args.result)
    doc["approximations"] = _approximate(reps, args.bits)
    _write_doc(doc, args.out)
    return EXIT_OK


def _cmd_verify(args):
    doc, reps = parse_result(args.result)
    prob, _ = parse_problem(args.problem)
    bad = []
    for i, rep in enumerate(reps):
        if len(rep.gs) != prob.Q.n or not verify_membership(rep, prob):
            bad.append(i)
    if bad:
        print("verification FAILED for point(s) %s"
              % ", ".join(map(str, bad)), file=sys.stderr)
        return EXIT_INTERNAL
    print("verified %d point(s), status %s"
          % (len(reps), doc["status"]))
    return EXIT_OK


def _cmd_pieces(args):
    prob, _ = parse_problem(args.problem)
    charts = enum_pieces(prob, 0)
    doc = {"count": len(charts), "pieces": []}
    for ch in charts:
        doc["pieces"].append({
            "rows": list(ch.pair.rows),
            "cols": list(ch.pair.cols),
            "nvars": ch.nvars,
            "omega": _mpoly_doc(ch.omega),
            "theta": [_mpoly_doc(t) for t in ch.theta],
            "equations": [_mpoly_doc(e) for e in ch.equations],
            "inequation": _mpoly_doc(ch.inequation),
        })
    _write_doc(doc, args.out)
    return EXIT_OK


def _bits_arg(value):
    try:
        bits = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("bits must be an integer")
    if not 1 <= bits <= 4096:
        raise argparse.ArgumentTypeError("bits must be between 1 and 4096")
    return bits


def _run_flags(sub):
    sub.add_argument("--mode", choices=("hybrid", "symbolic"))
    sub.add_argument("--jobs", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--assume-bounded", action="store_true")
    sub.add_argument("--assume-nonneg", action="store_true")
    sub.add_argument("--rational-eps1", metavar="A/B")
    sub.add_argument("--rational-eps2", metavar="A/B")
    sub.add_argument("--n-cap", type=int)


def build_parser():
    parser = _Parser(prog="quadsample",
                     description="Exact sampling of real solution sets "
                                 "of p composed with a quadratic map.")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample", help="compute one point per connected "
                                       "component")
    ps.add_argument("problem")
    _run_flags(ps)
    ps.add_argument("--approx", action="store_true",
                    help="embed rational approximations (default 30 bits)")
    ps.add_argument("--bits", type=_bits_arg)
    ps.add_argument("--out")
    ps.set_defaults(func=_cmd_sample)

    pd = sub.add_parser("decide", help="emptiness decision with witness")
    pd.add_argument("problem")
    _run_flags(pd)
    pd.add_argument("--out")
    pd.set_defaults(func=_cmd_decide)

    pa = sub.add_parser("approx", help="add approximations to a result "
                                       "file")
    pa.add_argument("result")
    pa.add_argument("--bits", type=_bits_arg, default=30)
    pa.add_argument("--out")
    pa.set_defaults(func=_cmd_approx)

    pv = sub.add_parser("verify", help="re-check a result file against "
                                       "its problem")
    pv.add_argument("result")
    pv.add_argument("problem")
    pv.set_defaults(func=_cmd_verify)

    pp = sub.add_parser("pieces", help="debug dump of the chart "
                                       "decomposition")
    pp.add_argument("problem")
    pp.add_argument("--out")
    pp.set_defaults(func=_cmd_pieces)
    return parser


def run(argv=None):
    """Dispatch a command line; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except InputFileError as err:
        print("input error: %s" % err, file=sys.stderr)
        return EXIT_INPUT
    except OSError as err:
        print("input error: %s" % err, file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as err:
        print("resource limit: %s" % err, file=sys.stderr)
        return EXIT_RESOURCE
    except PipelineError as err:
        print("internal error: %s" % err, file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as err:
        print("internal error: %r" % err, file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())
