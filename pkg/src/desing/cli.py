"""Command line front end: problem files in, trace documents out.

Subcommands:

    desing resolve PROBLEM [--budget N] [--jobs N] [--out FILE] [--verify]
    desing bounds {suite,bl-iter,gamma,char-p} ARGS [--constants K=V ...]
    desing verify TRACE

A problem file is line oriented; "#" starts a comment, blank lines are
ignored.  The header is two or three plain lines followed by bracketed
sections, each holding one item per line:

    ambient 2
    mark 1
    variables x y            (optional; defaults to x1..xn)
    [parameters]             subvariety-defining polynomials
    [generators]             ideal generators
    [exceptional]            "COORD LABEL" pairs, 1-based coordinate
    [complement]             localizing polynomials
    [witness]                one line of ambient-many rationals

Trace documents are JSON printed with sorted keys, compact separators and
a trailing newline.  Counters that can outgrow doubles are decimal
strings.  Exit codes: 0 success, 1 verification failure, 2 input error,
3 budget exhausted, 4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .blowup import DataBoundsBreach, data_vectors_check
from .bounds import (BoundConstants, BoundVector, M_bound, bl_iter,
                     bound_suite, char_p_check, char_p_threshold, gamma)
from .driver import (BudgetExceeded, InternalBreach, ResolveConfig,
                     SingularWitness, desingularize, resolve_collection)
from .ideals import NotSmooth
from .model import (Chart, DataVector, MarkedIdealCollection, ValidationError,
                    chart_support_empty, validate)
from .poly import Polynomial, format_poly, parse_poly


class ProblemSyntaxError(ValueError):
    def __init__(self, line, msg):
        super().__init__("line %d: %s" % (line, msg))
        self.line = line


# ---------------------------------------------------------------------------
# problem files

@dataclass
class ProblemFile:
    ambient: int
    mark: int
    names: tuple
    parameters: tuple = ()
    generators: tuple = ()
    exceptional: tuple = ()      # (coord, label) pairs, 0-based coord
    complement: tuple = ()
    witness: tuple = None


_SECTIONS = ("parameters", "generators", "exceptional", "complement",
             "witness")


def parse_problem(text):
    ambient = None
    mark = None
    names = None
    sections = {s: [] for s in _SECTIONS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in sections:
                raise ProblemSyntaxError(lineno, "unknown section %r"
                                         % current)
            continue
        if current is None:
            parts = line.split()
            key = parts[0]
            if key == "ambient":
                ambient = _parse_int(parts, lineno)
            elif key == "mark":
                mark = _parse_int(parts, lineno)
            elif key == "variables":
                names = tuple(parts[1:])
            else:
                raise ProblemSyntaxError(lineno, "unknown header %r" % key)
            continue
        sections[current].append((lineno, line))
    if ambient is None:
        raise ProblemSyntaxError(1, "missing 'ambient' header")
    if mark is None or mark < 1:
        raise ProblemSyntaxError(1, "missing or nonpositive 'mark' header")
    if names is None:
        names = tuple("x%d" % (i + 1) for i in range(ambient))
    if len(names) != ambient:
        raise ProblemSyntaxError(1, "expected %d variable names, got %d"
                                 % (ambient, len(names)))

    def polys(section):
        out = []
        for lineno, line in sections[section]:
            out.append(_parse_named(line, names, ambient, lineno))
        return tuple(out)

    exc = []
    for lineno, line in sections["exceptional"]:
        parts = line.split()
        if len(parts) != 2:
            raise ProblemSyntaxError(lineno, "expected 'COORD LABEL'")
        try:
            coord, label = int(parts[0]), int(parts[1])
        except ValueError:
            raise ProblemSyntaxError(lineno, "expected two integers")
        if not 1 <= coord <= ambient:
            raise ProblemSyntaxError(lineno, "coordinate out of range")
        exc.append((coord - 1, label))

    witness = None
    wlines = sections["witness"]
    if len(wlines) > 1:
        raise ProblemSyntaxError(wlines[1][0], "witness must be one line")
    if wlines:
        lineno, line = wlines[0]
        parts = line.split()
        if len(parts) != ambient:
            raise ProblemSyntaxError(lineno, "witness needs %d coordinates"
                                     % ambient)
        try:
            witness = tuple(Fraction(p) for p in parts)
        except (ValueError, ZeroDivisionError):
            raise ProblemSyntaxError(lineno, "bad rational in witness")

    return ProblemFile(ambient=ambient, mark=mark, names=names,
                       parameters=polys("parameters"),
                       generators=polys("generators"),
                       exceptional=tuple(exc),
                       complement=polys("complement"),
                       witness=witness)


def _parse_int(parts, lineno):
    if len(parts) != 2:
        raise ProblemSyntaxError(lineno, "expected one integer argument")
    try:
        return int(parts[1])
    except ValueError:
        raise ProblemSyntaxError(lineno, "expected an integer, got %r"
                                 % parts[1])


def _parse_named(line, names, ambient, lineno):
    # rewrite declared names to the canonical x1..xn before parsing
    src = line
    for i, nm in sorted(enumerate(names), key=lambda t: -len(t[1])):
        src = src.replace(nm, "x%d" % (i + 1))
    try:
        return parse_poly(src, ambient)
    except ValueError as e:
        raise ProblemSyntaxError(lineno, "bad polynomial %r: %s" % (line, e))


def print_problem(pf):
    lines = ["ambient %d" % pf.ambient, "mark %d" % pf.mark,
             "variables " + " ".join(pf.names)]
    names = list(pf.names)
    for sec, items in (("parameters", pf.parameters),
                       ("generators", pf.generators)):
        lines.append("[%s]" % sec)
        for p in items:
            lines.append(format_poly(p, names))
    lines.append("[exceptional]")
    for coord, label in pf.exceptional:
        lines.append("%d %d" % (coord + 1, label))
    lines.append("[complement]")
    for p in pf.complement:
        lines.append(format_poly(p, names))
    if pf.witness is not None:
        lines.append("[witness]")
        lines.append(" ".join(str(v) for v in pf.witness))
    return "\n".join(lines) + "\n"


def build_collection(pf):
    gens = pf.generators
    params = pf.parameters
    if params:
        gb_src = list(params)
        from .ideals import groebner_basis, normal_form
        gb = groebner_basis(gb_src, pf.ambient)
        gens = tuple(normal_form(g, gb) for g in gens)
    chart = Chart(chart_id=(), nvars=pf.ambient, params=params,
                  gens=gens, complement=pf.complement,
                  exceptional=pf.exceptional)
    next_label = max((lab for _, lab in pf.exceptional), default=-1) + 1
    coll = MarkedIdealCollection(charts=(chart,), mark=pf.mark,
                                 next_divisor_label=next_label)
    validate(coll)
    return coll


# ---------------------------------------------------------------------------
# trace documents

_EDGE_OF = {"companion": "2a", "restrict-divisors": "1a",
            "restrict-hypersurface": "1b"}


def _new_node(label, edge, gamma_before):
    return {"label": label, "edge": edge, "gamma_before": gamma_before,
            "gamma_after": None, "blowups": [], "notes": [],
            "children": [], "bound_check": {"checked": 0, "ok": True}}


def build_trace_tree(result):
    """Fold the driver's flat event list into the resolution tree."""
    drv = result.driver
    running = drv.levels[0].data_vector().as_json()
    root = _new_node("2", "root", running)
    stack = [root]
    max_depth = 0
    for ev in drv.events:
        op = ev.get("op")
        if op in _EDGE_OF:
            if stack[-1]["label"] == "M":
                _close(stack.pop(), running)
            meta = {k: v for k, v in ev.items() if k != "op"}
            node = _new_node("1", _EDGE_OF[op], running)
            if meta:
                node["notes"].append({"op": op, **meta})
            stack[-1]["children"].append(node)
            stack.append(node)
            max_depth = max(max_depth, len(stack) - 1)
        elif op == "ascend":
            if stack[-1]["label"] == "M":
                _close(stack.pop(), running)
            if len(stack) > 1:
                _close(stack.pop(), running)
        elif op == "monomial":
            if stack[-1]["label"] != "M":
                node = _new_node("M", "2b", running)
                stack[-1]["children"].append(node)
                stack.append(node)
                max_depth = max(max_depth, len(stack) - 1)
            stack[-1]["notes"].append(
                {k: v for k, v in ev.items() if k != "op"})
        elif op == "blowup":
            if stack[-1]["label"] == "M" and ev.get("note") != "monomial":
                _close(stack.pop(), running)
            running = ev["data_after"]
            stack[-1]["blowups"].append({
                "note": ev["note"],
                "divisor_label": ev["label"],
                "center": ev["center"],
                "data_before": ev["data_before"],
                "data_after": ev["data_after"],
            })
            stack[-1]["bound_check"]["checked"] += 1
        else:
            stack[-1]["notes"].append(
                {k: v for k, v in ev.items() if k != "op"})
    while stack:
        _close(stack.pop(), running)
    m = max(c.dim() for c in _root_charts(drv))
    if max_depth > 2 * m:
        raise InternalBreach("trace depth %d exceeds twice the dimension %d"
                             % (max_depth, m))
    return root


def _root_charts(drv):
    charts = drv.levels[0].charts
    return charts if charts else ()


def _close(node, running):
    node["gamma_after"] = running


def chart_json(chart):
    return {
        "id": "/".join(map(str, chart.chart_id)),
        "nvars": chart.nvars,
        "params": [format_poly(p) for p in chart.params],
        "gens": [format_poly(g) for g in chart.gens],
        "complement": [format_poly(p) for p in chart.complement],
        "exceptional": [[c, lab] for c, lab in chart.exceptional],
        "transform_exponents": [[lab, e]
                                for lab, e in chart.transform_exponents],
        "empty": chart.empty,
    }


def trace_document(pf, result):
    drv = result.driver
    final = result.final
    tree = build_trace_tree(result)
    live = final.live_charts()
    supp = {"/".join(map(str, c.chart_id)):
            chart_support_empty(c, final.mark) for c in live}
    records = [r for _, _, r in drv.records]
    degrees = [int(v) for r in records
               for v in (r.before.d, r.after.d)]
    dims = [int(v) for r in records for v in (r.before.n, r.after.n)]
    bits = [int(v) for r in records for v in (r.before.b, r.after.b)]
    base = drv.levels[0].data_vector()
    doc = {
        "format": "desing-trace-1",
        "problem": print_problem(pf),
        "mark": pf.mark,
        "outcome": result.outcome,
        "nodes": tree,
        "final_charts": [chart_json(c) for c in live],
        "support_empty": supp,
        "summary": {
            "total_blowups": str(drv.budget_used),
            "max_degree_seen": str(max(degrees, default=int(base.d))),
            "max_ambient_dim": str(max(dims, default=int(base.n))),
            "chart_count": str(len(final.charts)),
            "max_coeff_bits": str(max(bits, default=int(base.b))),
        },
    }
    if result.models:
        doc["models"] = [m.as_json() for m in result.models]
    return doc


def dump_document(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


# ---------------------------------------------------------------------------
# verification

class TraceMismatch(ValueError):
    pass


def verify_document(doc):
    """Replay every bound check and every terminal-support claim."""
    if doc.get("format") != "desing-trace-1":
        raise TraceMismatch("unrecognized trace format")
    mark = int(doc["mark"])
    checked = [0]

    def walk(node, path):
        for i, rec in enumerate(node.get("blowups", ())):
            before = DataVector.from_json(rec["data_before"])
            after = DataVector.from_json(rec["data_after"])
            try:
                data_vectors_check(before, after, mark=mark)
            except DataBoundsBreach as e:
                raise TraceMismatch("node %s blow-up %d: %s"
                                    % (path or "root", i, e))
            checked[0] += 1
        for j, child in enumerate(node.get("children", ())):
            walk(child, "%s/%d" % (path, j) if path else str(j))

    walk(doc["nodes"], "")
    claims = doc.get("support_empty", {})
    for cj in doc.get("final_charts", ()):
        chart = _chart_from_json(cj)
        actual = chart_support_empty(chart, mark)
        claimed = claims.get(cj["id"])
        if claimed is None:
            raise TraceMismatch("chart %s has no support claim" % cj["id"])
        if bool(actual) != bool(claimed):
            raise TraceMismatch("chart %s: support emptiness replay got %s, "
                                "trace claims %s"
                                % (cj["id"], actual, claimed))
    return checked[0]


def _chart_from_json(cj):
    nv = int(cj["nvars"])
    return Chart(
        chart_id=tuple(int(p) for p in cj["id"].split("/") if p != ""),
        nvars=nv,
        params=tuple(parse_poly(s, nv) for s in cj["params"]),
        gens=tuple(parse_poly(s, nv) for s in cj["gens"]),
        complement=tuple(parse_poly(s, nv) for s in cj["complement"]),
        exceptional=tuple((int(c), int(l)) for c, l in cj["exceptional"]),
        empty=bool(cj["empty"]),
        transform_exponents=tuple((int(a), int(b))
                                  for a, b in cj["transform_exponents"]),
    )


# ---------------------------------------------------------------------------
# commands

def cmd_resolve(args):
    try:
        text = open(args.problem).read()
    except OSError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    try:
        pf = parse_problem(text)
        if pf.witness is not None and (pf.parameters or pf.exceptional
                                       or pf.complement):
            raise ProblemSyntaxError(
                1, "witness problems must be plain affine inputs")
        coll = None if pf.witness is not None else build_collection(pf)
    except (ProblemSyntaxError, ValidationError, NotSmooth,
            ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    config = ResolveConfig(budget=args.budget, jobs=args.jobs)
    try:
        if pf.witness is not None:
            result = desingularize(pf.ambient, pf.generators, pf.witness,
                                   config)
        else:
            result = resolve_collection(coll, config)
        doc = trace_document(pf, result)
    except SingularWitness as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except BudgetExceeded:
        # unreachable: resolve_collection converts exhaustion to an outcome
        return 3
    except (InternalBreach, DataBoundsBreach, ValidationError, NotSmooth,
            RuntimeError) as e:
        print("internal: %s" % e, file=sys.stderr)
        return 4
    payload = dump_document(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    if result.outcome == "budget":
        print("budget exhausted after %d blow-ups"
              % result.driver.budget_used, file=sys.stderr)
        return 3
    if args.verify:
        try:
            verify_document(json.loads(payload))
        except TraceMismatch as e:
            print("verification failed: %s" % e, file=sys.stderr)
            return 1
    return 0


def cmd_verify(args):
    try:
        doc = json.load(open(args.trace))
    except (OSError, json.JSONDecodeError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    try:
        n = verify_document(doc)
    except TraceMismatch as e:
        print("verification failed: %s" % e, file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError) as e:
        print("error: malformed trace: %s" % e, file=sys.stderr)
        return 2
    print("verified %d blow-up records and %d terminal charts"
          % (n, len(doc.get("final_charts", ()))))
    return 0


def _constants(pairs):
    kw = {}
    fields = BoundConstants.__dataclass_fields__
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError("expected KEY=VALUE, got %r" % pair)
        key, val = pair.split("=", 1)
        if key not in fields:
            raise ValueError("unknown constant %r" % key)
        kw[key] = int(val)
    return BoundConstants(**kw)


def _mag_text(m):
    if m.is_exact():
        s = str(m.lo)
        if len(s) <= 60:
            return s
        return "%s..%s (%d digits)" % (s[:20], s[-6:], len(s))
    hi = "inf" if m.hi is None else str(m.hi)
    return "T(%d, %s..%s)" % (m.height, m.lo, hi)


def _print_vector(bv):
    for k in ("r", "m", "d", "n", "l", "q", "mu"):
        print("%-3s %s" % (k, _mag_text(getattr(bv, k))))


def _split_bounds_args(rest):
    """argparse cannot interleave flags with a variadic positional, so the
    bounds subcommand takes the raw remainder and sorts it out here."""
    flags = {"t": 1, "m": 0, "p": None, "constants": []}
    vals = []
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok in ("--t", "--m", "--p"):
            if i + 1 >= len(rest):
                raise ValueError("%s needs a value" % tok)
            flags[tok[2:]] = int(rest[i + 1])
            i += 2
        elif tok == "--constants":
            if i + 1 >= len(rest):
                raise ValueError("--constants needs KEY=VALUE")
            flags["constants"].append(rest[i + 1])
            i += 2
        elif tok.startswith("--"):
            raise ValueError("unknown flag %r" % tok)
        else:
            vals.append(tok)
            i += 1
    return flags, vals


def cmd_bounds(args):
    try:
        flags, vals = _split_bounds_args(args.rest)
        c = _constants(flags["constants"])
    except ValueError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    sub = args.subcommand
    try:
        if sub == "suite":
            d, n, mu, l = (int(v) for v in vals)
            for name, m in sorted(bound_suite(d, n, mu, l, c).items()):
                print("%-3s %s" % (name, _mag_text(m)))
        elif sub == "bl-iter":
            r, m, d, n, l, q, mu = (int(v) for v in vals)
            bv = BoundVector.of(r, m, d, n, l, q, mu, c)
            _print_vector(bl_iter(bv, flags["t"], c))
        elif sub == "gamma":
            r, m, d, n, l, q, mu = (int(v) for v in vals)
            bv = BoundVector.of(r, m, d, n, l, q, mu, c)
            _print_vector(gamma(flags["m"], bv, c))
        elif sub == "char-p":
            d, n, l, mu = (int(v) for v in vals)
            if flags["p"] is None:
                raise ValueError("char-p needs --p")
            ok = char_p_check(flags["p"], d, n, l, c)
            if ok:
                print("GUARANTEED (threshold certified below %d)"
                      % flags["p"])
            else:
                low = M_bound(d, n, c)
                print("NOT GUARANTEED (threshold >= %s)" % _mag_text(low))
                return 0
        else:
            print("error: unknown bounds subcommand %r" % sub,
                  file=sys.stderr)
            return 2
    except (TypeError, ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="desing")
    sub = ap.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("resolve", help="resolve a problem file")
    rp.add_argument("problem")
    rp.add_argument("--budget", type=int, default=10000)
    rp.add_argument("--jobs", type=int, default=1)
    rp.add_argument("--out")
    rp.add_argument("--verify", action="store_true")
    rp.set_defaults(fn=cmd_resolve)

    vp = sub.add_parser("verify", help="replay the checks in a trace")
    vp.add_argument("trace")
    vp.set_defaults(fn=cmd_verify)

    bp = sub.add_parser("bounds", help="evaluate the bound calculus")
    bp.add_argument("subcommand",
                    choices=["suite", "bl-iter", "gamma", "char-p"])
    bp.add_argument("rest", nargs=argparse.REMAINDER)
    bp.set_defaults(fn=cmd_bounds)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
