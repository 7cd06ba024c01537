"""Command-line front end: verify, reduce, cofiniteness, example.

Instances are JSON files written by ``example --emit`` or built-in names
written as NAME@CUTOFF (e.g. lattice_sqrt2@6).  The machine report goes
to stdout as sorted JSON; a short human summary goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import examples
from .errors import TwistVOAError
from .exactalg import GradedOperator
from .report import CheckReport
from .rewrite import ModeAlgebra, ModeExpression, check_cn_nesting, check_conditions, cn_subspace, \
    exceptional_set_size, minimal_L, spanning_normalize
from .twisted import TwistedModuleData, check_axioms, check_derived
from .voa import VOAData, check_automorphism, check_voa_axioms, decompose_automorphism


# ---------------------------------------------------------------------------
# instance loading


def _load(ref: str, want_module: bool):
    """(V, aut, W or None, header) from a JSON file or NAME@CUTOFF."""
    path = Path(ref)
    if path.is_file():
        data = json.loads(path.read_text())
        V = VOAData.from_json(data["voa"])
        a = data["automorphism"]
        aut = decompose_automorphism(V, GradedOperator.from_json(a["g"]), a["T"])
        W = TwistedModuleData.from_json(data["module"], V, aut) if data.get("module") else None
        header = data.get("example", {"source": path.name})
    else:
        name, _, cut = ref.partition("@")
        if name not in examples.BUILDERS:
            raise SystemExit(f"error: {ref!r} is neither a file nor NAME@CUTOFF with NAME in "
                             f"{sorted(examples.BUILDERS)}")
        ex = examples.build(name, int(cut or 0))
        V, aut, W, header = ex.V, ex.aut, ex.W, ex.header()
    if want_module and W is None:
        raise SystemExit(f"error: {ref!r} carries no module")
    return V, aut, W, header


def _context(V, aut, W=None, window=None, L=None, M=None, N=None) -> dict:
    return {
        "cutoff": str(W.cutoff) if W is not None else V.cutoff,
        "voa_cutoff": V.cutoff,
        "window": None if window is None else str(window),
        "L": L, "M": M, "N": N, "T": aut.T,
    }


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args) -> int:
    V, aut, W, header = _load(args.voa, False)
    if args.module:
        _, _, W, _ = _load(args.module, True)
    window = args.window
    reports: list[CheckReport] = [check_voa_axioms(V, min(window, V.cutoff)),
                                  check_automorphism(V, aut, min(window, V.cutoff))]
    if W is not None:
        reports += check_axioms(W, window)
        reports += check_derived(W, window)
    for r in reports:
        _say(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.checked} checks)")
    ok = all(r.passed for r in reports)
    _emit({"command": "verify", "instance": header, "context": _context(V, aut, W, window),
           "passed": ok, "checks": [r.to_json() for r in reports]}, args.out)
    return 0 if ok else 1


def _read_expr(text: str):
    path = Path(text)
    return json.loads(path.read_text() if path.is_file() else text)


def cmd_reduce(args) -> int:
    V, aut, W, header = _load(args.module, True)
    alg = ModeAlgebra(W)
    data = _read_expr(args.expr)
    gen = None
    if isinstance(data, dict):
        gen = data.get("generator")
        data = data["terms"]
    L = minimal_L(alg, gen) if args.L is None else args.L
    M = alg.c2.M if args.M is None else args.M
    N = L if args.N is None else args.N
    expr = ModeExpression.from_json(data, alg, gen)
    cert = spanning_normalize(alg, expr, L, M, N, budget=args.budget)
    equal = expr.evaluate(alg) == cert.expression.evaluate(alg)
    conds = [check_conditions(alg, w, L, M, N) for w in cert.monomials()]
    conds_ok = all(all(c.values()) for c in conds)
    again = spanning_normalize(alg, cert.expression, L, M, N, budget=args.budget)
    idem = again.expression == cert.expression and again.steps == 0
    ok = equal and conds_ok and idem
    _say(f"{len(cert.expression)} normal-form monomials after {cert.steps} steps; "
         f"oracle {'equal' if equal else 'DIFFERENT'}; conditions {'hold' if conds_ok else 'FAIL'}")
    report = {"command": "reduce", "instance": header,
              "context": _context(V, aut, W, None, L, M, N),
              "passed": ok, "oracle_equal": equal, "conditions_hold": conds_ok, "idempotent": idem,
              "B": [alg.label(b) for b in alg.B], "certificate": cert.to_json(alg)}
    if not args.trace:
        report["certificate"].pop("trace")
    _emit(report, args.out)
    return 0 if ok else 1


def cmd_cofiniteness(args) -> int:
    V, aut, W, header = _load(args.module, True)
    window = Fraction(args.window)
    rep = cn_subspace(W, args.n, window, full_checks=not args.fast)
    windows = [Fraction(w) for w in args.windows.split(",")] if args.windows else \
        [Fraction(w) for w in range(1, int(window) + 1)]
    per_window = {str(w): sum(q for d, q in rep.quotient_dims.items() if d <= w) for w in windows}
    totals = [per_window[str(w)] for w in windows]
    prev = windows[-2] if len(windows) > 1 else None
    stable = prev is not None and totals[-1] == totals[-2] and \
        all(q == 0 for d, q in rep.quotient_dims.items() if prev < d <= window)
    nested = None
    if args.nesting and args.n >= 2:
        nested = check_cn_nesting(W, args.n, window)
    ok = stable and rep.residue_form_agrees and rep.log_inclusive_agrees and nested is not False
    _say(f"dim W/C_{args.n}(W) per window: {per_window}; "
         f"{'stabilized' if stable else 'NOT stabilized'}")
    out = {"command": "cofiniteness", "instance": header, "context": _context(V, aut, W, window),
           "passed": ok, "n": args.n, "per_window": per_window, "stabilized": stable,
           "nesting": nested, "report": rep.to_json()}
    if args.spanning:
        alg = ModeAlgebra(W)
        L = minimal_L(alg)
        out["exceptional_set_size"] = exceptional_set_size(alg, L, alg.c2.M, args.n - 1, args.n)
        out["context"].update({"L": L, "M": alg.c2.M, "N": args.n - 1})
    _emit(out, args.out)
    return 0 if ok else 1


def cmd_example(args) -> int:
    ex = examples.build(args.name, args.cutoff)
    reports = [check_voa_axioms(ex.V, min(args.window, ex.V.cutoff)),
               check_automorphism(ex.V, ex.aut, min(args.window, ex.V.cutoff))]
    if ex.W is not None:
        reports += check_axioms(ex.W, args.window) + check_derived(ex.W, args.window)
    ok = all(r.passed for r in reports)
    for r in reports:
        _say(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.checked} checks)")
    written = []
    if ok and args.emit:
        outdir = Path(args.emit)
        outdir.mkdir(parents=True, exist_ok=True)
        base = {"example": ex.header(), "voa": ex.V.to_json(), "automorphism": ex.aut.to_json()}
        p = outdir / f"{args.name}.voa.json"
        p.write_text(json.dumps(base, sort_keys=True) + "\n")
        written.append(p.name)
        if ex.W is not None:
            p = outdir / f"{args.name}.module.json"
            p.write_text(json.dumps({**base, "module": ex.W.to_json()}, sort_keys=True) + "\n")
            written.append(p.name)
    _emit({"command": "example", "instance": ex.header(),
           "context": _context(ex.V, ex.aut, ex.W, args.window), "passed": ok,
           "checks": [r.to_json() for r in reports], "written": written}, args.out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twistvoa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run every applicable axiom and identity check")
    v.add_argument("--voa", required=True)
    v.add_argument("--module")
    v.add_argument("--window", type=int, required=True)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("reduce", help="normalize a mode expression into the spanning set")
    r.add_argument("--module", required=True)
    r.add_argument("--expr", required=True, help="JSON text or a JSON file")
    r.add_argument("--L", type=int)
    r.add_argument("--M", type=int)
    r.add_argument("--N", type=int)
    r.add_argument("--budget", type=int, default=200_000)
    r.add_argument("--trace", action="store_true", help="include the rewriting trace")
    r.set_defaults(func=cmd_reduce)

    c = sub.add_parser("cofiniteness", help="dimensions of W/C_n(W) per window")
    c.add_argument("--module", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--window", required=True)
    c.add_argument("--windows", help="comma-separated windows to report (default 1..window)")
    c.add_argument("--nesting", action="store_true", help="also verify C_n inside C_{n-1}")
    c.add_argument("--spanning", action="store_true", help="report the exceptional set size")
    c.add_argument("--fast", action="store_true", help="skip the residue and log-inclusive cross-checks")
    c.set_defaults(func=cmd_cofiniteness)

    e = sub.add_parser("example", help="build, verify and emit an instance")
    e.add_argument("name", choices=sorted(examples.BUILDERS))
    e.add_argument("--cutoff", type=int, required=True)
    e.add_argument("--window", type=int, default=2, help="verification window before emitting")
    e.add_argument("--emit")
    e.set_defaults(func=cmd_example)

    for s in (v, r, c, e):
        s.add_argument("--out", help="also write the JSON report to this file")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TwistVOAError as exc:
        _emit({"command": args.command, "passed": False,
               "error": {"type": type(exc).__name__, "message": str(exc)}}, getattr(args, "out", None))
        return 2


if __name__ == "__main__":
    sys.exit(main())
