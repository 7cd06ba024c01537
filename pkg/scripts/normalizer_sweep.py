"""Normalize every window input on the lattice twisted module and report step statistics."""
import argparse
import json
import time
from collections import Counter

from twistvoa import Scalar
from twistvoa.examples import build
from twistvoa.rewrite import ModeAlgebra, ModeExpression, check_conditions, minimal_L, spanning_normalize


def window_inputs(alg, D, max_len, L):
    facs = [(b, alg.alpha(b) - n) for b in alg.B for n in range(L - 1, 6)]
    out = []

    def grow(rev, deg):
        if rev:
            out.append(tuple(reversed(rev)))
        if len(rev) == max_len:
            return
        for f in facs:
            nd = deg + alg.step(f)
            if alg.W.min_degree <= nd <= D:
                grow(rev + [f], nd)

    grow([], alg.generator_degree())
    return out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cutoff", type=int, default=8)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--length", type=int, default=4)
    p.add_argument("--N", type=int, default=2)
    args = p.parse_args()
    t = time.perf_counter()
    alg = ModeAlgebra(build("lattice_sqrt2", args.cutoff).W)
    L, M = minimal_L(alg), alg.c2.M
    words = window_inputs(alg, args.window, args.length, L)
    steps, rules, sizes, failures = [], Counter(), [], 0
    for w in words:
        e = ModeExpression({w: Scalar(1)}, alg.W.generator)
        cert = spanning_normalize(alg, e, L, M, args.N)
        ok = cert.expression.evaluate(alg) == e.evaluate(alg) and all(
            all(check_conditions(alg, m, L, M, args.N).values()) for m in cert.monomials())
        failures += not ok
        steps.append(cert.steps)
        sizes.append(len(cert.expression))
        rules.update(s["rule"] for s in cert.trace)
    print(json.dumps({"cutoff": args.cutoff, "window": args.window, "max_length": args.length,
                      "L": L, "M": M, "N": args.N, "inputs": len(words), "failures": failures,
                      "max_steps": max(steps), "total_steps": sum(steps), "max_output_terms": max(sizes),
                      "rules": dict(rules), "seconds": round(time.perf_counter() - t, 1)},
                     indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
