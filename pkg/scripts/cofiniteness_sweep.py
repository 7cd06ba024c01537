"""dim W/C_n(W) for the lattice twisted module and the free-boson control across cutoffs."""
import argparse
import json
import time

from twistvoa.examples import build
from twistvoa.rewrite import check_cn_nesting, cn_subspace


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cutoffs", default="4,6,8")
    p.add_argument("--ns", default="1,2,3")
    p.add_argument("--control", default="3,4,5,6,7,8", help="free-boson cutoffs")
    args = p.parse_args()
    rows = []
    for cut in map(int, args.cutoffs.split(",")):
        W = build("lattice_sqrt2", cut).W
        for n in map(int, args.ns.split(",")):
            t = time.perf_counter()
            rep = cn_subspace(W, n, cut, full_checks=cut <= 6)
            row = rep.to_json() | {"instance": "lattice_sqrt2", "cutoff": cut,
                                   "seconds": round(time.perf_counter() - t, 2)}
            if n >= 2:
                row["nested_in_previous"] = check_cn_nesting(W, n, cut)
            rows.append(row)
    for cut in map(int, args.control.split(",")):
        rep = cn_subspace(build("free_boson_untwisted", cut).W, 2, cut, full_checks=False)
        rows.append({"instance": "free_boson_untwisted", "cutoff": cut, "n": 2, "total": rep.total})
    print(json.dumps(rows, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
