"""Run the acceptance criteria and print one pass/fail line per check.

Usage: python scripts/run_acceptance.py [criterion ...] [--json out.json]
"""
import argparse
import json
import sys

from hyperlap.golden import CRITERIA, run_criterion


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("criteria", nargs="*", type=int, default=sorted(CRITERIA))
    p.add_argument("--json", help="also write the records to this file")
    args = p.parse_args()
    records = []
    for k in args.criteria:
        for c in run_criterion(k):
            print(f"{c.line()}  [{c.seconds:.1f}s]", flush=True)
            records.append(c.to_dict())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(records, fh, indent=2)
    failed = [r for r in records if not r["passed"]]
    print(f"{len(records) - len(failed)}/{len(records)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
