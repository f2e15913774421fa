"""Try each candidate conjugate prior on the three Bayes fixtures.

Usage: python scripts/calibrate_hill_prior.py [--json]
"""

import argparse
import json

from newsvendor_ci.experiments import calibrate_hill_prior


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--json", action="store_true", help="print the raw result")
    args = parser.parse_args()
    result = calibrate_hill_prior()
    if args.json:
        print(json.dumps(result, indent=2, default=float))
        return
    for prior, rows in result["candidates"].items():
        print(prior)
        for name, row in rows.items():
            residuals = ", ".join(f"{k} {v:+.2e}" for k, v in row["residuals"].items())
            mark = "ok" if row["passed"] else "MISS"
            print(f"  {name:16s} Q={row['quantity']:<10.4f} cost={row['cost']:.4f}  {residuals}  {mark}")
    print(f"selected: {result['selected']}")


if __name__ == "__main__":
    main()
