#!/usr/bin/env python3
"""Repeated peg-in-hole trial batches on the default desk scene.

Each batch draws a fresh hole choice and bar yaw per trial under the given
vision noise; the per-batch seed makes every run reproducible. Prints one
line per batch plus an aggregate, and optionally writes the last batch's
JSON and CSV records.
"""

import argparse
import json
import sys

from lfdkit.assembly import batch_csv_text, batch_to_dict, run_batch
from lfdkit.presets import default_scenario


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20, help="trials per batch (default 20)")
    ap.add_argument("--batches", type=int, default=3, help="number of batches (default 3)")
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--noise-sigma", type=float, default=5e-4, help="vision noise in meters")
    ap.add_argument("--out", help="optional output prefix; writes <out>.json and <out>.csv")
    args = ap.parse_args(argv)
    if args.n < 1 or args.batches < 1:
        print("error: --n and --batches must be at least 1", file=sys.stderr)
        return 1

    template = default_scenario(noise_sigma=args.noise_sigma)
    total_ok = 0
    last = None
    for seed in range(args.first_seed, args.first_seed + args.batches):
        batch = run_batch(template, n=args.n, seed=seed)
        last = batch
        ok = sum(r.success for r in batch.records)
        total_ok += ok
        reasons = "" if not batch.failure_reasons else f"  failures: {dict(batch.failure_reasons)}"
        print(f"batch seed {seed}: {ok}/{args.n} succeeded, rate {batch.success_rate:.3f}{reasons}")

    total = args.n * args.batches
    print(f"aggregate: {total_ok}/{total} ({total_ok / total:.3f}) at sigma {args.noise_sigma} m")

    if args.out and last is not None:
        with open(f"{args.out}.json", "w") as fh:
            json.dump(batch_to_dict(last), fh, indent=2)
            fh.write("\n")
        with open(f"{args.out}.csv", "w") as fh:
            fh.write(batch_csv_text(last))
        print(f"wrote {args.out}.json and {args.out}.csv (last batch)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
