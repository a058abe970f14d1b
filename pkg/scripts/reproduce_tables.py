"""Rebuild the reference aggregate tables and the trade-off sweep from per-subset values.

    python scripts/reproduce_tables.py [--out-dir results/]
"""

import argparse
from pathlib import Path

from anoneval.report import build_report, read_rows_csv, render_report

DATA = Path(__file__).resolve().parents[1] / "data" / "reference_results.csv"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", default=str(DATA))
    p.add_argument("--out-dir", default="results/tables")
    args = p.parse_args()

    report = build_report(read_rows_csv(args.rows), seed=0, timestamp="fixed")
    for metric in ("eer", "wer", "f0corr"):
        print(f"\n{metric}")
        for split in ("dev", "test"):
            cells = [f"{a.system}={a.value:.2f}" for a in report.aggregates if (a.metric, a.split) == (metric, split)]
            print(f"  {split:5s} " + "  ".join(cells))

    print("\nbest system per lambda (excluding the unprocessed baseline)")
    for split in ("dev", "test"):
        table = report.sweep_table(split)
        systems = [s for s in table if s != report.metadata["baseline"]]
        best = {lam: min(systems, key=lambda s: table[s][lam]) for lam in report.lambdas}
        print(f"  {split:5s} " + "  ".join(f"{lam:g}:{s}" for lam, s in best.items()))

    written = render_report(report, args.out_dir)
    print("\nwrote " + ", ".join(str(p) for p in written.values()))


if __name__ == "__main__":
    main()
