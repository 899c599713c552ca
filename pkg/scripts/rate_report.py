#!/usr/bin/env python3
"""
Rate report and summary table for one or more benchmark histories.

Usage:
    python3 scripts/rate_report.py output/square-poly_lambda1_uniform/history.csv
    python3 scripts/rate_report.py output/square-poly_lambda*_uniform/history.csv --window 4
"""

import argparse
import sys
from pathlib import Path

from stream_verify.report import History, format_summary, rate_report, summary_table


def main():
    parser = argparse.ArgumentParser(description="Empirical rates and summary table of refinement histories")
    parser.add_argument("histories", nargs="+", help="history.csv files")
    parser.add_argument("--window", type=int, default=4, help="Levels used for the log-log fit")
    args = parser.parse_args()

    histories = []
    for path in args.histories:
        path = Path(path)
        if not path.exists():
            print(f"❌ Not found: {path}")
            sys.exit(1)
        h = History.read_csv(path)
        h.name = path.parent.name
        histories.append(h)

    for h in histories:
        print("=" * 60)
        print(h.name)
        print("=" * 60)
        if len(h) < 2:
            print("  ⚠️  fewer than 2 levels, no rates")
            continue
        print(rate_report(h, args.window))

    print("=" * 60)
    print("SUMMARY (finest level of each run)")
    print("=" * 60)
    print(format_summary(summary_table(histories)))


if __name__ == "__main__":
    main()
