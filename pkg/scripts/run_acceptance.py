"""Run acceptance criteria A1-A11 (or a subset) and print one line each.

    python3 scripts/run_acceptance.py            # all
    python3 scripts/run_acceptance.py A1 A4 A9
"""
import argparse
from pathlib import Path
import sys
import time

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from test_acceptance import CRITERIA, report  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("tags", nargs="*", default=list(CRITERIA))
    args = ap.parse_args()
    failed = 0
    for tag in args.tags:
        start = time.perf_counter()
        ok, detail = CRITERIA[tag.upper()]()
        report(tag.upper(), ok, detail, time.perf_counter() - start)
        failed += not ok
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
