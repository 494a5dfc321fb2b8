"""Run the acceptance criteria outside pytest and print one line per criterion.

    python3 scripts/run_acceptance.py            # all criteria
    python3 scripts/run_acceptance.py 1 4 5      # a subset
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import test_acceptance  # noqa: E402


def main(argv):
    numbers = [int(a) for a in argv] or [n for n, _, _ in test_acceptance.CRITERIA]
    all_ok = True
    for n in numbers:
        ok, line = test_acceptance.run_criterion(n)
        print(line, flush=True)
        all_ok &= ok
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
