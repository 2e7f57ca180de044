#!/usr/bin/env python3
"""Run every shipped scenario fixture in batch mode and print one line per
fixture; exits nonzero if any fixture misses its expectations."""
import glob
import os

from tapo.scenario import ScriptedAnswerer, run_file

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")

# answers for the one interactive fixture, mirroring its header comment
INTERACTIVE_ANSWERS = {
    "curry_v_interactive.tapo": [
        "t", "f", "t",
        {"trust": "high", "certificates": ["provenance"]},
        {"trust": "high", "certificates": ["provenance"]},
        "t",
    ],
}


def _is_scenario(path: str) -> bool:
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                return stripped.startswith("scenario")
    return False


def main() -> int:
    failures = 0
    for path in sorted(glob.glob(os.path.join(FIXTURES, "*.tapo"))):
        name = os.path.basename(path)
        if not _is_scenario(path):
            continue  # KB-only family files are checked by `tapo check`
        answers = INTERACTIVE_ANSWERS.get(name)
        try:
            result = run_file(path, answerer=ScriptedAnswerer(answers)
                              if answers else None)
        except Exception as err:
            print(f"ERROR {name}: {err}")
            failures += 1
            continue
        status = "ok" if result.ok else "FAIL"
        print(f"{status:4s} {name}: exit {result.exit_status}, "
              f"{len(result.trace.events)} events")
        if not result.ok:
            failures += 1
            for failure in result.failures:
                print(f"     {failure}")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
