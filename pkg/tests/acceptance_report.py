"""Collects one line per acceptance criterion for the end-of-session summary."""

LINES = {}


def record(number, passed, detail):
    LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(LINES[number])
    return passed
