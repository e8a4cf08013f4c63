"""Collects one verdict line per acceptance criterion for the end-of-run summary."""

LINES = []


def record(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    LINES.append(line)
    print(line)
    return ok
