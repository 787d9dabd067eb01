import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE: dict = {}


def record(number: int, ok: bool, detail: str):
    ACCEPTANCE[number] = (ok, detail)
    print(f"acceptance {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
