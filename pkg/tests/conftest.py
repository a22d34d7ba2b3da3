import sys
import time

import pytest


class Criterion:
    """Times one acceptance criterion and prints a single PASS/FAIL line."""

    def __init__(self, capsys, number, title, budget):
        self.capsys = capsys
        self.number = number
        self.title = title
        self.budget = budget
        self.checks = []
        self.notes = []

    def note(self, text):
        """Shown on the PASS line too."""
        self.notes.append(text)

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.checks.append((False, f"raised {exc_type.__name__}: {exc}"))
        self.checks.append((elapsed <= self.budget, f"{elapsed:.2f}s of {self.budget:g}s"))
        ok = all(c for c, _ in self.checks)
        failed = [d for c, d in self.checks if not c]
        summary = f"{len(self.checks) - 1} checks, {elapsed:.2f}s of {self.budget:g}s"
        shown = "; ".join(failed + self.notes) if failed else "; ".join([summary] + self.notes)
        with self.capsys.disabled():
            sys.stdout.write(f"\n[{'PASS' if ok else 'FAIL'}] criterion {self.number}: {self.title} ({shown})\n")
        if exc_type is None:
            assert ok, shown
        return False


@pytest.fixture
def criterion(capsys):
    def make(number, title, budget):
        return Criterion(capsys, number, title, budget)

    return make
