"""Shared record of acceptance outcomes, printed again at the end of the pytest run."""

import time
from contextlib import contextmanager

RESULTS: dict[int, str] = {}


@contextmanager
def criterion(number: int, title: str):
    notes: list[str] = []
    started = time.perf_counter()
    try:
        yield notes
    except BaseException as exc:
        _record(number, title, "FAIL", started, notes + [f"{type(exc).__name__}: {exc}".splitlines()[0]])
        raise
    _record(number, title, "PASS", started, notes)


def _record(number, title, status, started, notes):
    detail = "; ".join(notes)
    line = f"[{status}] criterion {number}: {title} ({time.perf_counter() - started:.1f}s)"
    if detail:
        line += f" | {detail}"
    RESULTS[number] = line
    print(line, flush=True)
