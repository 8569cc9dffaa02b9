"""Shared record of acceptance verdicts, printed at the end of the run."""

RESULTS: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str, seconds: float) -> None:
    RESULTS[number] = f"[{'PASS' if ok else 'FAIL'}] {number:2d} {title}: {detail} ({seconds:.1f} s)"
