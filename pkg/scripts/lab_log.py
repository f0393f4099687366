#!/usr/bin/env python3
"""
Console logging for the attachment lab.
Elapsed-time prefixed messages with per-step timing, written to stderr via rich
so that machine-readable output on stdout stays clean.
"""

import time
from typing import Dict, Iterable, Optional, Sequence

from rich.console import Console
from rich.table import Table


class LabLog:
    def __init__(self, verbose: bool = False, console: Optional[Console] = None):
        self.verbose = verbose
        self.console = console or Console(stderr=True, highlight=False, markup=False)
        self.start_time = time.time()
        self.step_times: Dict[str, float] = {}

    def log(self, message: str, step: Optional[str] = None):
        """Log message with elapsed time; a repeated step name closes the step"""
        current_time = time.time()
        elapsed = current_time - self.start_time

        if step:
            if step in self.step_times:
                step_duration = current_time - self.step_times.pop(step)
                self.console.print(f"[{elapsed:06.1f}s] {message} (took {step_duration:.1f}s)")
            else:
                self.step_times[step] = current_time
                self.console.print(f"[{elapsed:06.1f}s] {message}")
        else:
            self.console.print(f"[{elapsed:06.1f}s] {message}")

    def detail(self, message: str):
        if self.verbose:
            self.log(f"   {message}")

    def warning(self, message: str):
        self.log(f"⚠️  {message}")

    def error(self, message: str):
        self.log(f"❌ {message}")

    def print_table(self, title: str, columns: Sequence[str], rows: Iterable[Sequence[object]]):
        """Render rows as a rich table on the log console"""
        table = Table(title=title)
        for column in columns:
            table.add_column(column)
        for row in rows:
            table.add_row(*[_format_cell(value) for value in row])
        self.console.print(table)


def _format_cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
