from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterator, Optional

from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

TickObserver = Callable[..., None]


@contextmanager
def tick_progress(console: Optional[Console], total: int, description: str = "Simulating") -> Iterator[TickObserver]:
    """Yield a per-tick observer that advances a progress bar over `total` ticks."""
    progress = Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console or Console(stderr=True),
        transient=True,
    )
    with progress:
        task = progress.add_task(description, total=total)

        def advance(*_args) -> None:
            progress.advance(task)

        yield advance
