from __future__ import annotations

import logging
import os

from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.rule import Rule
from rich.theme import Theme

__all__ = [
    "console",
    "log",
    "get_progress",
    "print_rule",
    "Rule",
    "set_log_file",
    "setup_logging",
]

console = Console(
    theme=Theme(
        {
            "info": "cyan",
            "warning": "yellow",
            "error": "bold red",
            "success": "bold green",
            "metric": "magenta",
            "dim": "dim white",
        }
    )
)

# Mirrors console messages into the --logger file; never reaches the root handlers.
_run_log = logging.getLogger("Nashfit.run")
_run_log.propagate = False
_run_log.setLevel(logging.INFO)


def set_log_file(path: str | os.PathLike | None) -> None:
    """Routes every `log` call to `path` as well; None detaches the file."""
    for handler in list(_run_log.handlers):
        _run_log.removeHandler(handler)
        handler.close()
    if not path:
        return
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(
        logging.Formatter("[%(asctime)s] [%(title)s] [%(style)s] %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
    )
    _run_log.addHandler(handler)


def setup_logging(level: int = logging.INFO) -> logging.Logger:
    """Configures the library loggers unless the host application already did."""
    if not logging.root.handlers:
        logging.basicConfig(
            level=level,
            format="[Nashfit] %(asctime)s - %(levelname)s - %(message)s",
            datefmt="%H:%M:%S",
        )
    logger = logging.getLogger("Nashfit")
    logger.setLevel(level)
    return logger


def log(msg: str, style: str = "info", title: str = "Nashfit", markup: bool = False) -> None:
    # paths may contain [], so the message body is plain unless asked otherwise
    console.print(f"[bold][{title}][/bold] ", style=style, end="")
    console.print(msg, style=style, markup=markup)
    if _run_log.handlers:
        _run_log.info(msg, extra={"title": title, "style": style.upper()})


def get_progress() -> Progress:
    """Transient progress bar for bootstrap replicates and grid cells."""
    return Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}"),
        BarColumn(bar_width=None),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def print_rule(title: str, style: str = "bold cyan") -> None:
    console.print(Rule(f"[{style}]{title}"))
