# FILE: dualsim/utils/log.py
# Stage logger. Writes to stderr so stdout stays clean for summaries and CSV.
from rich.console import Console
from rich.markup import escape

_console = Console(stderr=True, highlight=False)
_verbose = False


def set_verbose(flag):
    global _verbose
    _verbose = bool(flag)


def _kw(kw):
    return escape(" ".join(f"{k}={v}" for k, v in kw.items()))


def step(n):
    _console.print(f"\n[bold]=== {escape(n.upper())} ===[/bold]")


def ok(**kw):
    _console.print("[green]OK[/green]", _kw(kw))


def warn(m, **kw):
    _console.print("[yellow]WARN[/yellow]", escape(m), _kw(kw))


def info(m, **kw):
    _console.print(escape(m), _kw(kw))


def debug(m, **kw):
    if _verbose:
        _console.print("[dim]" + escape(m) + "[/dim]", _kw(kw))


def error(m):
    # messages carry "[scenario]" prefixes and user text; never read them as markup
    _console.print(f"[red]error:[/red] {escape(m)}")
