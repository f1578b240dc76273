"""Subcommand registry for the command-line front end"""

import argparse
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

Handler = Callable[[argparse.Namespace, "RunContext"], None]


@dataclass(frozen=True)
class Option:
    """One long flag of a subcommand (argparse keyword arguments in ``kwargs``)"""
    flag: str
    kwargs: Dict[str, Any] = field(default_factory=dict)


def opt(flag: str, default: Any = None, help: str = "", **kwargs) -> Option:
    if "type" not in kwargs and "action" not in kwargs and isinstance(default, (int, float)) \
            and not isinstance(default, bool):
        kwargs["type"] = type(default)
    return Option(flag, dict(default=default, help=help, **kwargs))


@dataclass
class Command:
    name: str
    help: str
    handler: Handler
    options: List[Option]


class Router:
    """Collects subcommands registered with ``@router.command(...)``"""

    def __init__(self):
        self.commands: Dict[str, Command] = {}

    def command(self, name: str, help: str, options: Sequence[Option] = ()):
        def register(fn: Handler) -> Handler:
            if name in self.commands:
                raise ValueError(f"subcommand '{name}' registered twice")
            self.commands[name] = Command(name, help, fn, list(options))
            return fn
        return register

    def build_parser(self, prog: Optional[str] = None) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog=prog or "morphosim",
            description="Simulation experiments for tunable-stiffness actuators and compliant swimmers",
        )
        sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
        sub.required = True
        for command in self.commands.values():
            child = sub.add_parser(
                command.name,
                help=command.help,
                description=command.help,
                formatter_class=argparse.ArgumentDefaultsHelpFormatter,
            )
            for option in command.options:
                child.add_argument(option.flag, **option.kwargs)
            child.add_argument("--out-dir", default="out", help="Directory for output files")
        return parser


class RunContext:
    """Output directory bookkeeping for one subcommand run"""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.outputs: List[str] = []

    def path(self, name: str) -> str:
        full = os.path.join(self.out_dir, name)
        self.outputs.append(full)
        return full
