# This file is part of skilleval.
#
# skilleval is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# skilleval is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with skilleval.  If not, see <http://www.gnu.org/licenses/>.

"""
Contains the class for the commands manager: it turns registered command functions into an
``argparse`` command line and dispatches invocations to them.

.. currentmodule:: skilleval.commands.manager
"""
import argparse
import enum
import importlib
import inspect
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, TextIO

import typing_inspect

from skilleval import __version__
from skilleval.commands.context import Context, command_annotations, command_parameters
from skilleval.commands.decorators import SIGNATURE_DEFAULT, OptionSpec
from skilleval.commands.exc import UnknownCommandError, UsageError
from skilleval.exc import InvalidConfig, SkillEvalError

logger = logging.getLogger("skilleval.commands")

#: Exit code of a successful command.
EXIT_OK = 0

#: Exit code of a command that failed while running.
EXIT_FAILURE = 1

#: Exit code of an invocation with invalid arguments.
EXIT_USAGE = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _non_none_args(annotation: Any) -> List[Any]:
    return [a for a in typing_inspect.get_args(annotation, evaluate=True) if a is not type(None)]


def _is_bool(annotation: Any) -> bool:
    if annotation is bool:
        return True

    if typing_inspect.is_optional_type(annotation):
        args = _non_none_args(annotation)
        return args == [bool]

    return False


def _display_default(value: Any) -> Any:
    """
    Turns enum defaults (and sequences of them) back into their command line spelling.
    """
    if isinstance(value, enum.Enum):
        return value.value

    if isinstance(value, (list, tuple)) and value and all(isinstance(v, enum.Enum) for v in value):
        return ",".join(str(v.value) for v in value)

    return value


def _enum_metavar(annotation: Any) -> Optional[str]:
    if typing_inspect.is_optional_type(annotation):
        args = _non_none_args(annotation)
        annotation = args[0] if len(args) == 1 else annotation

    if isinstance(annotation, type) and issubclass(annotation, enum.Enum):
        return "{" + ",".join(str(m.value) for m in annotation) + "}"

    return None


def configure_logging(verbose: int = 0, quiet: bool = False) -> None:
    """
    Configures logging for a command line run: warnings by default, ``-v`` for info, ``-vv``
    for debug, ``-q`` for errors only.
    """
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING

    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger("skilleval").setLevel(level)


class CommandsManager(object):
    """
    A manager that handles the commands of the command line.

    Commands are plain functions decorated with :func:`.command` (and :func:`.option` for their
    flags) that take a :class:`.Context` as their first argument:

    .. code-block:: python3

        @command(name="ping")
        @option("--times", help="How often to ping.")
        def ping(ctx: Context, times: int = 1):
            for _ in range(times):
                ctx.echo("Ping!")

        manager = CommandsManager()
        manager.add_command(ping)
        exit_code = manager.run(["ping", "--times", "3"])

    Every parameter becomes a flag; its annotation picks the converter and its default makes it
    optional. Commands can also be loaded in bulk with :meth:`load_commands_from`.
    """

    def __init__(
        self, prog: str = "skilleval", description: str = None, stdout: Optional[TextIO] = None
    ):
        """
        :param prog: The program name shown in usage lines.
        :param description: The top-level help text.
        :param stdout: The stream command output is printed to; standard output by default.
        """
        self.prog = prog
        self.description = description

        #: A dictionary of <command name> -> command function.
        self.commands: Dict[str, Any] = {}

        self._stdout = stdout

    @classmethod
    def with_builtins(cls, **kwargs) -> "CommandsManager":
        """
        Creates a manager with the built-in commands loaded.
        """
        manager = cls(**kwargs)
        manager.load_commands_from("skilleval.commands.builtin")
        return manager

    def add_command(self, command):
        """
        Adds a command.

        :param command: A command function.
        """
        if not hasattr(command, "is_cmd"):
            raise ValueError("Commands must be decorated with the command decorator")

        self.commands[command.cmd_name] = command
        return command

    def remove_command(self, command):
        """
        Removes a command.

        :param command: The name of the command, or the command function.
        """
        if isinstance(command, str):
            return self.commands.pop(command)

        for k, p in self.commands.copy().items():
            if p == command:
                return self.commands.pop(k)

    def get_command(self, command_name: str):
        """
        Gets a command from the internal command storage.

        :param command_name: The name of the command to lookup.
        """
        try:
            return self.commands[command_name]
        except KeyError:
            raise UnknownCommandError(command_name) from None

    def load_commands_from(self, import_path: str) -> List[str]:
        """
        Loads every command defined in the specified module.

        :param import_path: The import path to import.
        :return: The names of the loaded commands.
        """
        mod = importlib.import_module(import_path)
        loaded = []
        for _, member in inspect.getmembers(mod, predicate=lambda v: hasattr(v, "is_cmd")):
            self.add_command(member)
            loaded.append(member.cmd_name)

        logger.debug("Loaded commands %s from %s", loaded, import_path)
        return loaded

    def _add_option(
        self, parser: argparse.ArgumentParser, ctx: Context, spec: OptionSpec, param, annotation
    ) -> None:
        default = spec.default if spec.default is not SIGNATURE_DEFAULT else param.default
        if inspect.isfunction(default):
            default = default()

        kwargs: Dict[str, Any] = {"dest": spec.dest, "help": spec.help or " "}
        if _is_bool(annotation):
            default = bool(default) if default is not inspect.Parameter.empty else False
            kwargs["action"] = "store_false" if default else "store_true"
            kwargs["default"] = default
            parser.add_argument(*spec.flags, **kwargs)
            return

        kwargs["type"] = ctx.argument_type(annotation)
        if default is inspect.Parameter.empty:
            kwargs["required"] = True
        else:
            kwargs["default"] = _display_default(default)

        if spec.choices is not None:
            kwargs["choices"] = spec.choices

        metavar = spec.metavar or _enum_metavar(annotation)
        if metavar is not None:
            kwargs["metavar"] = metavar

        parser.add_argument(*spec.flags, **kwargs)

    def build_parser(self) -> argparse.ArgumentParser:
        """
        Builds the full command line parser: global logging flags plus one sub-parser per command.
        """
        parser = argparse.ArgumentParser(prog=self.prog, description=self.description)
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        parser.add_argument(
            "-v", "--verbose", action="count", default=0, help="Log more (repeat for debug)."
        )
        parser.add_argument("-q", "--quiet", action="store_true", help="Only log errors.")

        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True

        for name, cmd in sorted(self.commands.items()):
            ctx = Context(name, manager=self, stdout=self._stdout)
            sub = subparsers.add_parser(
                name,
                help=cmd.cmd_description,
                description=cmd.cmd_description,
                formatter_class=argparse.ArgumentDefaultsHelpFormatter,
            )

            params = command_parameters(cmd)
            annotations = command_annotations(cmd)
            specs = {spec.dest: spec for spec in cmd.cmd_options}
            for param_name, param in params.items():
                spec = specs.get(param_name) or OptionSpec(
                    dest=param_name, flags=("--" + param_name.replace("_", "-"),)
                )
                self._add_option(sub, ctx, spec, param, annotations.get(param_name, str))

            sub.set_defaults(_command=cmd, _context=ctx)

        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """
        Parses a command line and runs the selected command.

        :param argv: The arguments, without the program name; ``sys.argv[1:]`` by default.
        :return: The exit code: 0 on success, 2 for invalid arguments, 1 for any other failure.
        """
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            # --help, --version and argparse usage errors
            return e.code if isinstance(e.code, int) else EXIT_USAGE

        configure_logging(args.verbose, args.quiet)
        cmd, ctx = args._command, args._context
        ctx.args = args
        kwargs = {name: getattr(args, name) for name in command_parameters(cmd)}

        try:
            ctx.invoke(cmd, **kwargs)
        except (UsageError, InvalidConfig) as e:
            logger.error("%s: %s", ctx.command_name, e)
            return EXIT_USAGE
        except SkillEvalError as e:
            logger.error("%s failed: %s", ctx.command_name, e)
            logger.debug("Traceback of the failure", exc_info=True)
            return EXIT_FAILURE

        return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> None:
    """
    The ``skilleval`` console script.
    """
    manager = CommandsManager.with_builtins(
        description="Surgical skill evaluation with a grouped fully convolutional network."
    )
    sys.exit(manager.run(argv))
