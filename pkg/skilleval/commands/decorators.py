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
Decorators to annotate command functions.

.. currentmodule:: skilleval.commands.decorators
"""
import inspect
import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Tuple

logger = logging.getLogger("skilleval.commands")

#: Marks an :func:`option` whose default comes from the command's signature.
SIGNATURE_DEFAULT = object()


@dataclass(frozen=True)
class OptionSpec:
    """
    The command line flag of one command parameter.
    """

    #: The parameter of the command function this flag fills.
    dest: str

    #: The flag strings, e.g. ``("--per-class",)``.
    flags: Tuple[str, ...]

    #: The help text.
    help: Optional[str] = None

    #: The default value. Callables are called when the parser is built.
    default: Any = SIGNATURE_DEFAULT

    #: The allowed values, if restricted.
    choices: Optional[Sequence[Any]] = None

    #: The placeholder shown in usage lines.
    metavar: Optional[str] = None


def get_description(func) -> Optional[str]:
    """
    Gets the description of a function.

    :param func: The function.
    :return: The description extracted from the docstring, or None.
    """
    if not func.__doc__:
        return None

    doc = inspect.cleandoc(inspect.getdoc(func))
    lines = doc.split("\n")
    return lines[0]


def command(*, name: str = None, description: str = None, **kwargs):
    """
    Marks a function as a command. This annotates the command with some attributes that allow it
    to be registered with a :class:`.CommandsManager` and invoked from the command line.

    This decorator can be invoked like this:

    .. code-block:: python3

        @command(name="ping")
        def ping(ctx):
            ctx.echo("Ping!")

    :param name: The name of the command. If this is not specified, it will use the name of the \
        function object.
    :param description: The description of the command. If this is not specified, it will use the \
        first line of the docstring.
    :param kwargs: Anything to annotate the command with.
    """

    # wrapper function that actually marks the object
    def inner(func):
        def set(attr: str, value: Any):
            try:
                return getattr(func, attr)
            except AttributeError:
                setattr(func, attr, value)

        set("is_cmd", True)
        set("cmd_name", name or func.__name__)
        set("cmd_description", description or get_description(func))
        set("cmd_options", [])

        # annotate command object with any extra
        for ann_name, annotation in kwargs.items():
            set("cmd_" + ann_name, annotation)

        logger.debug("Registered command %s", func.cmd_name)
        return func

    return inner


def option(
    *flags: str,
    dest: str = None,
    help: str = None,
    default: Any = SIGNATURE_DEFAULT,
    choices: Sequence[Any] = None,
    metavar: str = None,
):
    """
    Declares the flag of a command parameter. The parameter's type annotation picks the
    converter; its default (unless ``default`` is given) makes the flag optional.

    .. code-block:: python3

        @command(name="synth")
        @option("--per-class", help="Trials per skill level.")
        def cmd_synth(ctx, per_class: int = 10):
            ...

    :param flags: The flag strings.
    :param dest: The parameter name; derived from the first long flag when omitted.
    :param help: The help text.
    :param default: Overrides the signature default.
    :param choices: The allowed values.
    :param metavar: The usage placeholder.
    """
    if not flags:
        raise TypeError("An option needs at least one flag")

    if dest is None:
        long_flags = [f for f in flags if f.startswith("--")] or list(flags)
        dest = long_flags[0].lstrip("-").replace("-", "_")

    spec = OptionSpec(
        dest=dest,
        flags=tuple(flags),
        help=help,
        default=default,
        choices=tuple(choices) if choices is not None else None,
        metavar=metavar,
    )

    def inner(func):
        if not hasattr(func, "cmd_options"):
            func.cmd_options = []

        # decorators apply bottom-up; keep the source order
        func.cmd_options.insert(0, spec)
        return func

    return inner
