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
Defines commands-specific exceptions.

.. currentmodule:: skilleval.commands.exc
"""
from typing import Any

from skilleval.exc import SkillEvalError


class CommandsError(SkillEvalError):
    pass


class UsageError(CommandsError):
    """
    Raised when a command is invoked with invalid arguments.
    """


class UnknownCommandError(UsageError):
    """
    Raised when no command with the requested name exists.
    """

    def __init__(self, name: str):
        self.name = name

    def __str__(self) -> str:
        return f"Unknown command `{self.name}`."

    __repr__ = __str__


class ConversionFailedError(UsageError):
    """
    Raised when conversion of an argument fails.
    """

    def __init__(self, ctx, arg: str, to_type: Any, message: str = "Unknown error"):
        self.ctx = ctx
        self.arg = arg
        self.to_type = to_type
        self.message = message

    def __str__(self) -> str:
        try:
            name = getattr(self.to_type, "__name__")
        except AttributeError:
            name = repr(self.to_type)

        return f"Cannot convert `{self.arg}` to type `{name}`: {self.message}."

    __repr__ = __str__


class CommandInvokeError(CommandsError):
    """
    Raised when a command fails with an error that is not a :class:`.SkillEvalError`. The
    original error is the ``__cause__``.
    """

    def __init__(self, ctx):
        self.ctx = ctx

    def __str__(self) -> str:
        return f"Command {self.ctx.command_name} failed with error `{self.__cause__}`."

    __repr__ = __str__
