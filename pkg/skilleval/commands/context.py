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
Class for the context of a command invocation.

.. currentmodule:: skilleval.commands.context
"""
import argparse
import enum
import inspect
import sys
import typing
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TextIO, Type, Union

import typing_inspect

from skilleval.commands.converters import (
    convert_enum,
    convert_float,
    convert_int,
    convert_list,
    convert_path,
    convert_union,
)
from skilleval.commands.exc import CommandInvokeError, ConversionFailedError
from skilleval.exc import SkillEvalError


class Context(object):
    """
    A class that represents the context for a command.
    """

    _converters = {
        List: convert_list,
        list: convert_list,
        Union: convert_union,
        str: lambda ann, ctx, arg: arg,
        int: convert_int,
        float: convert_float,
        Path: convert_path,
    }

    def __init__(self, command_name: str, manager=None, stdout: Optional[TextIO] = None):
        """
        :param command_name: The name the command was invoked as.
        :param manager: The :class:`.CommandsManager` that dispatched the command.
        :param stdout: The stream summaries are printed to; standard output by default.
        """
        #: The command name for this context.
        self.command_name = command_name

        #: The manager for this context.
        self.manager = manager

        #: The parsed arguments, filled in by the manager.
        self.args: Optional[argparse.Namespace] = None

        self._stdout = stdout

    @classmethod
    def add_converter(cls, type_: Type[Any], converter):
        """
        Adds a converter to the mapping of converters.

        :param type_: The type to convert to.
        :param converter: The converter callable.
        """
        cls._converters[type_] = converter

    @property
    def stdout(self) -> TextIO:
        return self._stdout if self._stdout is not None else sys.stdout

    def echo(self, *parts: Any) -> None:
        """
        Prints a line of command output.
        """
        print(*parts, file=self.stdout)

    def _lookup_converter(self, annotation: Type[Any]) -> "Callable[[Any, Context, str], Any]":
        """
        Looks up a converter for the specified annotation.
        """
        origin = typing_inspect.get_origin(annotation)
        if origin is not None:
            annotation = origin

        if annotation in self._converters:
            return self._converters[annotation]

        if isinstance(annotation, type) and issubclass(annotation, enum.Enum):
            return convert_enum

        # str, unannotated parameters etc
        return lambda ann, ctx, i: i

    def argument_type(self, annotation: Type[Any]) -> Callable[[str], Any]:
        """
        Wraps the converter of an annotation into an ``argparse`` type callable.
        """
        converter = self._lookup_converter(annotation)

        def convert(arg: str) -> Any:
            try:
                return converter(annotation, self, arg)
            except ConversionFailedError as e:
                raise argparse.ArgumentTypeError(str(e)) from e

        convert.__name__ = getattr(annotation, "__name__", str(annotation))
        return convert

    def invoke(self, command, **kwargs) -> Any:
        """
        Invokes a command with already converted arguments.

        Library errors propagate unchanged; anything else is wrapped in a
        :class:`.CommandInvokeError`.
        """
        try:
            return command(self, **kwargs)
        except SkillEvalError:
            raise
        except Exception as e:
            raise CommandInvokeError(self) from e


def command_parameters(func) -> Dict[str, inspect.Parameter]:
    """
    :return: The parameters of a command function, minus the leading context.
    """
    params = list(inspect.signature(func).parameters.values())[1:]
    return {p.name: p for p in params}


def command_annotations(func) -> Dict[str, Any]:
    """
    :return: The resolved type annotations of a command function.
    """
    return typing.get_type_hints(func)
