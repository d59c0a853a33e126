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
Converter methods.

Every converter takes ``(annotation, ctx, arg)`` and returns the converted value, raising
:class:`.ConversionFailedError` when the argument is invalid.

.. currentmodule:: skilleval.commands.converters
"""
import enum
from pathlib import Path
from typing import Any, List

import typing_inspect

from skilleval.commands.exc import ConversionFailedError


def convert_int(ann, ctx, arg: str) -> int:
    """
    Converts an argument into an integer.
    """
    try:
        return int(arg)
    except ValueError as e:
        raise ConversionFailedError(ctx, arg, int, "Invalid integer") from e


def convert_float(ann, ctx, arg: str) -> float:
    """
    Converts an argument into a float.
    """
    try:
        return float(arg)
    except ValueError as e:
        raise ConversionFailedError(ctx, arg, float, "Invalid float") from e


def convert_path(ann, ctx, arg: str) -> Path:
    """
    Converts an argument into a :class:`pathlib.Path`.
    """
    if not arg.strip():
        raise ConversionFailedError(ctx, arg, Path, "Empty path")

    return Path(arg)


def convert_enum(ann, ctx, arg: str) -> enum.Enum:
    """
    Converts an argument into a member of an :class:`enum.Enum`, by value or by name. Enums with
    a ``parse`` classmethod use it instead.
    """
    parse = getattr(ann, "parse", None)
    if parse is not None:
        try:
            return parse(arg)
        except ValueError as e:
            raise ConversionFailedError(ctx, arg, ann, str(e)) from e

    for member in ann:
        if arg.lower() in (str(member.value).lower(), member.name.lower()):
            return member

    choices = ", ".join(str(m.value) for m in ann)
    raise ConversionFailedError(ctx, arg, ann, f"Expected one of {choices}")


def convert_list(ann, ctx, arg: str) -> List[Any]:
    """
    Converts a :class:`typing.List` from a comma separated argument.
    """
    internal = typing_inspect.get_args(ann, evaluate=True)[0]
    converter = ctx._lookup_converter(internal)
    results = []

    for item in arg.split(","):
        item = item.strip()
        if not item:
            continue

        results.append(converter(internal, ctx, item))

    if not results:
        raise ConversionFailedError(ctx, arg, ann, "Empty list")

    return results


def convert_union(ann, ctx, arg: str) -> Any:
    """
    Converts a :class:`typing.Union`, such as an ``Optional``.

    This works by finding every type defined in the union, and trying each one until one returns
    a non-error.
    """
    subtypes = typing_inspect.get_args(ann, evaluate=True)
    for subtype in subtypes:
        if subtype is type(None):
            continue

        try:
            converter = ctx._lookup_converter(subtype)
            return converter(subtype, ctx, arg)
        except ConversionFailedError:
            continue

    raise ConversionFailedError(ctx, arg, ann, message="Failed to convert to any of these types")
