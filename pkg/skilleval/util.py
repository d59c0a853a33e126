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
Misc utilities shared throughout the library.

.. currentmodule:: skilleval.util
"""
import json
import os
from pathlib import Path
from typing import Any, Union

import numpy as np

from skilleval.exc import IoError

PathLike = Union[str, "os.PathLike[str]"]


def format_decimal(value: float) -> str:
    """
    Formats a float with 17 significant digits, enough to round-trip any double exactly.

    :param value: The value to format.
    :return: The decimal string.
    """
    return format(float(value), ".17g")


def derive_seed(master: int, *indices: int) -> int:
    """
    Derives a child seed from a master seed and a path of run indices.

    .. code-block:: python3

        derive_seed(0, 1, 3)  # the seed of repeat 1, fold 3 under master seed 0

    :param master: The master seed.
    :param indices: The indices identifying the nested run.
    :return: A 32-bit seed that only depends on the inputs.
    """
    seq = np.random.SeedSequence([int(master), *(int(i) for i in indices)])
    return int(seq.generate_state(1)[0])


def make_rng(seed: int, *indices: int) -> np.random.Generator:
    """
    Makes a seeded generator for the run identified by ``(seed, *indices)``.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(i) for i in indices)]))


def to_jsonable(value: Any) -> Any:
    """
    Converts numpy scalars and arrays (possibly nested inside containers) into plain Python values.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}

    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]

    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())

    if isinstance(value, np.integer):
        return int(value)

    if isinstance(value, np.floating):
        return float(value)

    if isinstance(value, Path):
        return str(value)

    return value


def write_json(path: PathLike, data: Any) -> None:
    """
    Writes a JSON document with a stable layout (two-space indent, trailing newline).

    Floats are written with :func:`repr`, which is the shortest string that round-trips exactly.

    :param path: The file to write.
    :param data: The document.
    """
    text = json.dumps(to_jsonable(data), indent=2, allow_nan=False) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e
