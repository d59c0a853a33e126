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
Reading and writing the plain-text kinematics format: one timestamp per line, 76
whitespace-separated decimals per line.

.. currentmodule:: skilleval.kinematics.parsing
"""
import logging
import math
from pathlib import Path

import numpy as np

from skilleval.exc import EmptyFile, IoError, MalformedRow
from skilleval.kinematics.layout import N_CHANNELS
from skilleval.util import PathLike, format_decimal

logger = logging.getLogger("skilleval.kinematics")


def parse_kinematics(path: PathLike) -> np.ndarray:
    """
    Parses a kinematics file into an ``l x 76`` matrix, in file row order. Blank lines are
    skipped.

    :param path: The file to read.
    :return: The float64 sample matrix.
    """
    rows = []
    try:
        with open(path, "r", encoding="ascii", errors="replace") as f:
            for lineno, line in enumerate(f, start=1):
                tokens = line.split()
                if not tokens:
                    continue

                if len(tokens) != N_CHANNELS:
                    raise MalformedRow(
                        str(path), lineno, f"expected {N_CHANNELS} columns, got {len(tokens)}"
                    )

                try:
                    row = [float(token) for token in tokens]
                except ValueError as e:
                    raise MalformedRow(str(path), lineno, str(e)) from e

                # "nan" and "inf" parse as floats but are not decimals
                if not all(math.isfinite(v) for v in row):
                    raise MalformedRow(str(path), lineno, "non-finite value")

                rows.append(row)
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e

    if not rows:
        raise EmptyFile(str(path))

    logger.debug("Parsed %d samples from %s", len(rows), path)
    return np.array(rows, dtype=np.float64)


def write_kinematics(path: PathLike, samples: np.ndarray) -> None:
    """
    Writes a sample matrix in the kinematics text format, at 17 significant digits so that
    :func:`parse_kinematics` reads back the exact same values.

    :param path: The file to write.
    :param samples: An ``l x 76`` matrix.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != N_CHANNELS:
        raise ValueError(f"Expected an l x {N_CHANNELS} matrix, got {samples.shape}")

    lines = ["    ".join(format_decimal(v) for v in row) for row in samples]
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as e:
        raise IoError(str(path), e.strerror or str(e)) from e
