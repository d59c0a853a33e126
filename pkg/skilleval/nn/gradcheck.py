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
Finite-difference verification of :func:`.backward`.

Each checked entry ``θ`` of a parameter tensor is compared against the central difference
``(L(θ + h) - L(θ - h)) / 2h``. Entries whose perturbation flips any ReLU unit are skipped: the
loss is not differentiable across such a kink, so neither number is meaningful there. Skipped
entries are replaced by fresh draws; a tensor with no checkable entry fails the check.

.. currentmodule:: skilleval.nn.gradcheck
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from skilleval.exc import GradientCheckFailed, InvalidConfig
from skilleval.kinematics.layout import N_CHANNELS
from skilleval.kinematics.skill import OsatsScores, SkillLevel
from skilleval.kinematics.trial import MIN_LENGTH
from skilleval.nn.model import FcnModel, HeadKind, init_model
from skilleval.nn.network import Target, backward, data_loss, forward
from skilleval.util import make_rng

logger = logging.getLogger("skilleval.nn")

#: The central-difference step.
STEP = 1e-5

#: The largest acceptable relative error.
TOLERANCE = 1e-4

#: The denominator floor of :func:`relative_error`.
ERROR_FLOOR = 1e-5

#: How many candidates per requested entry are tried before a tensor is given up on.
MAX_ATTEMPTS = 10


def relative_error(analytic: float, numeric: float) -> float:
    """
    :return: ``|a - n| / max(|a| + |n|, 1e-5)``.
    """
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), ERROR_FLOOR)


@dataclass(frozen=True)
class TensorCheck:
    """
    The outcome of checking one parameter tensor.
    """

    name: str

    #: The largest relative error over the checked entries (0 if none were checked).
    max_rel_error: float

    #: How many entries were compared.
    checked: int

    #: How many candidate entries were skipped because they straddle a ReLU kink.
    kinks: int

    def passed(self, tolerance: float = TOLERANCE) -> bool:
        return self.checked > 0 and self.max_rel_error < tolerance


@dataclass(frozen=True)
class GradcheckReport:
    """
    Every :class:`TensorCheck` of one model, in parameter order.
    """

    head_kind: HeadKind
    checks: Tuple[TensorCheck, ...]
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return all(check.passed(self.tolerance) for check in self.checks)

    @property
    def max_rel_error(self) -> float:
        return max((check.max_rel_error for check in self.checks), default=0.0)

    def failures(self) -> Dict[str, float]:
        return {
            check.name: check.max_rel_error if check.checked else math.nan
            for check in self.checks
            if not check.passed(self.tolerance)
        }

    def raise_for_failures(self) -> None:
        """
        Raises :class:`.GradientCheckFailed` naming every offending tensor, if there are any.
        """
        failures = self.failures()
        if failures:
            raise GradientCheckFailed(failures, self.tolerance)

    def to_dict(self) -> dict:
        return {
            "head": self.head_kind.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "tensors": {
                c.name: {"max_rel_error": c.max_rel_error, "checked": c.checked, "kinks": c.kinks}
                for c in self.checks
            },
        }


def random_setup(
    seed: int, length: int, head_kind: HeadKind
) -> Tuple[FcnModel, np.ndarray, Target]:
    """
    Builds a random model, trial and target for a gradient check.

    Biases are drawn from ``U(-0.1, 0.1)`` instead of being zero so that their gradients and the
    ReLU active sets are non-trivial.

    :param seed: The seed.
    :param length: The trial length.
    :param head_kind: The kind of head.
    :return: A 3-tuple of (model, samples ``length x 76``, target).
    """
    if length < MIN_LENGTH:
        raise InvalidConfig(f"length must be at least {MIN_LENGTH}, got {length}")

    rng = make_rng(seed, 0 if head_kind is HeadKind.CLASSIFICATION else 1)
    model = init_model(head_kind, rng)

    tensors = []
    for name, tensor in model.named_parameters():
        if name.endswith("biases"):
            tensor = rng.uniform(-0.1, 0.1, size=tensor.shape)

        tensors.append(tensor)

    model = model.with_parameters(tensors)
    samples = rng.standard_normal((length, N_CHANNELS))

    if head_kind is HeadKind.CLASSIFICATION:
        target = SkillLevel(int(rng.integers(0, len(SkillLevel))))
    else:
        target = OsatsScores.from_sequence(rng.uniform(1.0, 5.0, size=head_kind.n_out))

    return model, samples, target


def _candidate_entries(size: int, entries: int, rng: np.random.Generator) -> np.ndarray:
    if entries <= 0 or entries >= size:
        return np.arange(size)

    return rng.permutation(size)[: entries * MAX_ATTEMPTS]


def check_gradients(
    model: FcnModel,
    samples: np.ndarray,
    target: Target,
    entries: int = 20,
    seed: int = 0,
    step: float = STEP,
    tolerance: float = TOLERANCE,
) -> GradcheckReport:
    """
    Compares analytic gradients against central finite differences.

    :param model: The model to check.
    :param samples: The trial samples, ``l x 76``.
    :param target: The target the loss is computed against.
    :param entries: The number of entries checked per tensor; 0 checks every entry.
    :param seed: The seed for the entry sampling.
    :param step: The finite-difference step.
    :param tolerance: The largest acceptable relative error.
    """
    base = forward(model, samples)
    base_pattern = base.activation_pattern()
    analytic = backward(model, base, target)

    # private copy, perturbed in place
    work = model.with_parameters([t.copy() for t in model.parameters()])
    rng = make_rng(seed, len(samples))

    def loss_and_pattern() -> Tuple[float, np.ndarray]:
        trace = forward(work, samples)
        return data_loss(trace, target), trace.activation_pattern()

    checks: List[TensorCheck] = []
    for (name, tensor), grad in zip(work.named_parameters(), analytic):
        flat = tensor.reshape(-1)
        flat_grad = grad.reshape(-1)
        worst = 0.0
        checked = kinks = 0
        wanted = flat.size if entries <= 0 else min(entries, flat.size)

        for i in _candidate_entries(flat.size, entries, rng):
            if checked >= wanted:
                break

            original = flat[i]
            flat[i] = original + step
            plus, plus_pattern = loss_and_pattern()
            flat[i] = original - step
            minus, minus_pattern = loss_and_pattern()
            flat[i] = original

            if not (
                np.array_equal(plus_pattern, base_pattern)
                and np.array_equal(minus_pattern, base_pattern)
            ):
                kinks += 1
                continue

            numeric = (plus - minus) / (2.0 * step)
            worst = max(worst, relative_error(float(flat_grad[i]), numeric))
            checked += 1

        logger.debug(
            "%s: max rel error %.3e over %d entries (%d kinks)", name, worst, checked, kinks
        )
        checks.append(TensorCheck(name=name, max_rel_error=worst, checked=checked, kinks=kinks))

    return GradcheckReport(head_kind=model.head_kind, checks=tuple(checks), tolerance=tolerance)
