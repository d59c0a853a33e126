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
Training hyperparameters.

.. currentmodule:: skilleval.training.config
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict

from skilleval.exc import InvalidConfig


@dataclass(frozen=True)
class TrainConfig:
    """
    The hyperparameters of one training run. The defaults are the published configuration.

    Use :func:`dataclasses.replace` (or :meth:`replace`) to derive a modified config.
    """

    #: The Adam step size.
    learning_rate: float = 0.001

    #: The Adam first-moment decay.
    beta1: float = 0.9

    #: The Adam second-moment decay.
    beta2: float = 0.999

    #: The Adam denominator offset.
    epsilon_adam: float = 1e-8

    #: The L2 coefficient; ``λθ`` is added to every raw gradient.
    l2_lambda: float = 1e-5

    #: The epoch budget.
    max_epochs: int = 1000

    #: The share of the training trials held out for checkpoint selection. With 0, the
    #: training split itself is used for selection.
    validation_fraction: float = 0.1

    #: The master seed of the run.
    seed: int = 0

    #: If the inputs are z-standardized with statistics from the training split.
    standardize: bool = True

    #: If training stops after ``patience`` epochs without a validation improvement.
    early_stop: bool = False

    #: See :attr:`early_stop`.
    patience: int = 100

    #: If the validation split is stratified by label.
    stratify: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidConfig(f"learning_rate must be positive, got {self.learning_rate}")

        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise InvalidConfig(f"{name} must lie in [0, 1), got {value}")

        if not self.epsilon_adam > 0:
            raise InvalidConfig(f"epsilon_adam must be positive, got {self.epsilon_adam}")

        if not self.l2_lambda >= 0:
            raise InvalidConfig(f"l2_lambda must be non-negative, got {self.l2_lambda}")

        if int(self.max_epochs) < 1:
            raise InvalidConfig(f"max_epochs must be at least 1, got {self.max_epochs}")

        if not 0 <= self.validation_fraction < 1:
            raise InvalidConfig(
                f"validation_fraction must lie in [0, 1), got {self.validation_fraction}"
            )

        if int(self.patience) < 1:
            raise InvalidConfig(f"patience must be at least 1, got {self.patience}")

    def replace(self, **changes: Any) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)
