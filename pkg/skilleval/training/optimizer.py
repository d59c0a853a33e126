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
The Adam optimizer with an additive L2 penalty.

.. currentmodule:: skilleval.training.optimizer
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from skilleval.exc import ShapeMismatch
from skilleval.nn.model import FcnModel
from skilleval.nn.network import Gradients
from skilleval.training.config import TrainConfig


@dataclass(frozen=True, eq=False)
class AdamState:
    """
    The moment estimates of every parameter tensor plus the step counter.
    """

    #: First-moment estimates, congruent with the parameters.
    m: Tuple[np.ndarray, ...]

    #: Second-moment estimates, congruent with the parameters; never negative.
    v: Tuple[np.ndarray, ...]

    #: The number of steps taken so far.
    t: int = 0

    @classmethod
    def zeros_like(cls, tensors: Sequence[np.ndarray]) -> "AdamState":
        """
        Makes a fresh state for the given parameter tensors.
        """
        return cls(
            m=tuple(np.zeros_like(p) for p in tensors),
            v=tuple(np.zeros_like(p) for p in tensors),
            t=0,
        )

    @classmethod
    def for_model(cls, model: FcnModel) -> "AdamState":
        return cls.zeros_like(model.parameters())


def adam_update(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> Tuple[Tuple[np.ndarray, ...], AdamState]:
    """
    Applies one Adam step to plain tensors.

    For every parameter ``θ`` with raw gradient ``g``::

        g <- g + λθ
        m <- β1 m + (1 - β1) g
        v <- β2 v + (1 - β2) g²
        θ <- θ - lr (m / (1 - β1^t)) / (sqrt(v / (1 - β2^t)) + ε)

    The step counter is incremented before it is used, so the first step has ``t = 1``.

    :return: A 2-tuple of (new parameters, new state). The inputs are left untouched.
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeMismatch(
            f"Got {len(params)} parameters, {len(grads)} gradients and "
            f"{len(state.m)} moment tensors"
        )

    t = state.t + 1
    lr = config.learning_rate
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t

    new_params, new_m, new_v = [], [], []
    for theta, g, m, v in zip(params, grads, state.m, state.v):
        theta = np.asarray(theta, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if not (theta.shape == g.shape == m.shape == v.shape):
            raise ShapeMismatch(
                f"Parameter {theta.shape}, gradient {g.shape} and moments {m.shape}/{v.shape} "
                f"are not congruent"
            )

        g = g + config.l2_lambda * theta
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2

        new_params.append(theta - lr * m_hat / (np.sqrt(v_hat) + config.epsilon_adam))
        new_m.append(m)
        new_v.append(v)

    return tuple(new_params), AdamState(m=tuple(new_m), v=tuple(new_v), t=t)


def adam_step(
    model: FcnModel, grads: Gradients, state: AdamState, config: TrainConfig
) -> Tuple[FcnModel, AdamState]:
    """
    Applies one Adam step to every parameter of a model.

    :param model: The current model.
    :param grads: The raw (unregularized) gradients of the per-trial loss.
    :param state: The optimizer state.
    :param config: The hyperparameters.
    :return: A 2-tuple of (updated model, updated state).
    """
    params, state = adam_update(model.parameters(), list(grads), state, config)
    return model.with_parameters(params), state
