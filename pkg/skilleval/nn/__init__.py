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
The grouped fully convolutional network, written directly against numpy.

.. currentmodule:: skilleval.nn

.. autosummary::
    :toctree: nn

    layers
    model
    network
    gradcheck
"""
from skilleval.nn.gradcheck import GradcheckReport, TensorCheck, check_gradients, random_setup
from skilleval.nn.layers import (
    EPS_LOG,
    KERNEL_SIZE,
    Conv1dParams,
    conv1d_backward,
    conv1d_forward,
    gap,
    glorot_uniform_init,
    relu,
    softmax,
)
from skilleval.nn.model import (
    FcnModel,
    HeadKind,
    build_model,
    expected_parameter_count,
    init_model,
    parameter_shapes,
)
from skilleval.nn.network import (
    ForwardTrace,
    Gradients,
    backward,
    cross_entropy_loss,
    data_loss,
    forward,
    mse_loss,
)
