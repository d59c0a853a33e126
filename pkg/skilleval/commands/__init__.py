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
The ``skilleval`` command line.

.. currentmodule:: skilleval.commands

.. autosummary::
    :toctree: commands

    manager
    context
    decorators
    builtin

    exc
    converters
"""
from skilleval.commands.context import Context
from skilleval.commands.decorators import command, option
from skilleval.commands.manager import CommandsManager, main
