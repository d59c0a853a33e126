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
The mapping of the kinematic channels onto manipulators and sub-clusters.

Each of the four manipulators (master left/right, slave left/right) owns 19 channels, split into
five sub-clusters: Cartesian position (3), linear velocity (3), rotational velocity (3), rotation
matrix (9) and the gripper variable (1).

.. currentmodule:: skilleval.kinematics.layout
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Sequence, Tuple

from skilleval.exc import InvalidLayout

#: The number of kinematic channels in a trial.
N_CHANNELS = 76

#: Manipulator names, in group order.
GROUP_NAMES: Tuple[str, ...] = ("ML", "MR", "SL", "SR")

#: Sub-cluster names, in sub-cluster order.
SUBCLUSTER_NAMES: Tuple[str, ...] = (
    "cartesian",
    "linear_velocity",
    "rotational_velocity",
    "rotation_matrix",
    "gripper",
)

#: Sub-cluster sizes, in sub-cluster order.
SUBCLUSTER_SIZES: Tuple[int, ...] = (3, 3, 3, 9, 1)

#: The number of channels owned by one manipulator.
GROUP_SIZE = sum(SUBCLUSTER_SIZES)


class ChannelLocation(NamedTuple):
    """
    Where a channel lives in a layout. ``subcluster`` is a 0-based index.
    """

    group: str
    subcluster: int


@dataclass(frozen=True)
class ChannelGroup:
    """
    The channels of one manipulator.
    """

    #: The manipulator name (``ML``, ``MR``, ``SL`` or ``SR``).
    name: str

    #: The channel indices of each of the five sub-clusters.
    subclusters: Tuple[Tuple[int, ...], ...]

    @property
    def channels(self) -> Tuple[int, ...]:
        """
        :return: Every channel index of this group, in sub-cluster order.
        """
        return tuple(c for sub in self.subclusters for c in sub)


@dataclass(frozen=True)
class ChannelLayout:
    """
    An ordered list of the four manipulator groups. Construction validates that the twenty
    sub-clusters partition the 76 channels exactly.
    """

    groups: Tuple[ChannelGroup, ...]

    def __post_init__(self):
        names = tuple(g.name for g in self.groups)
        if names != GROUP_NAMES:
            raise InvalidLayout(f"Groups must be {list(GROUP_NAMES)} in order, got {list(names)}")

        seen: List[int] = []
        for group in self.groups:
            sizes = tuple(len(sub) for sub in group.subclusters)
            if sizes != SUBCLUSTER_SIZES:
                raise InvalidLayout(
                    f"Group {group.name} has sub-cluster sizes {list(sizes)}, "
                    f"expected {list(SUBCLUSTER_SIZES)}"
                )

            seen.extend(group.channels)

        if len(seen) != len(set(seen)):
            raise InvalidLayout("Sub-clusters overlap")

        if set(seen) != set(range(N_CHANNELS)):
            raise InvalidLayout(f"Sub-clusters do not cover channels 0..{N_CHANNELS - 1}")

    @property
    def subclusters(self) -> List[Tuple[int, ...]]:
        """
        :return: All twenty sub-clusters, group-major.
        """
        return [sub for group in self.groups for sub in group.subclusters]

    def cartesian_channels(self) -> Dict[str, Tuple[int, ...]]:
        """
        :return: A mapping of group name -> the channels of its Cartesian position sub-cluster.
        """
        return {group.name: group.subclusters[0] for group in self.groups}

    def locate(self, channel: int) -> ChannelLocation:
        """
        Finds the group and sub-cluster that own a channel.

        :param channel: The channel index, 0..75.
        """
        for group in self.groups:
            for n, sub in enumerate(group.subclusters):
                if channel in sub:
                    return ChannelLocation(group.name, n)

        raise IndexError(f"Channel {channel} is not in the layout")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "groups": [
                {"name": group.name, "subclusters": [list(sub) for sub in group.subclusters]}
                for group in self.groups
            ]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChannelLayout":
        """
        Reads a layout from its JSON form, ``{"groups": [{"name": ..., "subclusters": [...]}]}``.
        Unknown fields are rejected.
        """
        try:
            unknown = set(data) - {"groups"}
            unknown.update(key for g in data["groups"] for key in set(g) - {"name", "subclusters"})
            if unknown:
                raise InvalidLayout(f"Unknown layout fields: {sorted(unknown)}")

            groups = tuple(
                ChannelGroup(
                    name=str(g["name"]),
                    subclusters=tuple(tuple(int(c) for c in sub) for sub in g["subclusters"]),
                )
                for g in data["groups"]
            )
        except InvalidLayout:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidLayout(f"Malformed layout: {e!r}") from e

        return cls(groups)


def layout_from_blocks(blocks: Sequence[int] = (0, 19, 38, 57)) -> ChannelLayout:
    """
    Builds a layout where each group is a consecutive 19-channel block starting at the given
    offsets, with sub-clusters in their canonical order inside the block.
    """
    groups = []
    for name, start in zip(GROUP_NAMES, blocks):
        subs = []
        offset = start
        for size in SUBCLUSTER_SIZES:
            subs.append(tuple(range(offset, offset + size)))
            offset += size

        groups.append(ChannelGroup(name=name, subclusters=tuple(subs)))

    return ChannelLayout(tuple(groups))


def default_channel_layout() -> ChannelLayout:
    """
    :return: The default layout: ML, MR, SL, SR as consecutive 19-channel blocks, each split into
        Cartesian (3), linear velocity (3), rotational velocity (3), rotation matrix (9) and
        gripper (1).
    """
    return layout_from_blocks()
