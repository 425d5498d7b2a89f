import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robosetup import kinematics as kin
from robosetup.robot_model import parse_urdf_file
from robosetup.srdf import PlanningGroup, SemanticModel

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture(scope="session")
def planar_arm():
    return parse_urdf_file(FIXTURES / "planar_arm.urdf")


@pytest.fixture(scope="session")
def sample_arm():
    return parse_urdf_file(FIXTURES / "sample_arm.urdf")


@pytest.fixture(scope="session")
def three_link_toy():
    return parse_urdf_file(FIXTURES / "three_link_toy.urdf")


@pytest.fixture(scope="session")
def two_link_toy():
    return parse_urdf_file(FIXTURES / "two_link_toy.urdf")


@pytest.fixture(scope="session")
def overlap_bot():
    return parse_urdf_file(FIXTURES / "overlap_bot.urdf")


@pytest.fixture(scope="session")
def mesh_bot():
    return parse_urdf_file(FIXTURES / "mesh_bot.urdf")


@pytest.fixture
def planar_semantic(planar_arm):
    semantic = SemanticModel(robot_name=planar_arm.name)
    semantic.groups.append(PlanningGroup("arm", chains=(("base_link", "tip"),)))
    return semantic


@pytest.fixture
def arm_semantic(sample_arm):
    semantic = SemanticModel(robot_name=sample_arm.name)
    semantic.groups.append(PlanningGroup("arm", chains=(("base_link", "tool_link"),)))
    return semantic


@pytest.fixture
def planar_group(planar_arm):
    return kin.group_from_joints(
        planar_arm,
        "arm",
        ["j1", "j2"],
        links=["base_link", "link1", "link2", "tip"],
        is_chain=True,
        base_link="base_link",
        tip_link="tip",
    )


@pytest.fixture
def arm_group(sample_arm):
    return kin.group_from_joints(
        sample_arm,
        "arm",
        list(sample_arm.active_joints),
        links=[l.name for l in sample_arm.links],
        is_chain=True,
        base_link="base_link",
        tip_link="tool_link",
    )
