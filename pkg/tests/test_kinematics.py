import math

import numpy as np
import pytest

from robosetup import kinematics as kin
from robosetup.errors import KinematicsError
from robosetup.geometry import Pose, quat_angle
from robosetup.kinematics import (
    IkParams,
    RobotState,
    default_projection,
    default_state,
    forward_kinematics,
    jacobian,
    project,
    sample_random_state,
    solve_ik,
    space_extent,
)
from robosetup.robot_model import parse_urdf

import oracles

SINGLE_REVOLUTE = """
<robot name="one">
  <link name="base"/><link name="arm"/><link name="tip"/>
  <joint name="q" type="revolute">
    <parent link="base"/><child link="arm"/><axis xyz="0 0 1"/>
    <limit lower="-3" upper="3"/>
  </joint>
  <joint name="t" type="fixed">
    <origin xyz="1 0 0"/><parent link="arm"/><child link="tip"/>
  </joint>
</robot>
"""

SINGLE_PRISMATIC = """
<robot name="slider">
  <link name="base"/><link name="cart"/>
  <joint name="q" type="prismatic">
    <parent link="base"/><child link="cart"/><axis xyz="1 0 0"/>
    <limit lower="0" upper="2"/>
  </joint>
</robot>
"""


def _random_state(model, rng):
    positions = {}
    for jn in model.active_joints:
        lim = model.joint(jn).limits
        positions[jn] = rng.uniform(lim.lower, lim.upper)
    return RobotState(positions)


def test_fk_two_link_zero_configuration(planar_arm):
    poses = forward_kinematics(planar_arm, RobotState({"j1": 0.0, "j2": 0.0}))
    assert np.allclose(poses["tip"].translation, [2.0, 0.0, 0.0], atol=1e-12)


def test_fk_two_link_quarter_turn(planar_arm):
    poses = forward_kinematics(planar_arm, RobotState({"j1": math.pi / 2, "j2": 0.0}))
    assert np.max(np.abs(poses["tip"].translation - np.array([0.0, 2.0, 0.0]))) <= 1e-12


def test_fk_matches_matrix_oracle_on_sample_arm(sample_arm):
    rng = np.random.default_rng(101)
    for _ in range(50):
        state = _random_state(sample_arm, rng)
        poses = forward_kinematics(sample_arm, state)
        mats = oracles.fk_matrices(sample_arm, state.positions)
        for link, pose in poses.items():
            assert np.max(np.abs(pose.to_matrix() - mats[link])) <= 1e-9


def test_fk_child_equals_parent_composed_with_joint_transform(sample_arm):
    rng = np.random.default_rng(7)
    state = _random_state(sample_arm, rng)
    poses = forward_kinematics(sample_arm, state)
    for joint in sample_arm.joints:
        expected = (
            poses[joint.parent_link]
            .compose(joint.origin)
            .compose(kin.joint_motion(joint, state))
        )
        got = poses[joint.child_link]
        assert np.max(np.abs(got.translation - expected.translation)) < 1e-12
        assert (
            min(
                np.max(np.abs(got.rotation - expected.rotation)),
                np.max(np.abs(got.rotation + expected.rotation)),
            )
            < 1e-12
        )


def test_fk_missing_joint_value(planar_arm):
    with pytest.raises(KinematicsError, match="j2"):
        forward_kinematics(planar_arm, RobotState({"j1": 0.0}))


def test_fk_reports_out_of_limit_value(planar_arm):
    with pytest.raises(KinematicsError, match="outside limits"):
        forward_kinematics(planar_arm, RobotState({"j1": 3.5, "j2": 0.0}))


def test_fk_root_pose_offset(planar_arm):
    root = Pose((0.0, 0.0, 5.0))
    poses = forward_kinematics(planar_arm, RobotState({"j1": 0.0, "j2": 0.0}), root_pose=root)
    assert np.allclose(poses["tip"].translation, [2.0, 0.0, 5.0])


def test_jacobian_single_revolute_textbook():
    model = parse_urdf(SINGLE_REVOLUTE)
    group = kin.group_from_joints(model, "g", ["q"], is_chain=True, tip_link="tip")
    jac = jacobian(model, group, RobotState({"q": 0.0}), "tip")
    assert np.allclose(jac[:, 0], [0, 1, 0, 0, 0, 1], atol=1e-12)


def test_jacobian_single_prismatic():
    model = parse_urdf(SINGLE_PRISMATIC)
    group = kin.group_from_joints(model, "g", ["q"], is_chain=True, tip_link="cart")
    jac = jacobian(model, group, RobotState({"q": 0.5}), "cart")
    assert np.allclose(jac[:, 0], [1, 0, 0, 0, 0, 0], atol=1e-12)


def test_jacobian_matches_finite_differences(sample_arm, arm_group):
    rng = np.random.default_rng(11)
    for _ in range(25):
        state = _random_state(sample_arm, rng)
        jac = jacobian(sample_arm, arm_group, state, "tool_link")
        fd = oracles.fd_jacobian(
            sample_arm,
            arm_group,
            state,
            "tool_link",
            lambda m, s: forward_kinematics(m, s, check_limits=False),
        )
        assert np.max(np.abs(jac - fd)) <= 1e-5


def test_jacobian_tip_not_in_chain(sample_arm):
    group = kin.group_from_joints(sample_arm, "wrist", ["j5", "j6"])
    with pytest.raises(KinematicsError, match="base_link"):
        jacobian(sample_arm, group, default_state(sample_arm), "base_link")


def test_jacobian_planar_and_floating_match_finite_differences():
    doc = """
    <robot name="mobile">
      <link name="world"/><link name="cart"/><link name="body"/>
      <joint name="slide" type="planar">
        <parent link="world"/><child link="cart"/><axis xyz="0 0 1"/>
      </joint>
      <joint name="free" type="floating">
        <origin xyz="0.1 0 0.2"/><parent link="cart"/><child link="body"/>
      </joint>
    </robot>
    """
    model = parse_urdf(doc)
    ws = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    group = kin.group_from_joints(model, "g", ["slide", "free"], workspace=ws)
    rng = np.random.default_rng(3)
    for _ in range(10):
        state = sample_random_state(model, group, rng)
        jac = jacobian(model, group, state, "body")
        fd = oracles.fd_jacobian(
            model,
            group,
            state,
            "body",
            lambda m, s: forward_kinematics(m, s, check_limits=False),
        )
        assert np.max(np.abs(jac - fd)) <= 1e-5


def test_planar_joint_fk_hand_case():
    doc = """
    <robot name="slider2">
      <link name="world"/><link name="cart"/>
      <joint name="p" type="planar">
        <parent link="world"/><child link="cart"/><axis xyz="0 0 1"/>
      </joint>
    </robot>
    """
    model = parse_urdf(doc)
    state = RobotState({"p/x": 0.3, "p/y": 0.2, "p/theta": math.pi / 2})
    pose = forward_kinematics(model, state)["cart"]
    assert np.allclose(pose.translation, [0.3, 0.2, 0.0], atol=1e-12)
    assert abs(pose.rpy()[2] - math.pi / 2) < 1e-12


def test_ik_round_trip(sample_arm, arm_group):
    rng = np.random.default_rng(21)
    params = IkParams(rng_seed=7)
    state = _random_state(sample_arm, rng)
    target = forward_kinematics(sample_arm, state)["tool_link"]
    solution = solve_ik(sample_arm, arm_group, target, default_state(sample_arm), params)
    assert solution is not None
    reached = forward_kinematics(sample_arm, solution)["tool_link"]
    assert np.linalg.norm(reached.translation - target.translation) <= params.position_tolerance
    assert quat_angle(reached.rotation, target.rotation) <= params.orientation_tolerance
    for dof in arm_group.dofs:
        assert dof.lower - 1e-12 <= solution[dof.name] <= dof.upper + 1e-12


def test_ik_unreachable_target_fails(sample_arm, arm_group):
    target = Pose((100.0, 0.0, 0.0))
    params = IkParams(max_iterations=50, restarts=2, rng_seed=3)
    assert solve_ik(sample_arm, arm_group, target, default_state(sample_arm), params) is None


def test_ik_rejects_non_chain_group(sample_arm):
    group = kin.group_from_joints(sample_arm, "notchain", ["j1", "j2"])
    with pytest.raises(KinematicsError, match="chain"):
        solve_ik(sample_arm, group, Pose(), default_state(sample_arm))


def test_sampling_respects_bounds(sample_arm, arm_group):
    rng = np.random.default_rng(5)
    for _ in range(200):
        state = sample_random_state(sample_arm, arm_group, rng)
        for dof in arm_group.dofs:
            assert dof.lower <= state[dof.name] <= dof.upper


def test_sampling_continuous_joint_interval():
    doc = """
    <robot name="spin">
      <link name="a"/><link name="b"/>
      <joint name="q" type="continuous">
        <parent link="a"/><child link="b"/><axis xyz="0 0 1"/>
      </joint>
    </robot>
    """
    model = parse_urdf(doc)
    group = kin.whole_robot_group(model)
    rng = np.random.default_rng(17)
    values = [sample_random_state(model, group, rng)["q"] for _ in range(500)]
    assert all(-math.pi < v <= math.pi for v in values)


def test_sampling_empirical_mean():
    doc = SINGLE_PRISMATIC.replace('lower="0" upper="2"', 'lower="0" upper="1"')
    model = parse_urdf(doc)
    group = kin.whole_robot_group(model)
    values = [
        sample_random_state(model, group, np.random.default_rng([99, i]))["q"]
        for i in range(10_000)
    ]
    assert abs(np.mean(values) - 0.5) < 0.02


def test_sampling_unbounded_joint_errors():
    doc = """
    <robot name="free">
      <link name="a"/><link name="b"/>
      <joint name="f" type="floating"><parent link="a"/><child link="b"/></joint>
    </robot>
    """
    model = parse_urdf(doc)
    group = kin.whole_robot_group(model)
    with pytest.raises(KinematicsError, match="unbounded"):
        sample_random_state(model, group, np.random.default_rng(0))


def test_sampling_deterministic_for_equal_seeds(sample_arm, arm_group):
    a = sample_random_state(sample_arm, arm_group, np.random.default_rng([4, 2]))
    b = sample_random_state(sample_arm, arm_group, np.random.default_rng([4, 2]))
    assert a.positions == b.positions


def test_space_extent_single_joint():
    dof = kin.Dof("q", "q", -1.0, 1.0)
    group = kin.JointGroup("g", ("q",), (), (dof,))
    assert space_extent(group) == pytest.approx(2.0)


def test_space_extent_box_diagonal():
    dofs = (kin.Dof("a", "a", 0.0, 2.0), kin.Dof("b", "b", -1.0, 1.0))
    group = kin.JointGroup("g", ("a", "b"), (), dofs)
    assert space_extent(group) == pytest.approx(2.0 * math.sqrt(2.0))


def test_space_extent_scaling_homogeneity():
    for s in (0.5, 3.0):
        dofs = tuple(
            kin.Dof(n, n, -s * r / 2, s * r / 2) for n, r in (("a", 1.0), ("b", 2.0), ("c", 0.4))
        )
        base = tuple(kin.Dof(n, n, -r / 2, r / 2) for n, r in (("a", 1.0), ("b", 2.0), ("c", 0.4)))
        assert space_extent(kin.JointGroup("g", (), (), dofs)) == pytest.approx(
            s * space_extent(kin.JointGroup("g", (), (), base))
        )


def test_space_extent_reorder_invariant_and_monotone():
    dofs = [kin.Dof("a", "a", 0.0, 1.0), kin.Dof("b", "b", 0.0, 2.0), kin.Dof("c", "c", 0.0, 0.5)]
    forward = space_extent(kin.JointGroup("g", (), (), tuple(dofs)))
    backward = space_extent(kin.JointGroup("g", (), (), tuple(reversed(dofs))))
    assert forward == pytest.approx(backward)
    wider = dofs.copy()
    wider[1] = kin.Dof("b", "b", 0.0, 3.0)
    assert space_extent(kin.JointGroup("g", (), (), tuple(wider))) > forward


def test_space_extent_continuous_counts_full_circle():
    dof = kin.Dof("q", "q", -math.pi, math.pi, wraps=True)
    group = kin.JointGroup("g", ("q",), (), (dof,))
    assert space_extent(group) == pytest.approx(2 * math.pi)


def test_default_projection_six_joint_chain(sample_arm, arm_group):
    spec = default_projection(sample_arm, arm_group)
    assert spec.dof_names == ("j1", "j2")  # the joints closest to the base
    assert spec.weights == (1.0, 1.0)


def test_default_projection_single_joint():
    model = parse_urdf(SINGLE_REVOLUTE)
    group = kin.group_from_joints(model, "g", ["q"])
    spec = default_projection(model, group)
    assert spec.dof_names == ("q",)


def test_project_returns_exact_values(planar_arm, planar_group):
    spec = default_projection(planar_arm, planar_group)
    state = RobotState({"j1": 0.25, "j2": -1.5})
    assert project(state, spec) == (0.25, -1.5)


def test_state_json_round_trip():
    state = RobotState({"j1": 0.123456789012345, "j2": -2.5})
    again = RobotState.from_json(state.to_json())
    assert again.positions == state.positions
