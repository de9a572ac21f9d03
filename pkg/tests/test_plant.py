import numpy as np
import pytest

from qddhand import config as C
from qddhand.motor import SimulationDiverged
from qddhand.plant import HandPose, ObjectBody, StaticBox, World, WorldConfig, detect_contacts
from qddhand.scenarios.base import cartesian
from qddhand.transmission import inverse_kinematics

FAR = HandPose(np.array([0.0, 1.0]), 0.0)
# fingers bent a little, clear of each other and the palm
PARKED = (0.3, 0.5)


def bare_world(gravity=(0.0, 0.0), objects=(), statics=(), **cfg):
    w = World(config=WorldConfig(gravity=gravity, **cfg), objects=objects, statics=statics, hand_pose=FAR)
    for f in range(2):
        w.set_joint_state(f, PARKED)
    return w


def table():
    return StaticBox("table", -0.2, -0.1, 0.2, 0.0, material="wood")


def test_no_torque_no_gravity_no_contact_is_static():
    w = bare_world()
    th0 = w.th.copy()
    for _ in range(200):
        w.step()
    assert np.array_equal(w.th, th0)
    assert np.array_equal(w.thd, np.zeros((2, 2)))


def test_constant_joint_torque_accelerates_that_joint():
    w = bare_world()
    tau = np.zeros((2, 2))
    tau[0, 0] = 1e-3
    for _ in range(50):
        w.step(tau)
    assert w.thd[0, 0] > 0
    assert np.all(w.thd[1] == 0)


def test_separated_bodies_have_no_contacts():
    disc = ObjectBody("disc", "disc", 0.05, 0.02, pos=(0.0, 0.5))
    w = bare_world(objects=[disc], statics=[table()])
    w.step()
    assert w.contacts() == []
    assert not w.in_contact("disc", "table")


def test_resting_penetration_gives_spring_force():
    depth = 1e-4
    disc = ObjectBody("disc", "disc", 0.05, 0.02, pos=(0.0, 0.02 - depth))
    w = bare_world(objects=[disc], statics=[table()])
    (c,) = detect_contacts(w)
    assert c.depth == pytest.approx(depth, rel=1e-9)
    assert c.normal_force == pytest.approx(2e4 * depth, rel=1e-9)


def test_ball_on_table_carries_its_weight():
    m = 0.05
    disc = ObjectBody("ball", "disc", m, 0.02, pos=(0.0, 0.02))
    w = bare_world(gravity=(0.0, -9.81), objects=[disc], statics=[table()])
    for _ in range(20_000):
        w.step()
    fn = sum(c.normal_force for c in w.contact_between("ball", "table"))
    assert fn == pytest.approx(m * 9.81, rel=0.01)


def test_energy_never_increases_while_settling():
    disc = ObjectBody("ball", "disc", 0.05, 0.02, pos=(0.0, 0.03))
    w = bare_world(gravity=(0.0, -9.81), objects=[disc], statics=[table()])
    energies = [w.energy()]
    for _ in range(20_000):
        w.step()
        energies.append(w.energy())
    assert np.max(np.diff(energies)) <= 1e-6


def test_zero_wrench_leaves_trajectory_bitwise_unchanged():
    def run(with_wrench):
        disc = ObjectBody("ball", "disc", 0.05, 0.02, pos=(0.0, 0.03))
        w = bare_world(gravity=(0.0, -9.81), objects=[disc], statics=[table()])
        if with_wrench:
            w.apply_external_wrench("ball", (0.0, 0.0, 0.0), 0.05)
        for _ in range(2000):
            w.step()
        return w.opos.copy(), w.ovel.copy()

    a, b = run(False), run(True)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_wrench_moves_object():
    disc = ObjectBody("ball", "disc", 0.05, 0.02, pos=(0.0, 0.3))
    w = bare_world(objects=[disc])
    w.apply_external_wrench("ball", (0.5, 0.0), 0.01)
    for _ in range(400):
        w.step()
    assert w.ovel[0, 0] == pytest.approx(0.5 * 0.01 / 0.05, rel=1e-6)


def test_wrench_on_missing_object_is_an_error():
    w = bare_world(objects=[ObjectBody("ball", "disc", 0.05, 0.02, pos=(0.0, 0.3))])
    with pytest.raises((KeyError, IndexError, ValueError)):
        w.apply_external_wrench("nope", (1.0, 0.0), 0.1)


def test_bad_wrench_shape_rejected():
    w = bare_world(objects=[ObjectBody("ball", "disc", 0.05, 0.02, pos=(0.0, 0.3))])
    with pytest.raises(ValueError):
        w.apply_external_wrench("ball", (1.0, 0.0, 0.0, 0.0), 0.1)


def test_invalid_objects_rejected():
    with pytest.raises(ValueError):
        ObjectBody("x", "triangle", 0.1, 0.01)
    with pytest.raises(ValueError):
        ObjectBody("x", "disc", 0.0, 0.01)
    with pytest.raises(ValueError):
        StaticBox("b", 0.0, 0.0, 0.0, 1.0)


def test_non_finite_state_raises_divergence():
    w = bare_world()
    w.th[0, 0] = np.nan
    with pytest.raises(SimulationDiverged):
        w.step()


def test_identical_worlds_are_bit_identical():
    def run():
        disc = ObjectBody("ball", "disc", 0.05, 0.02, pos=(0.01, 0.03), omega=3.0)
        w = bare_world(gravity=(0.0, -9.81), objects=[disc], statics=[table()])
        for _ in range(3000):
            w.step(np.full((2, 2), 1e-4))
        return np.concatenate([w.th.ravel(), w.thd.ravel(), w.opos.ravel(), w.ovel.ravel()])

    assert np.array_equal(run(), run())


def test_hand_pose_round_trip():
    pose = HandPose(np.array([0.05, -0.02]), np.pi / 2)
    p = np.array([0.01, 0.03])
    np.testing.assert_allclose(pose.to_hand(pose.to_world(p)), p, atol=1e-15)
    # rotated a quarter turn, hand +x points along world +y
    np.testing.assert_allclose(pose.to_world([0.01, 0.0]), [0.05, -0.01], atol=1e-15)


def _pinch_sim():
    cfg = C.load_config(overrides=["world.gravity=[0.0, 0.0]", "motor.current_noise=0.0", "palm.enabled=false"])
    R, h = 0.025, 0.07
    disc = ObjectBody("disc", "disc", 0.03, R, pos=(0.0, h))
    world = C.build_world(cfg, objects=[disc])
    sim = C.build_sim(cfg, world, seed=0)
    gap = R + world.fingers[0].radius
    for f, side in enumerate((-1.0, 1.0)):
        sim.set_finger_pose(f, inverse_kinematics(np.array([side * gap, h]), world.fingers[f]))
        sim.controllers[f].set_gains(cartesian(300.0, (side * (gap - 0.005), h), 4.0))
    return sim


def test_symmetric_pinch_gives_mirrored_contact_forces():
    sim = _pinch_sim()
    sim.run(0.2)
    w = sim.world
    left = w.contact_between("finger0", "disc")
    right = w.contact_between("finger1", "disc")
    assert left and right
    fl = sum(c.normal_force * c.normal for c in left)
    fr = sum(c.normal_force * c.normal for c in right)
    assert abs(fl[0] + fr[0]) < 1e-9 and abs(fl[1] - fr[1]) < 1e-9
    assert abs(w.opos[0, 0]) < 1e-9


def test_probe_is_zero_without_contact():
    w = bare_world()
    w.step()
    assert np.array_equal(w.fingertip_wrench(0), [0.0, 0.0])


def test_action_equals_reaction_at_a_wall():
    from qddhand.calibration import REFERENCE_POSE
    from qddhand.transmission import forward_kinematics

    cfg = C.load_config(overrides=["world.gravity=[0.0, 0.0]"])
    g = C.fingers_from(cfg)[0]
    tip = forward_kinematics(REFERENCE_POSE, g)
    wall = StaticBox("wall", tip[0] + g.radius - 1e-4, tip[1] - 0.03, tip[0] + 0.05, tip[1] + 0.03)
    w = C.build_world(cfg, statics=[wall])
    w.set_joint_state(0, REFERENCE_POSE)
    w.set_joint_state(1, (0.0, 0.0))
    w.step()
    assert np.linalg.norm(w.reaction) > 0
    np.testing.assert_array_equal(w.reaction, -w.fingertip_wrench(0, frame="world"))
