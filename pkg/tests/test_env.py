import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import box_furnishing, make_room, make_scene
from fallsim.env import (
    ACTIONS,
    MAX_STEPS,
    AgentAction,
    EnvContext,
    EnvError,
    EpisodeState,
    RewardConfig,
    check_success,
    compute_reward,
    read_log,
    replay_log,
    reset,
    run_actions,
    step,
    write_log,
)
from fallsim.world import Pose, cell_of

A = AgentAction


@pytest.fixture(scope="module")
def scene():
    return make_scene(rest_xy=(3.0, 2.0), spawn=((1.0, 2.0), 0.0))


@pytest.fixture(scope="module")
def ctx(scene):
    return EnvContext(scene, 128)


def state_at(scene, ctx, xy, yaw=0.0, pitch=0.0, **kw):
    return EpisodeState(scene, Pose((xy[0], xy[1], 0.0), yaw, pitch), ctx=ctx, **kw)


def test_action_set():
    assert [a.value for a in ACTIONS] == ["MoveForward", "RotateLeft", "RotateRight", "LookUp", "LookDown", "Found"]


def test_reset_deterministic_with_audio(scene, ctx):
    s1, o1 = reset(scene, 32, ctx=ctx)
    s2, o2 = reset(scene, 32, ctx=ctx)
    assert s1 == s2
    assert np.array_equal(o1.depth, o2.depth) and np.array_equal(o1.semantic, o2.semantic)
    assert o1.audio is not None and np.array_equal(o1.audio.samples, o2.audio.samples)
    assert o1.step_index == 0 and o1.pose == scene.agent_spawn


def test_audio_absent_after_step_zero(scene, ctx):
    s, _ = reset(scene, 32, ctx=ctx)
    _, obs, _, _ = step(s, A.RotateLeft)
    assert obs.audio is None and obs.step_index == 1


def test_spawn_in_furniture():
    room = make_room(furnishings=[box_furnishing((0.5, 1.5, 0.0), (1.5, 2.5, 0.8))])
    bad = make_scene(room, spawn=((1.0, 2.0), 0.0))
    with pytest.raises(EnvError):
        reset(bad, 16)


def test_rotate_inverse(scene, ctx):
    s = state_at(scene, ctx, (1.0, 2.0), 90.0, -30.0)
    a, *_ = step(s, A.RotateLeft, render=False)
    b, *_ = step(a, A.RotateRight, render=False)
    assert b.agent == s.agent
    c, *_ = step(s, A.LookUp, render=False)
    d, *_ = step(c, A.LookDown, render=False)
    assert d.agent == s.agent


def test_pitch_and_yaw_wrap(scene, ctx):
    s = state_at(scene, ctx, (1.0, 2.0), 330.0, 60.0)
    a, *_ = step(s, A.RotateLeft, render=False)
    assert a.agent.yaw == 0.0
    b, *_ = step(s, A.LookUp, render=False)
    assert b.agent.pitch == 60.0


def test_move_forward_distance(scene, ctx):
    s = state_at(scene, ctx, (1.0, 2.0), 90.0)
    a, *_ = step(s, A.MoveForward, render=False)
    assert a.agent.xy == pytest.approx((1.0, 2.25))
    assert a.path_traveled == 0.25 and a.collisions == 0


def test_move_into_wall(scene, ctx):
    s = state_at(scene, ctx, (0.15, 2.0), 180.0)
    a, *_ = step(s, A.MoveForward, render=False)
    assert a.agent == s.agent
    assert a.collisions == 1 and a.last_collision and a.path_traveled == 0.0


def test_timeout_at_200(scene, ctx):
    s = state_at(scene, ctx, (1.0, 2.0))
    for _ in range(MAX_STEPS):
        assert not s.done
        s, _, _, done = step(s, A.RotateLeft, render=False)
    assert done and s.outcome.reason == "timeout" and s.step_index == 200
    with pytest.raises(EnvError):
        step(s, A.RotateLeft)


def test_found_success(scene, ctx):
    s = state_at(scene, ctx, (1.5, 2.0), 0.0, -30.0, step_index=49)
    assert math.dist(s.agent.xy, scene.rest_pose.xy) == 1.5
    new, _, r, done = step(s, A.Found, render=False)
    assert done and new.outcome.success
    assert r == pytest.approx(-0.01 + 10.0)


def test_found_too_far(scene, ctx):
    s = state_at(scene, ctx, (0.5, 2.0), 0.0, -30.0)
    new, *_ = step(s, A.Found, render=False)
    assert new.outcome.reason == "too_far"


def test_found_not_visible_in_container():
    walls = [box_furnishing((2.7, 1.7, 0.0), (3.3, 1.75, 1.9)), box_furnishing((2.7, 2.25, 0.0), (3.3, 2.3, 1.9)),
             box_furnishing((2.65, 1.7, 0.0), (2.7, 2.3, 1.9)), box_furnishing((3.3, 1.7, 0.0), (3.35, 2.3, 1.9))]
    sc = make_scene(make_room(furnishings=walls), rest_xy=(3.0, 2.0))
    c = EnvContext(sc, 48)
    s = state_at(sc, c, (2.0, 2.0), 0.0, -30.0)
    assert math.dist(s.agent.xy, sc.rest_pose.xy) == 1.0
    new, *_ = step(s, A.Found, render=False)
    assert new.outcome.reason == "not_visible"


def test_check_success_thresholds(scene, ctx):
    assert not check_success(state_at(scene, ctx, (1.0, 2.0), 0.0, -30.0)).success  # exactly 2 m
    assert check_success(state_at(scene, ctx, (1.01, 2.0), 0.0, -30.0)).success
    assert check_success(state_at(scene, ctx, (1.5, 2.0), 180.0)).reason == "not_visible"
    assert check_success(state_at(scene, ctx, (1.5, 2.0), 0.0, -30.0, step_index=201)).reason == "timeout"


def test_rewards(scene, ctx):
    s = state_at(scene, ctx, (1.0, 2.0))
    assert compute_reward(s, step(s, A.RotateLeft, render=False)[0], A.RotateLeft) == pytest.approx(-0.01)
    assert step(s, A.MoveForward, render=False)[2] == pytest.approx(0.99)
    back = state_at(scene, ctx, (1.0, 2.0), 180.0)
    assert step(back, A.MoveForward, render=False)[2] == pytest.approx(-1.01)
    cfg = RewardConfig(r_closer=2.0, r_step=0.0)
    assert step(s, A.MoveForward, cfg, render=False)[2] == pytest.approx(2.0)


def test_successful_found_reward_includes_closer_term(scene, ctx):
    s = state_at(scene, ctx, (1.5, 2.0), 0.0, -30.0)
    new = replace(s, agent=Pose((1.75, 2.0, 0.0), 0.0, -30.0), step_index=1, done=True,
                  outcome=check_success(replace(s, agent=Pose((1.75, 2.0, 0.0), 0.0, -30.0))))
    assert compute_reward(s, new, A.Found) == pytest.approx(-0.01 + 1.0 + 10.0)


def test_log_round_trip_and_replay(scene, ctx, tmp_path):
    acts = [A.MoveForward, A.RotateLeft, A.MoveForward, A.LookDown, A.RotateRight, A.RotateRight, A.Found]
    final, records = run_actions(scene, acts, ctx)
    p = write_log(records, tmp_path / "log.jsonl")
    assert read_log(p) == records
    assert replay_log(scene, p, ctx)
    records[1]["reward"] += 1
    write_log(records, p)
    assert not replay_log(scene, p, ctx)
    assert final.done


@settings(max_examples=10_000, deadline=None)
@given(actions=st.lists(st.sampled_from([A.MoveForward, A.RotateLeft, A.RotateRight]), max_size=40),
       start=st.sampled_from([(1.0, 2.0), (0.3, 0.3), (3.7, 3.7), (2.0, 0.15)]))
def test_fuzz_pose_stays_free(ctx, actions, start):
    s = state_at(ctx.scene, ctx, start)
    W, D, _ = ctx.scene.room.dims
    for a in actions:
        s, *_ = step(s, a, render=False)
        x, y = s.agent.xy
        assert 0 < x < W and 0 < y < D
        assert not ctx.occ[cell_of(x, y)]
