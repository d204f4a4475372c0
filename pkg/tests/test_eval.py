import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import box_furnishing, make_room, make_scene
from fallsim.audio import room_acoustics
from fallsim.env import MAX_STEPS, episode_audio
from fallsim.eval import (
    ABLATION_ROWS,
    COLORS,
    AgentSpec,
    EpisodeResult,
    EvalError,
    format_table,
    make_report,
    read_ppm,
    run_benchmark,
    run_episode,
    sna,
    spl,
    success_rate,
    trajectory_image,
    visualize_trajectory,
)
from fallsim.perception import audio_goal
from fallsim.policy import OracleFlags
from fallsim.world import static_occupancy


def R(s, l, p, n_star, n, **kw):
    return EpisodeResult("e", s, l, p, n_star, n, None if s else "too_far", **kw)


def test_single_episode_hand_values():
    assert spl([R(1, 3.0, 3.0, 10, 10)]) == 1.0
    assert spl([R(0, 3.0, 3.0, 10, 10)]) == 0.0
    assert spl([R(1, 4.0, 8.0, 10, 10)]) == 0.5
    assert sna([R(1, 3.0, 3.0, 10, 10)]) == 1.0
    assert sna([R(1, 3.0, 3.0, 50, 100)]) == 0.5
    assert sna([R(1, 3.0, 3.0, 50, 40)]) == 1.0


def test_ten_episode_fixture():
    results = [R(1, 4, 8, 20, 40), R(1, 3, 3, 15, 15), R(1, 2, 1.5, 10, 8), R(1, 5, 10, 30, 60),
               R(1, 2, 8, 10, 40), R(1, 6, 7.5, 24, 48)] + [R(0, 3, 2, 12, 200)] * 4
    assert success_rate(results) == pytest.approx(0.6)
    # (0.5 + 1 + 1 + 0.5 + 0.25 + 0.8) / 10
    assert spl(results) == pytest.approx(0.405)
    # (0.5 + 1 + 1 + 0.5 + 0.25 + 0.5) / 10
    assert sna(results) == pytest.approx(0.375)


def test_empty_and_invalid():
    for f in (success_rate, spl, sna):
        with pytest.raises(EvalError):
            f([])
    with pytest.raises(EvalError):
        spl([R(1, 0.0, 1.0, 1, 1)])
    with pytest.raises(EvalError):
        EpisodeResult("e", 1, 1.0, 1.0, 1, 1, "too_far")
    with pytest.raises(EvalError):
        R(0, 1.0, -1.0, 1, 1)
    with pytest.raises(EvalError):
        R(0, 1.0, 1.0, 1, MAX_STEPS + 1)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.floats(0.1, 20), st.floats(0, 60), st.integers(1, 200),
                          st.integers(1, 200)), min_size=1, max_size=30))
def test_metric_invariants(rows):
    results = [R(*r) for r in rows]
    sr = success_rate(results)
    assert 0 <= spl(results) <= sr + 1e-12
    assert 0 <= sna(results) <= sr + 1e-12
    assert sr <= 1


def test_report_fingerprint_and_breakdown():
    res = [R(1, 4, 8, 20, 40, category="fork", room_id="a"), R(0, 3, 3, 15, 15, category="pen", room_id="a")]
    a, b = make_report("modular", "test", res), make_report("modular", "test", res)
    assert a.fingerprint == b.fingerprint and len(a.fingerprint) == 16
    assert make_report("modular", "test", res[:1]).fingerprint != a.fingerprint
    assert a.per_category["fork"]["success_rate"] == 1.0 and a.per_room["a"]["n"] == 2
    assert a.summary()["episodes"] == 2


def test_agent_spec_parse():
    assert AgentSpec.parse("modular+seg", ["object"]).flags == OracleFlags(True, True, False)
    assert AgentSpec.parse("modular", ["seg", "object", "location"]).label == "modular+seg+object+location"
    assert AgentSpec.parse("random").label == "random"
    with pytest.raises(EvalError):
        AgentSpec.parse("ppo")
    with pytest.raises(EvalError):
        AgentSpec.parse("random", ["seg"])


def test_benchmark_reproducible(small_dataset, tmp_path):
    a = run_benchmark("modular", small_dataset, None, episodes=2, log_dir=tmp_path)
    b = run_benchmark("modular", small_dataset, None, episodes=2)
    assert a.fingerprint == b.fingerprint and a.results == b.results
    assert len(list(tmp_path.glob("modular_*.log"))) == 2
    r = run_benchmark("random", small_dataset, None, episodes=2, seed=4)
    assert r.fingerprint == run_benchmark("random", small_dataset, None, episodes=2, seed=4).fingerprint
    assert 0 <= a.sna <= a.success_rate and 0 <= a.spl <= a.success_rate


def test_benchmark_missing_asset(small_dataset):
    broken = {**small_dataset, "episodes": [{**small_dataset["episodes"][0], "scene": "scenes/nope.scene"}]}
    with pytest.raises(EvalError):
        run_benchmark("modular", broken, None)


def test_ablation_row_order():
    names = [n for n, *_ in ABLATION_ROWS]
    assert names == ["Random", "Modular Planning", "Modular Planning (GT seg.)", "Modular Planning (GT object)",
                     "Modular Planning (GT seg.+ object)", "Modular Planning (GT seg.+ object + location)"]
    rep = make_report("x", "test", [R(1, 4, 8, 20, 40)])
    table = format_table([(n, rep) for n in names])
    lines = table.splitlines()
    assert len(lines) == 7 and lines[0].split()[-3:] == ["Success", "SPL", "SNA"]
    assert lines[1].startswith("Random") and "0.500" in lines[1]


# -- visualization -----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def pen_run():
    sofa = box_furnishing((2.3, 1.0, 0.0), (2.7, 3.0, 0.9), label="sofa")
    scene = make_scene(make_room(furnishings=[sofa]), "pen", rest_xy=(3.2, 2.0), spawn=((0.7, 2.0), 0.0))
    clip = episode_audio(scene)
    goal = audio_goal(clip, scene.agent_spawn, room_acoustics(scene.room))
    result, records, _ = run_episode(scene, clip, AgentSpec("modular", OracleFlags(True, True)), goal)
    return scene, records, goal, result


def test_image_dims(pen_run, tmp_path):
    scene, records, goal, _ = pen_run
    for scale in (1, 3, 4):
        img = trajectory_image(scene, records, goal.position, scale)
        nx, ny = static_occupancy(scene.room).shape
        assert img.shape == (ny * scale, nx * scale, 3)
    p = visualize_trajectory(scene, records, tmp_path / "t.ppm", goal.position, 3)
    assert np.array_equal(read_ppm(p), trajectory_image(scene, records, goal.position, 3))


def test_path_pixels_in_free_cells(pen_run):
    scene, records, goal, result = pen_run
    scale = 4
    img = trajectory_image(scene, records, None, scale)
    color = COLORS["success" if result.success else "fail"]
    occ = static_occupancy(scene.room)
    ny = occ.shape[1]
    vs, us = np.nonzero(np.all(img == color, axis=2))
    assert len(vs) > 0
    for v, u in zip(vs, us):
        assert not occ[u // scale, ny - 1 - v // scale]


def test_landmark_order(pen_run):
    scene, records, goal, result = pen_run
    assert result.success == 1
    pts = [scene.agent_spawn.xy] + [tuple(r["pose"][:2]) for r in records]

    def closest(xy):
        return int(np.argmin([math.dist(p, xy) for p in pts]))

    assert closest(scene.agent_spawn.xy) == 0
    assert 0 < closest(goal.position) <= closest(scene.rest_pose.xy)


def test_corrupt_log(pen_run):
    scene, *_ = pen_run
    with pytest.raises(EvalError):
        trajectory_image(scene, [{"step": 1}])
