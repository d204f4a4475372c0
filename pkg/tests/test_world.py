import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import box_furnishing, make_room
from fallsim.world import (
    CATEGORIES,
    FLOOR_MATERIALS,
    LAYOUTS,
    N_CATEGORIES,
    ROOM_TYPES,
    WALL_FLOOR_PAIRS,
    WALL_MATERIALS,
    Box,
    FallZone,
    ObjectSpec,
    Pose,
    WorldError,
    _materials,
    build_room_variant,
    category,
    main_free_region,
    material,
    place_distractors,
    standard_variants,
    static_occupancy,
)

MATERIAL_NAMES = ("plastic_hard", "plastic_soft_foam", "glass", "metal", "ceramic", "stone", "cardboard",
                  "wood_soft", "wood_hard", "wood_medium", "fabric", "leather", "paper", "rubber")


def test_material_table():
    mats = _materials()
    assert tuple(mats) == MATERIAL_NAMES
    for m in mats.values():
        assert 0 < m.absorption <= 1


def test_restitution_defaults():
    assert material("rubber").restitution == 0.8
    assert material("metal").restitution == 0.5
    assert material("glass").restitution == 0.4
    for wood in ("wood_soft", "wood_hard", "wood_medium"):
        assert material(wood).restitution == 0.45
    assert material("fabric").restitution == 0.05
    assert material("paper").restitution == 0.05


def test_category_catalog():
    assert N_CATEGORIES == 30
    ids = [c.id for c in CATEGORIES]
    assert len(set(ids)) == 30
    assert ids[:4] == ["candle", "calculator", "flashlight_battery", "fork"]
    assert [c.index for c in CATEGORIES] == list(range(1, 31))
    for c in CATEGORIES:
        assert all(0 < e < 0.5 for e in c.extent)
        assert c.default_material in MATERIAL_NAMES
    assert category(1).id == "candle"
    assert category("pen").index == ids.index("pen") + 1
    with pytest.raises(WorldError):
        category("sofa")
    with pytest.raises(WorldError):
        category(31)


def test_object_spec_invariants():
    with pytest.raises(WorldError):
        ObjectSpec("fork", "metal", 0.0, 0.5, 0.3, (0.1, 0.01, 0.01))
    with pytest.raises(WorldError):
        ObjectSpec("fork", "metal", 0.1, 1.5, 0.3, (0.1, 0.01, 0.01))
    with pytest.raises(WorldError):
        ObjectSpec("fork", "metal", 0.1, 0.5, -0.1, (0.1, 0.01, 0.01))


def test_pose_ranges():
    with pytest.raises(WorldError):
        Pose((1, 1, 0), 360.0)
    with pytest.raises(WorldError):
        Pose((1, 1, 0), 0.0, 61.0)
    Pose((1, 1, 0), 359.9, -60.0)


def test_build_room_variant_deterministic():
    a = build_room_variant("kitchen", 0, "wood_hard", "ceramic", 7)
    b = build_room_variant("kitchen", 0, "wood_hard", "ceramic", 7)
    assert len(a.fall_zones) == 20
    assert a.id == b.id
    assert a == b
    a.check()


def test_build_room_variant_errors():
    with pytest.raises(WorldError):
        build_room_variant("study", 4, "wood_hard", "ceramic", 0)
    with pytest.raises(WorldError):
        build_room_variant("study", 0, "glass", "ceramic", 0)
    with pytest.raises(WorldError):
        build_room_variant("study", 0, "wood_hard", "metal", 0)
    with pytest.raises(WorldError):
        build_room_variant("garage", 0, "wood_hard", "ceramic", 0)


def test_sixty_four_variants():
    rooms = standard_variants(0)
    assert len(WALL_FLOOR_PAIRS) == 8
    assert len(rooms) == len(ROOM_TYPES) * 4 * 8 == 64
    assert len({r.id for r in rooms}) == 64
    for w, f in WALL_FLOOR_PAIRS:
        assert w in WALL_MATERIALS and f in FLOOR_MATERIALS
    for r in rooms:
        r.check()
        kinds = {z.kind for z in r.fall_zones}
        assert kinds == {"floor", "surface", "container"}


def test_room_dimensions_by_type():
    for r in standard_variants(0):
        W, D, H = r.dims
        lo, hi = (4.0, 6.0) if r.room_type == "kitchen" else (3.0, 5.0)
        assert lo <= W <= hi and lo <= D <= hi
        assert H == 2.7


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), room_type=st.sampled_from(ROOM_TYPES), layout=st.integers(0, 3),
       pair=st.sampled_from(WALL_FLOOR_PAIRS))
def test_generated_variants_are_valid_and_pure(seed, room_type, layout, pair):
    r = build_room_variant(room_type, layout, pair[0], pair[1], seed)
    r.check()
    assert build_room_variant(room_type, layout, pair[0], pair[1], seed) == r
    assert len(LAYOUTS[room_type]) == 4


def _reachable_from_border(free):
    from scipy import ndimage

    labels, _ = ndimage.label(free)
    nx, ny = free.shape
    border = set()
    for i in range(nx):
        for j in (1, ny - 2):
            if free[i, j]:
                border.add(labels[i, j])
    for j in range(ny):
        for i in (1, nx - 2):
            if free[i, j]:
                border.add(labels[i, j])
    return np.isin(labels, list(border)) & free


@pytest.mark.parametrize("room", standard_variants(0)[::7], ids=lambda r: r.id)
def test_floor_zones_reachable(room):
    occ = static_occupancy(room)
    reach = _reachable_from_border(~occ)
    for z in room.fall_zones:
        if z.kind != "floor":
            continue
        lo, hi = z.region.lo, z.region.hi
        cells = reach[int(lo[0] / 0.1):math.ceil(hi[0] / 0.1), int(lo[1] / 0.1):math.ceil(hi[1] / 0.1)]
        assert cells.any(), f"zone {z.id} unreachable"


def test_empty_room_occupancy():
    occ = static_occupancy(make_room())
    assert occ.shape == (40, 40)
    border = np.zeros_like(occ)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    assert np.array_equal(occ, border)


def test_box_occupancy_block():
    room = make_room(furnishings=[box_furnishing((1.5, 1.5, 0.0), (2.5, 2.5, 0.8))])
    occ = static_occupancy(room)
    # analytic oracle: a cell [i, i+1)*0.1 overlaps [1.5, 2.5) iff 15 <= i < 25
    expect = np.zeros((40, 40), dtype=bool)
    expect[15:25, 15:25] = True
    inner = occ[1:-1, 1:-1]
    assert np.array_equal(inner, expect[1:-1, 1:-1])
    assert occ[15:25, 15:25].sum() == 100


def test_overhead_box_leaves_floor_free():
    room = make_room(furnishings=[box_furnishing((1.0, 1.0, 1.9), (2.0, 2.0, 2.2))])
    assert not static_occupancy(room)[1:-1, 1:-1].any()


@pytest.mark.parametrize("dims", [(4.0, 4.0, 2.7), (4.37, 3.05, 2.7), (5.99, 4.01, 2.7)])
def test_grid_dims(dims):
    occ = static_occupancy(make_room(dims))
    assert occ.shape == (math.ceil(dims[0] / 0.1 - 1e-9), math.ceil(dims[1] / 0.1 - 1e-9))
    assert abs(occ.shape[0] * 0.1 - dims[0]) < 0.1
    assert abs(occ.shape[1] * 0.1 - dims[1]) < 0.1


def test_occupancy_rejects_bad_cell():
    with pytest.raises(WorldError):
        static_occupancy(make_room(), cell=0.0)


def test_main_free_region_is_largest_component():
    # a full-height partition at x = 1.0 leaves a small pocket on the left
    occ = static_occupancy(make_room(furnishings=[box_furnishing((1.0, 0.0, 0.0), (1.1, 4.0, 2.0))]))
    free = main_free_region(occ)
    assert not free[:10].any()
    assert free[11:-1, 1:-1].all()


ZONE = FallZone(0, "floor", Box((2.0, 2.0, 0.05), (1.0, 1.0, 0.05)), 0.0)


def test_distractors_count_zero():
    target = ObjectSpec.default("fork")
    assert place_distractors(ZONE, target, 0, 1) == ([], False)
    with pytest.raises(WorldError):
        place_distractors(ZONE, target, -1, 1)


def test_distractors_deterministic_and_valid():
    target = ObjectSpec.default("cup")
    rest = (2.0, 2.0, target.radius)
    a, short = place_distractors(ZONE, target, 3, 11, rest)
    b, _ = place_distractors(ZONE, target, 3, 11, rest)
    assert a == b
    assert len(a) == 3 and not short
    from fallsim.world import object_box

    boxes = [object_box(o, p.position) for o, p in a]
    for i, (o, p) in enumerate(a):
        assert o.category != "cup"
        assert ZONE.region.contains_xy(p.position)
        assert math.dist(p.xy, rest[:2]) >= 0.1
        assert p.position[2] == pytest.approx(o.radius)
        for other in boxes[i + 1:]:
            assert not boxes[i].intersects_xy(other, 0.0)


def test_distractor_size_ratio_exhaustive():
    seen = 0
    for k, c in enumerate(CATEGORIES):
        target = ObjectSpec.default(c.id)
        for s in range(12):
            got, _ = place_distractors(ZONE, target, 3, 1000 * k + s)
            for o, _ in got:
                ratio = max(o.extent) / max(target.extent)
                assert 0.5 <= ratio <= 2.0
                seen += 1
    assert seen >= 1000


def test_distractors_small_zone_reports_short():
    tiny = FallZone(0, "surface", Box((1.0, 1.0, 0.8), (0.06, 0.06, 0.02)), 0.78)
    got, short = place_distractors(tiny, ObjectSpec.default("cup"), 5, 0)
    assert short and len(got) < 5


def test_box_helpers():
    b = Box.from_bounds((0, 0, 0), (2, 4, 6))
    assert b.center == (1, 2, 3) and b.half == (1, 2, 3)
    assert b.contains((2, 4, 6)) and not b.contains((2.1, 0, 0))
    assert b.intersects(Box((2.5, 2, 3), (1, 1, 1)))
    assert not b.intersects(Box((3.0, 2, 3), (1, 1, 1)))
