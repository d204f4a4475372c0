"""Static world model: materials, object catalog, rooms, fall zones, distractors.

All geometry is axis-aligned boxes in a right-handed room frame: x along the
room width, y along its depth, z up, origin at the floor corner.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import ndimage

CELL = 0.1
ROOM_HEIGHT = 2.7
AGENT_HEIGHT = 1.8
OVERLAP_TOL = 0.01
N_FALL_ZONES = 20

ROOM_TYPES = ("kitchen", "study")
FLOOR_MATERIALS = ("wood_soft", "wood_hard", "wood_medium", "stone", "ceramic", "fabric")
WALL_MATERIALS = ("wood_soft", "wood_hard", "wood_medium", "plastic_hard", "stone")

# The eight wall/floor pairings used for the 64 standard variants.
WALL_FLOOR_PAIRS = (
    ("wood_hard", "ceramic"),
    ("wood_medium", "wood_hard"),
    ("plastic_hard", "stone"),
    ("stone", "fabric"),
    ("wood_soft", "wood_medium"),
    ("plastic_hard", "wood_soft"),
    ("wood_hard", "fabric"),
    ("stone", "ceramic"),
)


class WorldError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    id: str
    absorption: float
    density_hint: float
    restitution: float
    friction: float
    soft: bool
    band: tuple[float, float]
    n_modes: int
    tau: tuple[float, float]


@dataclass(frozen=True)
class ObjectCategory:
    id: str
    index: int  # 1-based semantic id
    default_material: str
    extent: tuple[float, float, float]
    mass: float


def _load_json(name):
    return json.loads(resources.files("fallsim.data").joinpath(name).read_text())


@lru_cache(maxsize=None)
def _materials() -> dict[str, Material]:
    raw = _load_json("materials.json")["materials"]
    return {
        k: Material(
            id=k,
            absorption=float(v["absorption"]),
            density_hint=float(v["density"]),
            restitution=float(v["restitution"]),
            friction=float(v["friction"]),
            soft=bool(v["soft"]),
            band=tuple(v["band"]),
            n_modes=int(v["n_modes"]),
            tau=tuple(v["tau"]),
        )
        for k, v in raw.items()
    }


@lru_cache(maxsize=None)
def _categories() -> tuple[ObjectCategory, ...]:
    raw = _load_json("categories.json")["categories"]
    return tuple(
        ObjectCategory(
            id=c["name"],
            index=i + 1,
            default_material=c["material"],
            extent=tuple(float(e) for e in c["extent"]),
            mass=float(c["mass"]),
        )
        for i, c in enumerate(raw)
    )


MATERIALS: dict[str, Material] = _materials()
CATEGORIES: tuple[ObjectCategory, ...] = _categories()
CATEGORY_BY_NAME = {c.id: c for c in CATEGORIES}
N_CATEGORIES = len(CATEGORIES)


def material(name: str) -> Material:
    try:
        return MATERIALS[name]
    except KeyError:
        raise WorldError(f"unknown material {name!r}") from None


def category(name_or_index) -> ObjectCategory:
    if isinstance(name_or_index, (int, np.integer)):
        if not 1 <= name_or_index <= N_CATEGORIES:
            raise WorldError(f"category index out of range: {name_or_index}")
        return CATEGORIES[int(name_or_index) - 1]
    try:
        return CATEGORY_BY_NAME[name_or_index]
    except KeyError:
        raise WorldError(f"unknown category {name_or_index!r}") from None


@dataclass(frozen=True)
class Box:
    center: tuple[float, float, float]
    half: tuple[float, float, float]

    @classmethod
    def from_bounds(cls, lo, hi) -> Box:
        c = tuple((a + b) / 2 for a, b in zip(lo, hi))
        h = tuple((b - a) / 2 for a, b in zip(lo, hi))
        return cls(c, h)

    @property
    def lo(self):
        return tuple(c - h for c, h in zip(self.center, self.half))

    @property
    def hi(self):
        return tuple(c + h for c, h in zip(self.center, self.half))

    def contains(self, p, tol: float = 1e-9) -> bool:
        return all(abs(p[i] - self.center[i]) <= self.half[i] + tol for i in range(3))

    def contains_xy(self, p, tol: float = 1e-9) -> bool:
        return all(abs(p[i] - self.center[i]) <= self.half[i] + tol for i in range(2))

    def overlap(self, other: Box) -> tuple[float, float, float]:
        """Per-axis penetration depth (negative means separated)."""
        return tuple(
            self.half[i] + other.half[i] - abs(self.center[i] - other.center[i]) for i in range(3)
        )

    def intersects(self, other: Box, tol: float = OVERLAP_TOL) -> bool:
        return all(d > tol for d in self.overlap(other))

    def intersects_xy(self, other: Box, tol: float = OVERLAP_TOL) -> bool:
        return all(d > tol for d in self.overlap(other)[:2])


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float]
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.yaw < 360.0:
            raise WorldError(f"yaw out of [0, 360): {self.yaw}")
        if not -60.0 <= self.pitch <= 60.0:
            raise WorldError(f"pitch out of [-60, 60]: {self.pitch}")

    @property
    def xy(self):
        return self.position[0], self.position[1]


@dataclass(frozen=True)
class ObjectSpec:
    category: str
    material: str
    mass: float
    restitution: float
    friction: float
    extent: tuple[float, float, float]

    def __post_init__(self):
        if not self.mass > 0:
            raise WorldError("mass must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise WorldError("restitution must lie in [0, 1]")
        if self.friction < 0:
            raise WorldError("friction must be non-negative")

    @property
    def radius(self) -> float:
        # point-mass contact radius
        return max(self.extent) / 2

    @property
    def category_index(self) -> int:
        return category(self.category).index

    @classmethod
    def default(cls, name: str, mass_scale: float = 1.0) -> ObjectSpec:
        c = category(name)
        m = material(c.default_material)
        return cls(name, m.id, c.mass * mass_scale, m.restitution, m.friction, c.extent)


def object_box(obj: ObjectSpec, position) -> Box:
    """Rendering box of an object whose contact sphere center is at `position`."""
    x, y, z = position
    bottom = z - obj.radius
    return Box((x, y, bottom + obj.extent[2]), obj.extent)


@dataclass(frozen=True)
class Furnishing:
    label: str
    box: Box
    is_surface: bool = False
    is_container: bool = False
    material: str = "wood_medium"
    wall: float = 0.02  # container wall/bottom thickness

    def parts(self) -> list[Box]:
        """Solid boxes; a container is an open-topped shell."""
        if not self.is_container:
            return [self.box]
        (x0, y0, z0), (x1, y1, z1) = self.box.lo, self.box.hi
        t = self.wall
        return [
            Box.from_bounds((x0, y0, z0), (x1, y1, z0 + t)),
            Box.from_bounds((x0, y0, z0 + t), (x0 + t, y1, z1)),
            Box.from_bounds((x1 - t, y0, z0 + t), (x1, y1, z1)),
            Box.from_bounds((x0 + t, y0, z0 + t), (x1 - t, y0 + t, z1)),
            Box.from_bounds((x0 + t, y1 - t, z0 + t), (x1 - t, y1, z1)),
        ]


@dataclass(frozen=True)
class FallZone:
    id: int
    kind: str  # floor | surface | container
    region: Box
    support_height: float
    container: int | None = None  # furnishing index

    def __post_init__(self):
        if self.support_height < 0:
            raise WorldError("support_height must be >= 0")


@dataclass(frozen=True)
class RoomVariant:
    room_type: str
    dims: tuple[float, float, float]
    wall_material: str
    floor_material: str
    layout_id: int
    seed: int
    furnishings: tuple[Furnishing, ...]
    fall_zones: tuple[FallZone, ...]
    id: str

    @property
    def bounds(self) -> Box:
        return Box.from_bounds((0.0, 0.0, 0.0), self.dims)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return grid_shape(self.dims[0], self.dims[1])

    @property
    def diagonal(self) -> float:
        return math.hypot(*self.dims)

    def check(self) -> None:
        if not all(d > 0 for d in self.dims):
            raise WorldError("room dims must be positive")
        if len(self.fall_zones) != N_FALL_ZONES:
            raise WorldError(f"expected {N_FALL_ZONES} fall zones, got {len(self.fall_zones)}")
        room = self.bounds
        for f in self.furnishings:
            if not all(h > 0 for h in f.box.half):
                raise WorldError(f"{f.label}: non-positive half extent")
            if not (room.contains(f.box.lo) and room.contains(f.box.hi)):
                raise WorldError(f"{f.label} outside room")
        for i, a in enumerate(self.furnishings):
            for b in self.furnishings[i + 1:]:
                if a.box.intersects(b.box):
                    raise WorldError(f"{a.label} overlaps {b.label}")
        for z in self.fall_zones:
            if not (room.contains(z.region.lo) and room.contains(z.region.hi)):
                raise WorldError(f"fall zone {z.id} outside room")


def grid_shape(width: float, depth: float, cell: float = CELL) -> tuple[int, int]:
    return math.ceil(width / cell - 1e-9), math.ceil(depth / cell - 1e-9)


# -- room generation --------------------------------------------------------

# (length along wall, depth, height, is_surface, is_container, material)
FURNITURE = {
    "counter": (1.6, 0.6, 0.9, True, False, "wood_hard"),
    "stove": (0.6, 0.6, 0.9, True, False, "metal"),
    "fridge": (0.7, 0.7, 1.9, False, False, "metal"),
    "tall_cabinet": (0.6, 0.5, 2.0, False, False, "wood_medium"),
    "table": (1.0, 0.8, 0.75, True, False, "wood_medium"),
    "island": (1.2, 0.7, 0.9, True, False, "wood_hard"),
    "bin": (0.36, 0.36, 0.45, False, True, "plastic_hard"),
    "basket": (0.46, 0.36, 0.3, False, True, "wood_soft"),
    "pan": (0.3, 0.3, 0.08, False, True, "metal"),
    "desk": (1.2, 0.6, 0.75, True, False, "wood_medium"),
    "bookshelf": (0.9, 0.35, 1.9, False, False, "wood_medium"),
    "sofa": (1.6, 0.8, 0.8, True, False, "fabric"),
    "armchair": (0.8, 0.8, 0.8, True, False, "fabric"),
    "side_table": (0.5, 0.5, 0.55, True, False, "wood_hard"),
    "cabinet": (0.8, 0.45, 1.0, True, False, "wood_hard"),
    "storage_box": (0.4, 0.3, 0.3, False, True, "cardboard"),
}

# Semantic ids for non-object surfaces; object categories use 1..30.
SEMANTIC_FLOOR = 100
SEMANTIC_WALL = 101
SEMANTIC_CEILING = 102
FURNITURE_IDS = {name: 110 + i for i, name in enumerate(FURNITURE)}

# Anchors: ("wall", side, t) | ("offwall", side, t, gap) | ("float", fx, fy) | ("on", index)
LAYOUTS = {
    "kitchen": (
        [("counter", ("wall", "S", 0.35)), ("stove", ("wall", "S", 0.8)), ("pan", ("on", 1)),
         ("fridge", ("wall", "W", 0.8)), ("tall_cabinet", ("wall", "E", 0.3)),
         ("table", ("float", 0.55, 0.55)), ("bin", ("wall", "N", 0.3)), ("basket", ("wall", "E", 0.75))],
        [("counter", ("wall", "N", 0.5)), ("stove", ("wall", "W", 0.3)), ("pan", ("on", 1)),
         ("fridge", ("wall", "E", 0.2)), ("island", ("float", 0.5, 0.45)), ("bin", ("wall", "S", 0.8)),
         ("basket", ("wall", "W", 0.75)), ("tall_cabinet", ("wall", "S", 0.25))],
        [("counter", ("wall", "W", 0.45)), ("stove", ("wall", "N", 0.7)), ("pan", ("on", 1)),
         ("fridge", ("wall", "S", 0.15)), ("tall_cabinet", ("wall", "N", 0.3)),
         ("table", ("float", 0.6, 0.42)), ("basket", ("wall", "S", 0.7)), ("bin", ("wall", "E", 0.6))],
        [("counter", ("wall", "E", 0.6)), ("stove", ("wall", "S", 0.4)), ("pan", ("on", 1)),
         ("tall_cabinet", ("wall", "W", 0.2)), ("fridge", ("wall", "N", 0.85)),
         ("island", ("float", 0.45, 0.58)), ("bin", ("wall", "W", 0.75)), ("basket", ("wall", "N", 0.3))],
    ),
    "study": (
        [("desk", ("wall", "N", 0.5)), ("bookshelf", ("wall", "W", 0.5)),
         ("sofa", ("offwall", "S", 0.5, 0.5)), ("side_table", ("wall", "E", 0.8)),
         ("storage_box", ("wall", "E", 0.25)), ("basket", ("wall", "N", 0.12))],
        [("desk", ("wall", "E", 0.5)), ("bookshelf", ("wall", "N", 0.3)),
         ("sofa", ("offwall", "W", 0.55, 0.5)), ("cabinet", ("wall", "S", 0.75)),
         ("storage_box", ("wall", "S", 0.3)), ("basket", ("wall", "N", 0.85))],
        [("desk", ("wall", "S", 0.3)), ("bookshelf", ("wall", "E", 0.6)),
         ("sofa", ("offwall", "N", 0.5, 0.5)), ("side_table", ("wall", "W", 0.2)),
         ("storage_box", ("wall", "W", 0.8)), ("basket", ("wall", "S", 0.8))],
        [("desk", ("wall", "W", 0.7)), ("bookshelf", ("wall", "S", 0.7)),
         ("sofa", ("offwall", "E", 0.4, 0.5)), ("cabinet", ("wall", "N", 0.4)),
         ("storage_box", ("wall", "N", 0.85)), ("basket", ("wall", "S", 0.2)),
         ("armchair", ("float", 0.4, 0.45))],
    ),
}


def room_dims(room_type: str, seed: int) -> tuple[float, float, float]:
    # Footprint ranges are placeholder choices, not measured from any real room set.
    lo, hi = (4.0, 6.0) if room_type == "kitchen" else (3.0, 5.0)
    rng = np.random.default_rng([seed, ROOM_TYPES.index(room_type), 17])
    w, d = rng.uniform(lo, hi, size=2)
    return round(float(w), 1), round(float(d), 1), ROOM_HEIGHT


def _place(kind, anchor, dims, placed, rng) -> Box | None:
    length, depth, height, *_ = FURNITURE[kind]
    W, D, _ = dims
    if anchor[0] == "on":
        base = placed[anchor[1]]
        if base is None:
            return None
        (bx, by, _), top = base.center, base.hi[2]
        return Box((bx, by, top + height / 2), (length / 2, depth / 2, height / 2))
    if anchor[0] == "float":
        length *= rng.uniform(0.9, 1.1)
        cx = anchor[1] * W + rng.uniform(-0.1, 0.1)
        cy = anchor[2] * D + rng.uniform(-0.1, 0.1)
        return Box((cx, cy, height / 2), (length / 2, depth / 2, height / 2))
    side, t = anchor[1], anchor[2] + rng.uniform(-0.05, 0.05)
    gap = anchor[3] if anchor[0] == "offwall" else 0.0
    if kind == "counter":
        length *= rng.uniform(0.9, 1.2)
    along = W if side in "SN" else D
    length = min(length, along - 0.2)
    c = min(max(t * along, length / 2), along - length / 2)
    off = gap + depth / 2
    if side == "S":
        return Box((c, off, height / 2), (length / 2, depth / 2, height / 2))
    if side == "N":
        return Box((c, D - off, height / 2), (length / 2, depth / 2, height / 2))
    if side == "W":
        return Box((off, c, height / 2), (depth / 2, length / 2, height / 2))
    return Box((W - off, c, height / 2), (depth / 2, length / 2, height / 2))


def main_free_region(occ: np.ndarray) -> np.ndarray:
    """Largest 4-connected component of free cells."""
    labels, n = ndimage.label(~occ)
    if n == 0:
        return np.zeros_like(occ)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def build_room_variant(room_type: str, layout_id: int, wall_material: str,
                       floor_material: str, seed: int) -> RoomVariant:
    if room_type not in ROOM_TYPES:
        raise WorldError(f"unknown room type {room_type!r}")
    if layout_id not in range(4):
        raise WorldError(f"layout_id must be in 0..3, got {layout_id}")
    if wall_material not in WALL_MATERIALS:
        raise WorldError(f"{wall_material!r} is not a wall material")
    if floor_material not in FLOOR_MATERIALS:
        raise WorldError(f"{floor_material!r} is not a floor material")

    dims = room_dims(room_type, seed)
    rng = np.random.default_rng([seed, ROOM_TYPES.index(room_type), layout_id, 29])
    room = Box.from_bounds((0, 0, 0), dims)
    placed: list[Box | None] = []
    for kind, anchor in LAYOUTS[room_type][layout_id]:
        box = _place(kind, anchor, dims, placed, rng)
        if box is not None:
            ok = room.contains(box.lo) and room.contains(box.hi)
            ok = ok and not any(p is not None and box.intersects(p) for p in placed)
            box = box if ok else None
        placed.append(box)

    kinds = [k for k, _ in LAYOUTS[room_type][layout_id]]
    furnishings = _furnishings(kinds, placed)
    occ = _occupancy(dims, [f.box for f in furnishings])
    zones = _fall_zones(dims, furnishings, main_free_region(occ), rng)
    vid = f"{room_type}-s{seed}-l{layout_id}-{wall_material}-{floor_material}"
    variant = RoomVariant(room_type, dims, wall_material, floor_material, layout_id, seed,
                          tuple(furnishings), tuple(zones), vid)
    variant.check()
    return variant


def _furnishings(kinds, placed) -> list[Furnishing]:
    out = []
    for kind, box in zip(kinds, placed):
        if box is None:
            continue
        _, _, _, surf, cont, mat = FURNITURE[kind]
        out.append(Furnishing(kind, box, surf, cont, mat))
    return out


def _reachable(box: Box, main: np.ndarray, margin: float) -> bool:
    nx, ny = main.shape
    xs = _cell_range(box.lo[0] - margin, box.hi[0] + margin, CELL, nx)
    ys = _cell_range(box.lo[1] - margin, box.hi[1] + margin, CELL, ny)
    return bool(main[xs.start:xs.stop, ys.start:ys.stop].any())


def _fall_zones(dims, furnishings: list[Furnishing], main: np.ndarray, rng) -> list[FallZone]:
    W, D, _ = dims
    fixed, floor = [], []
    for i, f in enumerate(furnishings):
        if not _reachable(f.box, main, CELL):
            continue
        (x0, y0, z0), (x1, y1, z1) = f.box.lo, f.box.hi
        if f.is_container:
            t = f.wall
            region = Box.from_bounds((x0 + t, y0 + t, z0 + t), (x1 - t, y1 - t, z1))
            fixed.append(("container", region, z0 + t, i))
        elif f.is_surface:
            m = 0.05
            region = Box.from_bounds((x0 + m, y0 + m, z1), (x1 - m, y1 - m, z1 + 0.5))
            # surfaces carrying a container keep their free part only
            if not any(g.box.intersects_xy(region, 0.0) and g.box.lo[2] >= z1 - 1e-9
                       for g in furnishings if g is not f):
                fixed.append(("surface", region, z1, None))
        if z0 > 1e-9:
            continue
        depth = 0.5
        for lo, hi in (
            ((x0, y0 - depth), (x1, y0)),
            ((x0, y1), (x1, y1 + depth)),
            ((x0 - depth, y0), (x0, y1)),
            ((x1, y0), (x1 + depth, y1)),
        ):
            lo = (max(lo[0], 0.1), max(lo[1], 0.1), 0.0)
            hi = (min(hi[0], W - 0.1), min(hi[1], D - 0.1), 0.5)
            if hi[0] - lo[0] < 0.25 or hi[1] - lo[1] < 0.25:
                continue
            region = Box.from_bounds(lo, hi)
            if any(g.box.intersects_xy(region) for g in furnishings if g.box.lo[2] < 0.5):
                continue
            if not _reachable(region, main, 0.0):
                continue
            floor.append(("floor", region, 0.0, None))

    order = rng.permutation(len(floor))
    floor = [floor[k] for k in order]
    chosen = fixed[:N_FALL_ZONES] + floor[: max(0, N_FALL_ZONES - len(fixed))]
    while len(chosen) < N_FALL_ZONES:
        # split the largest floor strip along its long axis
        floors = [c for c in chosen if c[0] == "floor"]
        if not floors:
            raise WorldError("room has no floor zones to subdivide")
        big = max(floors, key=lambda c: c[1].half[0] * c[1].half[1])
        chosen.remove(big)
        lo, hi = big[1].lo, big[1].hi
        ax = 0 if big[1].half[0] >= big[1].half[1] else 1
        mid = (lo[ax] + hi[ax]) / 2
        hi_a = list(hi)
        hi_a[ax] = mid
        lo_b = list(lo)
        lo_b[ax] = mid
        chosen += [("floor", Box.from_bounds(lo, hi_a), 0.0, None),
                   ("floor", Box.from_bounds(lo_b, hi), 0.0, None)]
    return [FallZone(k, kind, region, sh, cont) for k, (kind, region, sh, cont) in enumerate(chosen)]


def standard_variants(seed: int = 0) -> list[RoomVariant]:
    """The 64 standard variants: 2 room types x 4 layouts x 8 wall/floor pairs."""
    return [
        build_room_variant(rt, layout, wall, floor, seed)
        for rt in ROOM_TYPES
        for layout in range(4)
        for wall, floor in WALL_FLOOR_PAIRS
    ]


# -- occupancy ---------------------------------------------------------------

def _cell_range(lo: float, hi: float, cell: float, n: int) -> range:
    a = max(0, math.floor(lo / cell + 1e-9))
    b = min(n, math.ceil(hi / cell - 1e-9))
    return range(a, b)


def _occupancy(dims, boxes, cell: float = CELL, agent_height: float = AGENT_HEIGHT) -> np.ndarray:
    nx, ny = grid_shape(dims[0], dims[1], cell)
    occ = np.zeros((nx, ny), dtype=bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    for b in boxes:
        if b.lo[2] >= agent_height or b.hi[2] <= 0:
            continue
        xs = _cell_range(b.lo[0], b.hi[0], cell, nx)
        ys = _cell_range(b.lo[1], b.hi[1], cell, ny)
        if len(xs) and len(ys):
            occ[xs.start:xs.stop, ys.start:ys.stop] = True
    return occ


def static_occupancy(room: RoomVariant, cell: float = CELL) -> np.ndarray:
    """Boolean grid indexed [ix, iy]; True where a wall or furnishing blocks the column."""
    if cell <= 0:
        raise WorldError("cell must be positive")
    return _occupancy(room.dims, [f.box for f in room.furnishings], cell)


def cell_of(x: float, y: float, cell: float = CELL) -> tuple[int, int]:
    return int(math.floor(x / cell)), int(math.floor(y / cell))


def cell_center(ix: int, iy: int, cell: float = CELL) -> tuple[float, float]:
    return (ix + 0.5) * cell, (iy + 0.5) * cell


def zone_access_cells(room: RoomVariant, zone: FallZone, occ: np.ndarray | None = None):
    """Free cells touching the zone footprint (or its container) within one cell."""
    occ = static_occupancy(room) if occ is None else occ
    box = room.furnishings[zone.container].box if zone.container is not None else zone.region
    nx, ny = occ.shape
    xs = _cell_range(box.lo[0] - CELL, box.hi[0] + CELL, CELL, nx)
    ys = _cell_range(box.lo[1] - CELL, box.hi[1] + CELL, CELL, ny)
    return [(i, j) for i in xs for j in ys if not occ[i, j]]


# -- distractors ---------------------------------------------------------------

def place_distractors(zone: FallZone, target: ObjectSpec, count: int, seed: int,
                      rest_position=None, max_tries: int = 200):
    """Scatter `count` similar-sized objects of other categories over `zone`.

    Returns ``(placements, short)`` where ``short`` is set when the zone could
    not hold all requested objects.
    """
    if count < 0:
        raise WorldError("count must be >= 0")
    if count == 0:
        return [], False
    rng = np.random.default_rng([seed, zone.id, 3])
    tsize = max(target.extent)
    pool = [c for c in CATEGORIES if c.id != target.category and 0.5 <= max(c.extent) / tsize <= 2.0]
    rng.shuffle(pool)
    occupied = []
    if rest_position is not None:
        occupied.append(object_box(target, rest_position))
    placements = []
    region = zone.region
    for cat in pool:
        if len(placements) == count:
            break
        obj = ObjectSpec.default(cat.id, float(rng.uniform(0.8, 1.2)))
        ex, ey = obj.extent[0], obj.extent[1]
        if ex * 2 > region.half[0] * 2 or ey * 2 > region.half[1] * 2:
            continue
        for _ in range(max_tries // max(1, len(pool))):
            x = rng.uniform(region.lo[0] + ex, region.hi[0] - ex)
            y = rng.uniform(region.lo[1] + ey, region.hi[1] - ey)
            pos = (float(x), float(y), zone.support_height + obj.radius)
            box = object_box(obj, pos)
            if rest_position is not None and math.dist(pos[:2], rest_position[:2]) < 0.1:
                continue
            if any(box.intersects_xy(o, 0.0) for o in occupied):
                continue
            occupied.append(box)
            placements.append((obj, Pose(pos, float(rng.integers(0, 360)), 0.0)))
            break
    return placements, len(placements) < count
