"""Procedural ski slope: arc-chain centerline, noisy heightmap, props.

Track geometry lives in the horizontal XZ plane. Heading 0 points downhill
(-z); positive headings turn toward +x (the skier's right). A heading h
moves along direction (sin h, -cos h) and has right-normal (cos h, sin h).
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InvalidInput, OutOfTerrain, UnknownLevel
from .rng import SplitMix64, lattice_uniform

Vec2 = tuple[float, float]

# Heading band the generated centerline stays inside (rad from downhill).
MAX_TRACK_HEADING = math.radians(78.0)
MIN_ARC_SWEEP = 0.12
EDGE_PROP_SPACING = 6.0
NOISE_SUBDIV = 4  # heightmap cells per noise-lattice cell


def heading_dir(heading: float) -> np.ndarray:
    return np.array([math.sin(heading), -math.cos(heading)])


def heading_right(heading: float) -> np.ndarray:
    return np.array([math.cos(heading), math.sin(heading)])


@dataclass(frozen=True)
class LevelParams:
    seed: int
    curve_radius_range: tuple[float, float]
    num_curves: int
    base_slope: float
    noise_amplitude: float
    noise_cell_size: float
    corridor_half_width: float
    cube_spacing: float
    track_length: float

    def __post_init__(self):
        rmin, rmax = self.curve_radius_range
        if not (0.0 < rmin <= rmax):
            raise InvalidInput(f"bad curve radius range {self.curve_radius_range}")
        if not (0.0 < self.base_slope < math.pi / 2):
            raise InvalidInput(f"base slope {self.base_slope} outside (0, pi/2)")
        if self.noise_amplitude < 0.0:
            raise InvalidInput("noise amplitude must be >= 0")
        if self.noise_cell_size <= 0.0:
            raise InvalidInput("noise cell size must be > 0")
        if self.corridor_half_width <= 0.0:
            raise InvalidInput("corridor half width must be > 0")
        if self.cube_spacing <= 0.0:
            raise InvalidInput("cube spacing must be > 0")
        if self.track_length <= 0.0:
            raise InvalidInput("track length must be > 0")
        if self.num_curves < 1:
            raise InvalidInput("need at least one curve")
        if not (0 <= self.seed < (1 << 64)):
            raise InvalidInput("seed must fit in 64 unsigned bits")


_PRESETS: dict[int, dict] = {
    1: dict(curve_radius_range=(18.0, 25.0), num_curves=4, base_slope=math.radians(8.0),
            noise_amplitude=0.2, noise_cell_size=8.0, corridor_half_width=6.0,
            cube_spacing=15.0, track_length=150.0),
    2: dict(curve_radius_range=(12.0, 17.0), num_curves=7, base_slope=math.radians(11.0),
            noise_amplitude=0.45, noise_cell_size=7.0, corridor_half_width=5.0,
            cube_spacing=15.0, track_length=210.0),
    3: dict(curve_radius_range=(7.0, 11.0), num_curves=12, base_slope=math.radians(14.0),
            noise_amplitude=0.8, noise_cell_size=6.0, corridor_half_width=4.0,
            cube_spacing=15.0, track_length=260.0),
}


def difficulty_preset(level: int, seed: int = 0) -> LevelParams:
    """Built-in difficulty presets 1..3.

    Across levels the sampled curve radii shrink, the base slope steepens
    and the noise amplitude grows; the curve count never decreases.
    """
    if level not in _PRESETS:
        raise UnknownLevel(f"no preset for level {level!r} (choose 1, 2 or 3)")
    return LevelParams(seed=seed, **_PRESETS[level])


@dataclass(frozen=True)
class Arc:
    """Circular centerline segment: p(phi) = center + radius*(cos, sin)."""

    center: Vec2
    radius: float
    start_angle: float
    sweep: float  # signed; sign +1 turns right (heading increases)

    def __post_init__(self):
        if self.radius <= 0.0 or self.sweep == 0.0:
            raise InvalidInput("arc needs positive radius and nonzero sweep")

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def turn(self) -> float:
        return 1.0 if self.sweep > 0 else -1.0

    def angle_at(self, u: float) -> float:
        return self.start_angle + self.sweep * (u / self.length)

    def point_at_len(self, u: float) -> np.ndarray:
        phi = self.angle_at(u)
        return np.array([self.center[0] + self.radius * math.cos(phi),
                         self.center[1] + self.radius * math.sin(phi)])

    def heading_at_len(self, u: float) -> float:
        phi = self.angle_at(u)
        return phi - math.pi if self.sweep > 0 else phi

    @property
    def curvature(self) -> float:
        """Signed curvature; positive bends the heading rightward."""
        return self.turn / self.radius


def _make_arc(p0: np.ndarray, heading: float, radius: float, sweep: float) -> Arc:
    turn = 1.0 if sweep > 0 else -1.0
    center = p0 + turn * radius * np.array([math.cos(heading), math.sin(heading)])
    start_angle = heading + math.pi if sweep > 0 else heading
    return Arc(center=(float(center[0]), float(center[1])), radius=float(radius),
               start_angle=float(start_angle), sweep=float(sweep))


TANGENT_TOL = 1e-6


@dataclass(frozen=True)
class Track:
    arcs: tuple[Arc, ...]
    start: Vec2
    goal_arc_length: float

    def __post_init__(self):
        if not self.arcs:
            raise InvalidInput("track needs at least one arc")
        p = np.asarray(self.start, float)
        heading = self.arcs[0].heading_at_len(0.0)
        for arc in self.arcs:
            gap = np.linalg.norm(arc.point_at_len(0.0) - p)
            hgap = abs(_wrap(arc.heading_at_len(0.0) - heading))
            if gap > TANGENT_TOL or hgap > TANGENT_TOL:
                raise InvalidInput(f"arc junction discontinuity (pos {gap}, heading {hgap})")
            p = arc.point_at_len(arc.length)
            heading = arc.heading_at_len(arc.length)
        object.__setattr__(self, "_cum", self._cumulative())

    def _cumulative(self) -> np.ndarray:
        cum = np.zeros(len(self.arcs) + 1)
        for i, a in enumerate(self.arcs):
            cum[i + 1] = cum[i] + a.length
        return cum

    @property
    def total_length(self) -> float:
        return float(self._cum[-1])

    def _locate(self, s: float) -> tuple[int, float]:
        s = min(max(s, 0.0), self.total_length)
        i = int(np.searchsorted(self._cum, s, side="right")) - 1
        i = min(max(i, 0), len(self.arcs) - 1)
        return i, s - float(self._cum[i])

    def point_at(self, s: float) -> np.ndarray:
        i, u = self._locate(s)
        return self.arcs[i].point_at_len(u)

    def heading_at(self, s: float) -> float:
        i, u = self._locate(s)
        return self.arcs[i].heading_at_len(u)

    def curvature_at(self, s: float) -> float:
        i, _ = self._locate(s)
        return self.arcs[i].curvature

    def project(self, x: float, z: float, hint: float | None = None):
        """Nearest centerline point to (x, z).

        Returns (s, lateral, heading, point): arc-length coordinate, signed
        lateral offset (positive to the skier's right of the centerline),
        the centerline heading there and the centerline point itself. With a
        hint (the previous arc-length position) only arcs within +/- 25 m of
        it are searched, which is what the per-step simulation uses.
        """
        cum = self._cum
        if hint is None:
            indices = range(len(self.arcs))
            hint_s = 0.0
        else:
            hint_s = hint
            indices = [i for i in range(len(self.arcs))
                       if cum[i] <= hint + 25.0 and cum[i + 1] >= hint - 25.0]
            if not indices:
                indices = range(len(self.arcs))
        best = None
        best_key = None
        for i in indices:
            arc = self.arcs[i]
            wx = x - arc.center[0]
            wz = z - arc.center[1]
            d = math.hypot(wx, wz)
            cands = []
            if d > 1e-12:
                phi = math.atan2(wz, wx)
                u_ang = (arc.turn * (phi - arc.start_angle)) % (2.0 * math.pi)
                if u_ang <= abs(arc.sweep):
                    u = u_ang * arc.radius
                    lat = arc.turn * (arc.radius - d)
                    cands.append((abs(lat), u, lat))
            for u in (0.0, arc.length):
                pt = arc.point_at_len(u)
                heading = arc.heading_at_len(u)
                rx = x - float(pt[0])
                rz = z - float(pt[1])
                lat = rx * math.cos(heading) + rz * math.sin(heading)
                cands.append((math.hypot(rx, rz), u, lat))
            for dist, u, lat in cands:
                s = float(cum[i]) + u
                key = (round(dist, 9), abs(s - hint_s))
                if best_key is None or key < best_key:
                    best_key = key
                    best = (s, lat)
        s, lat = best
        return s, lat, self.heading_at(s), self.point_at(s)

    def sample_points(self, step: float = 0.5) -> np.ndarray:
        n = max(2, int(math.ceil(self.total_length / step)) + 1)
        ss = np.linspace(0.0, self.total_length, n)
        return np.array([self.point_at(s) for s in ss])


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def generate_track(params: LevelParams) -> Track:
    """Chain of tangent-continuous arcs with alternating turn direction.

    Radii are drawn uniformly from the configured range; sweeps distribute
    the requested track length across the arcs while the cumulative heading
    stays inside the downhill band. If the requested length is unreachable
    within the band (degenerate parameter choices), extra alternating arcs
    are appended until it is.
    """
    rng = SplitMix64(params.seed, "track")
    rmin, rmax = params.curve_radius_range
    radii = [rng.uniform(rmin, rmax) for _ in range(params.num_curves)]
    direction = float(rng.sign())

    arcs: list[Arc] = []
    p = np.array([0.0, 0.0])
    heading = 0.0
    remaining = params.track_length

    def push(radius: float, sweep_mag: float):
        nonlocal p, heading, remaining, direction
        arc = _make_arc(p, heading, radius, direction * sweep_mag)
        arcs.append(arc)
        p = arc.point_at_len(arc.length)
        heading += direction * sweep_mag
        remaining -= arc.length
        direction = -direction

    for i, r in enumerate(radii):
        cap = MAX_TRACK_HEADING - direction * heading
        want = remaining / sum(radii[i:]) if remaining > 0.0 else MIN_ARC_SWEEP
        push(r, min(max(want, MIN_ARC_SWEEP), cap))
    while remaining > 1e-9 and len(arcs) < params.num_curves + 64:
        r = rng.uniform(rmin, rmax)
        cap = MAX_TRACK_HEADING - direction * heading
        push(r, min(max(remaining / r, MIN_ARC_SWEEP), cap))

    track = Track(arcs=tuple(arcs), start=(0.0, 0.0), goal_arc_length=0.0)
    return replace(track, goal_arc_length=track.total_length)


@dataclass(frozen=True, eq=False)
class Heightmap:
    """Row-major height grid; rows advance along +z, columns along +x."""

    origin_xz: Vec2
    cell_size: float
    rows: int
    cols: int
    heights: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Heightmap):
            return NotImplemented
        return (self.origin_xz == other.origin_xz
                and self.cell_size == other.cell_size
                and self.rows == other.rows and self.cols == other.cols
                and np.array_equal(self.heights, other.heights))

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise InvalidInput("heightmap needs at least a 2x2 grid")
        h = np.asarray(self.heights, float).reshape(self.rows, self.cols)
        if not np.all(np.isfinite(h)):
            raise InvalidInput("heightmap contains non-finite heights")
        object.__setattr__(self, "heights", h)

    @property
    def max_x(self) -> float:
        return self.origin_xz[0] + (self.cols - 1) * self.cell_size

    @property
    def max_z(self) -> float:
        return self.origin_xz[1] + (self.rows - 1) * self.cell_size

    def contains(self, x: float, z: float) -> bool:
        return (self.origin_xz[0] <= x <= self.max_x
                and self.origin_xz[1] <= z <= self.max_z)

    def _cell(self, x: float, z: float):
        if not self.contains(x, z):
            raise OutOfTerrain(f"({x:.2f}, {z:.2f}) outside terrain grid")
        fx = (x - self.origin_xz[0]) / self.cell_size
        fz = (z - self.origin_xz[1]) / self.cell_size
        j = min(int(math.floor(fx)), self.cols - 2)
        i = min(int(math.floor(fz)), self.rows - 2)
        return i, j, fx - j, fz - i

    def sample(self, x: float, z: float) -> float:
        i, j, u, v = self._cell(x, z)
        h = self.heights
        return float((1 - v) * ((1 - u) * h[i, j] + u * h[i, j + 1])
                     + v * ((1 - u) * h[i + 1, j] + u * h[i + 1, j + 1]))

    def gradient(self, x: float, z: float) -> tuple[float, float]:
        i, j, u, v = self._cell(x, z)
        h = self.heights
        dhx = ((1 - v) * (h[i, j + 1] - h[i, j]) + v * (h[i + 1, j + 1] - h[i + 1, j]))
        dhz = ((1 - u) * (h[i + 1, j] - h[i, j]) + u * (h[i + 1, j + 1] - h[i, j + 1]))
        return dhx / self.cell_size, dhz / self.cell_size


def sample_height(hm: Heightmap, x: float, z: float) -> float:
    """Bilinear terrain height at (x, z); exact at grid nodes."""
    return hm.sample(x, z)


def base_height(track: Track, params: LevelParams, z: float) -> float:
    """Linearly descending base terrain: drops with downhill distance."""
    return -math.tan(params.base_slope) * (track.start[1] - z)


def noise_height(params: LevelParams, x: float, z: float) -> float:
    """Bilinear interpolation of the seeded noise lattice at (x, z)."""
    if params.noise_amplitude == 0.0:
        return 0.0
    cn = params.noise_cell_size
    i0 = math.floor(x / cn)
    j0 = math.floor(z / cn)
    u = x / cn - i0
    v = z / cn - j0
    a = params.noise_amplitude

    def val(i, j):
        return a * lattice_uniform(params.seed, "noise", i, j)

    return ((1 - v) * ((1 - u) * val(i0, j0) + u * val(i0 + 1, j0))
            + v * ((1 - u) * val(i0, j0 + 1) + u * val(i0 + 1, j0 + 1)))


def generate_heightmap(track: Track, params: LevelParams) -> Heightmap:
    """Grid covering the track bounding box plus a 2x corridor margin.

    Grid pitch is noise_cell_size / 4 and grid lines are anchored at integer
    multiples of the pitch, so every noise-lattice line coincides with a
    grid line and bilinear resampling reproduces base+noise exactly.
    """
    pts = track.sample_points(step=0.5)
    margin = 2.0 * params.corridor_half_width
    cell = params.noise_cell_size / NOISE_SUBDIV
    min_x = float(np.min(pts[:, 0])) - margin
    max_x = float(np.max(pts[:, 0])) + margin
    min_z = float(np.min(pts[:, 1])) - margin
    max_z = float(np.max(pts[:, 1])) + margin
    ox = math.floor(min_x / cell) * cell
    oz = math.floor(min_z / cell) * cell
    cols = int(math.ceil((max_x - ox) / cell)) + 1
    rows = int(math.ceil((max_z - oz) / cell)) + 1

    xs = ox + np.arange(cols) * cell
    zs = oz + np.arange(rows) * cell
    base = -math.tan(params.base_slope) * (track.start[1] - zs)[:, None]
    heights = np.broadcast_to(base, (rows, cols)).copy()

    if params.noise_amplitude > 0.0:
        cn = params.noise_cell_size
        gi = np.floor(xs / cn).astype(int)
        gj = np.floor(zs / cn).astype(int)
        u = xs / cn - gi
        v = zs / cn - gj
        li = np.arange(gi.min(), gi.max() + 2)
        lj = np.arange(gj.min(), gj.max() + 2)
        lattice = np.array([[lattice_uniform(params.seed, "noise", int(i), int(j))
                             for j in lj] for i in li]) * params.noise_amplitude
        ii = gi - li[0]
        jj = gj - lj[0]
        v00 = lattice[np.ix_(ii, jj)]
        v10 = lattice[np.ix_(ii + 1, jj)]
        v01 = lattice[np.ix_(ii, jj + 1)]
        v11 = lattice[np.ix_(ii + 1, jj + 1)]
        uu = u[:, None]
        vv = v[None, :]
        noise = ((1 - vv) * ((1 - uu) * v00 + uu * v10)
                 + vv * ((1 - uu) * v01 + uu * v11))
        heights += noise.T

    return Heightmap(origin_xz=(ox, oz), cell_size=cell, rows=rows, cols=cols,
                     heights=heights)


@dataclass(frozen=True)
class Cube:
    pos: tuple[float, float, float]
    collected: bool = False


@dataclass(frozen=True)
class PropSet:
    poles: tuple[tuple[float, float, float], ...]
    trees: tuple[tuple[float, float, float], ...]
    cubes: tuple[Cube, ...]


def place_props(track: Track, hm: Heightmap, params: LevelParams) -> PropSet:
    """Poles/trees alternating along both corridor edges; cubes on the line."""
    poles: list[tuple[float, float, float]] = []
    trees: list[tuple[float, float, float]] = []
    n_edge = int(math.floor(track.total_length / EDGE_PROP_SPACING))
    for k in range(n_edge + 1):
        s = k * EDGE_PROP_SPACING
        pt = track.point_at(s)
        right = heading_right(track.heading_at(s))
        for side, first_is_pole in ((1.0, True), (-1.0, False)):
            x, z = pt + side * params.corridor_half_width * right
            p = (float(x), hm.sample(float(x), float(z)), float(z))
            is_pole = (k % 2 == 0) == first_is_pole
            (poles if is_pole else trees).append(p)

    cubes: list[Cube] = []
    n_cubes = int(math.floor(track.total_length / params.cube_spacing))
    for k in range(1, n_cubes + 1):
        s = k * params.cube_spacing
        x, z = track.point_at(s)
        cubes.append(Cube(pos=(float(x), hm.sample(float(x), float(z)), float(z))))

    return PropSet(poles=tuple(poles), trees=tuple(trees), cubes=tuple(cubes))


@dataclass(frozen=True)
class Level:
    params: LevelParams
    track: Track
    heightmap: Heightmap
    props: PropSet


def generate_level(params: LevelParams) -> Level:
    track = generate_track(params)
    hm = generate_heightmap(track, params)
    props = place_props(track, hm, params)
    return Level(params=params, track=track, heightmap=hm, props=props)


def mirror_track(track: Track) -> Track:
    """Reflect a track across the x = start_x plane (left/right flip)."""
    sx = track.start[0]
    arcs = tuple(
        Arc(center=(2 * sx - a.center[0], a.center[1]), radius=a.radius,
            start_angle=math.pi - a.start_angle, sweep=-a.sweep)
        for a in track.arcs
    )
    return Track(arcs=arcs, start=track.start, goal_arc_length=track.goal_arc_length)


def mirror_level(level: Level) -> Level:
    """Mirrored level for symmetry checks; requires noise-free terrain."""
    if level.params.noise_amplitude != 0.0:
        raise InvalidInput("mirroring is only exact for noise-free terrain")
    track = mirror_track(level.track)
    hm = generate_heightmap(track, level.params)
    return Level(params=level.params, track=track, heightmap=hm,
                 props=place_props(track, hm, level.params))


# ---------------------------------------------------------------------------
# Level file (schema v1)


def level_to_json(level: Level) -> dict:
    hm = level.heightmap
    heights32 = hm.heights.astype("<f4")
    return {
        "v": 1,
        "generator": f"skitrain {__version__}",
        "params": {
            "seed": level.params.seed,
            "curve_radius_range": list(level.params.curve_radius_range),
            "num_curves": level.params.num_curves,
            "base_slope": level.params.base_slope,
            "noise_amplitude": level.params.noise_amplitude,
            "noise_cell_size": level.params.noise_cell_size,
            "corridor_half_width": level.params.corridor_half_width,
            "cube_spacing": level.params.cube_spacing,
            "track_length": level.params.track_length,
        },
        "track": {
            "start": list(level.track.start),
            "goal_arc_length": level.track.goal_arc_length,
            "arcs": [
                {"c": list(a.center), "r": a.radius, "a0": a.start_angle, "sweep": a.sweep}
                for a in level.track.arcs
            ],
        },
        "heightmap": {
            "origin": list(hm.origin_xz),
            "cell_size": hm.cell_size,
            "rows": hm.rows,
            "cols": hm.cols,
            "heights": base64.b64encode(heights32.tobytes()).decode("ascii"),
        },
        "props": {
            "poles": [list(p) for p in level.props.poles],
            "trees": [list(p) for p in level.props.trees],
            "cubes": [{"p": list(c.pos), "collected": c.collected} for c in level.props.cubes],
        },
    }


def level_from_json(obj: dict) -> Level:
    if obj.get("v") != 1:
        raise InvalidInput(f"unsupported level schema version {obj.get('v')!r}")
    p = obj["params"]
    params = LevelParams(
        seed=int(p["seed"]),
        curve_radius_range=tuple(p["curve_radius_range"]),
        num_curves=int(p["num_curves"]),
        base_slope=float(p["base_slope"]),
        noise_amplitude=float(p["noise_amplitude"]),
        noise_cell_size=float(p["noise_cell_size"]),
        corridor_half_width=float(p["corridor_half_width"]),
        cube_spacing=float(p["cube_spacing"]),
        track_length=float(p["track_length"]),
    )
    t = obj["track"]
    track = Track(
        arcs=tuple(Arc(center=tuple(a["c"]), radius=float(a["r"]),
                       start_angle=float(a["a0"]), sweep=float(a["sweep"]))
                   for a in t["arcs"]),
        start=tuple(t["start"]),
        goal_arc_length=float(t["goal_arc_length"]),
    )
    h = obj["heightmap"]
    raw = base64.b64decode(h["heights"])
    heights = np.frombuffer(raw, dtype="<f4").astype(float).reshape(h["rows"], h["cols"])
    hm = Heightmap(origin_xz=tuple(h["origin"]), cell_size=float(h["cell_size"]),
                   rows=int(h["rows"]), cols=int(h["cols"]), heights=heights)
    pr = obj["props"]
    props = PropSet(
        poles=tuple(tuple(p) for p in pr["poles"]),
        trees=tuple(tuple(p) for p in pr["trees"]),
        cubes=tuple(Cube(pos=tuple(c["p"]), collected=bool(c["collected"]))
                    for c in pr["cubes"]),
    )
    return Level(params=params, track=track, heightmap=hm, props=props)


def save_level(path, level: Level) -> None:
    from .util import atomic_write_text

    atomic_write_text(path, json.dumps(level_to_json(level)) + "\n")


def load_level(path) -> Level:
    with open(path) as fh:
        return level_from_json(json.load(fh))


def heightmap_to_pgm(hm: Heightmap) -> bytes:
    """ASCII PGM dump of the height grid for quick visual inspection."""
    h = hm.heights
    lo, hi = float(h.min()), float(h.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.round((h - lo) * scale).astype(int)
    lines = [f"P2", f"# skitrain {__version__} heightmap", f"{hm.cols} {hm.rows}", "255"]
    for row in img:
        lines.append(" ".join(str(v) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")
