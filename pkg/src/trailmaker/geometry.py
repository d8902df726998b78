"""Trail geometry: ordered targets, interpolated segments, nearest-point queries.

Trails live on the z = 0 plane of a centered workspace. All lengths are in
millimeters. Everything here is value-semantic: operations return new Trail
instances and never mutate their inputs, so the module is safe to call from
any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientTargetsError, OutOfBoundsError, TargetNotFoundError, ValidationError

# Planar workspace, centered: ~(43 x 35) cm of reachable plane.
WORKSPACE_X_MM = 215.0
WORKSPACE_Y_MM = 175.0

DEFAULT_SPACING_MM = 8.0

BUILTIN_SHAPES = ("hexagon", "triangle", "circle", "infinity", "letter_B")


def in_workspace(x: float, y: float) -> bool:
    return abs(x) <= WORKSPACE_X_MM and abs(y) <= WORKSPACE_Y_MM


@dataclass(frozen=True)
class Target:
    id: int
    order_index: int
    x: float
    y: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Segment:
    """Straight connection between two consecutive targets.

    ``points`` is the nearest-point candidate set: the start target, the
    interpolated points at exact multiples of the trail spacing, and the end
    target. The final gap to the end target may be shorter than the spacing.
    """

    from_index: int
    to_index: int
    points: tuple[tuple[float, float], ...]
    length: float


@dataclass(frozen=True)
class NearestPointResult:
    point: tuple[float, float]
    segment_index: int
    candidate_index: int
    distance_ds: float


@dataclass(frozen=True)
class Trail:
    targets: tuple[Target, ...] = ()
    looping: bool = False
    spacing_s: float = DEFAULT_SPACING_MM
    name: str = ""
    # None means "not generated / stale"; regenerate before querying.
    segments: tuple[Segment, ...] | None = None
    # Flattened candidate cache, rebuilt by generate_segments: positions,
    # owning segment index, index within that segment, first flat index per
    # segment, and per-segment unit travel direction (NaN for zero length).
    _cand_xy: np.ndarray | None = field(default=None, compare=False, repr=False)
    _cand_seg: np.ndarray | None = field(default=None, compare=False, repr=False)
    _cand_idx: np.ndarray | None = field(default=None, compare=False, repr=False)
    _seg_first: np.ndarray | None = field(default=None, compare=False, repr=False)
    _seg_dir: np.ndarray | None = field(default=None, compare=False, repr=False)
    # hot-path duplicates of the candidate cache (plain python / contiguous)
    _cand_x: np.ndarray | None = field(default=None, compare=False, repr=False)
    _cand_y: np.ndarray | None = field(default=None, compare=False, repr=False)
    _cand_pt: tuple | None = field(default=None, compare=False, repr=False)
    _cand_seg_l: tuple | None = field(default=None, compare=False, repr=False)
    _cand_idx_l: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.spacing_s <= 0:
            raise ValidationError(f"spacing_s must be positive, got {self.spacing_s}")

    @property
    def generated(self) -> bool:
        return self.segments is not None

    def target_by_id(self, target_id: int) -> Target:
        for t in self.targets:
            if t.id == target_id:
                return t
        raise TargetNotFoundError(f"no target with id {target_id}")


def _check_bounds(position) -> tuple[float, float]:
    x, y = float(position[0]), float(position[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise OutOfBoundsError(f"position {(x, y)} is not finite")
    if not in_workspace(x, y):
        raise OutOfBoundsError(
            f"position {(x, y)} outside workspace "
            f"(|x| <= {WORKSPACE_X_MM}, |y| <= {WORKSPACE_Y_MM})"
        )
    return x, y


def add_target(trail: Trail, position) -> Trail:
    """Append a target at ``position``; leaves segments stale."""
    x, y = _check_bounds(position)
    next_id = max((t.id for t in trail.targets), default=-1) + 1
    target = Target(id=next_id, order_index=len(trail.targets), x=x, y=y)
    return replace(
        trail,
        targets=trail.targets + (target,),
        segments=None,
        _cand_xy=None,
        _cand_seg=None,
        _cand_idx=None,
        _seg_first=None,
        _seg_dir=None,
    )


def move_target(trail: Trail, target_id: int, new_position) -> Trail:
    """Reposition a target; regenerates segments immediately if they existed."""
    x, y = _check_bounds(new_position)
    trail.target_by_id(target_id)
    targets = tuple(
        replace(t, x=x, y=y) if t.id == target_id else t for t in trail.targets
    )
    moved = replace(
        trail,
        targets=targets,
        segments=None,
        _cand_xy=None,
        _cand_seg=None,
        _cand_idx=None,
        _seg_first=None,
        _seg_dir=None,
    )
    if trail.generated:
        return generate_segments(moved)
    return moved


def _interpolate(p0: tuple[float, float], p1: tuple[float, float], spacing: float) -> Segment:
    x0, y0 = p0
    x1, y1 = p1
    dist = math.hypot(x1 - x0, y1 - y0)
    n = int(math.floor(dist / spacing))
    heading = math.atan2(y1 - y0, x1 - x0)
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    pts = [(x0, y0)]
    for k in range(1, n + 1):
        pts.append((x0 + k * spacing * cos_h, y0 + k * spacing * sin_h))
    pts.append((x1, y1))
    return Segment(from_index=0, to_index=0, points=tuple(pts), length=dist)


def generate_segments(trail: Trail) -> Trail:
    """Interpolate every consecutive target pair (and the closing pair when looping)."""
    if len(trail.targets) < 2:
        raise InsufficientTargetsError("segment generation needs at least two targets")
    pairs = list(zip(range(len(trail.targets) - 1), range(1, len(trail.targets))))
    if trail.looping:
        pairs.append((len(trail.targets) - 1, 0))
    segments = []
    for a, b in pairs:
        seg = _interpolate(trail.targets[a].position, trail.targets[b].position, trail.spacing_s)
        segments.append(replace(seg, from_index=a, to_index=b))

    xy = np.concatenate([np.asarray(s.points, dtype=np.float64) for s in segments])
    seg_of = np.concatenate(
        [np.full(len(s.points), i, dtype=np.int64) for i, s in enumerate(segments)]
    )
    idx_in = np.concatenate([np.arange(len(s.points), dtype=np.int64) for s in segments])
    counts = np.array([len(s.points) for s in segments], dtype=np.int64)
    seg_first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    seg_dir = np.full((len(segments), 2), np.nan)
    for i, s in enumerate(segments):
        if s.length > 0:
            x0, y0 = trail.targets[s.from_index].position
            x1, y1 = trail.targets[s.to_index].position
            seg_dir[i] = ((x1 - x0) / s.length, (y1 - y0) / s.length)
    return replace(
        trail,
        segments=tuple(segments),
        _cand_xy=xy,
        _cand_seg=seg_of,
        _cand_idx=idx_in,
        _seg_first=seg_first,
        _seg_dir=seg_dir,
        _cand_x=np.ascontiguousarray(xy[:, 0]),
        _cand_y=np.ascontiguousarray(xy[:, 1]),
        _cand_pt=tuple((float(x), float(y)) for x, y in xy),
        _cand_seg_l=tuple(int(v) for v in seg_of),
        _cand_idx_l=tuple(int(v) for v in idx_in),
    )


def nearest_flat(trail: Trail, px: float, py: float) -> tuple[int, float]:
    """Flat candidate index of the global nearest point plus its distance.

    Hot-path helper shared by the public query and the simulation engine so
    replayed distances are bit-identical to recorded ones.
    """
    if not trail.generated:
        raise InsufficientTargetsError("nearest query requires generated segments")
    dx = trail._cand_x - px
    dx *= dx
    dy = trail._cand_y - py
    dy *= dy
    dx += dy
    flat = int(dx.argmin())
    return flat, math.sqrt(dx[flat])


def nearest_flat_windowed(
    trail: Trail, px: float, py: float, center: int, half_width: int
) -> tuple[int, float]:
    """Nearest candidate restricted to an index window around ``center``.

    Progress-tracking variant for path followers: on self-crossing trails the
    global nearest point can jump to the other branch at a crossing, while a
    window in candidate order stays on the branch being traversed. Wraps on
    looping trails, clamps otherwise. Ties keep the lowest flat index.
    """
    pts = trail._cand_pt
    n = len(pts)
    best_flat = -1
    best_d2 = math.inf
    if trail.looping:
        span = range(center - half_width, center + half_width + 1)
    else:
        span = range(max(0, center - half_width), min(n, center + half_width + 1))
    for i in span:
        j = i % n
        x, y = pts[j]
        d2 = (x - px) ** 2 + (y - py) ** 2
        if d2 < best_d2:
            best_d2 = d2
            best_flat = j
    return best_flat, math.sqrt(best_d2)


def result_from_flat(trail: Trail, flat: int, distance: float) -> NearestPointResult:
    return NearestPointResult(
        point=trail._cand_pt[flat],
        segment_index=trail._cand_seg_l[flat],
        candidate_index=trail._cand_idx_l[flat],
        distance_ds=distance,
    )


def nearest_point(trail: Trail, pen_xy) -> NearestPointResult:
    """Global nearest candidate point to the pen, over all segments.

    Ties resolve to the lowest (segment_index, candidate_index), which the
    flattened candidate order realizes as "first minimum wins".
    """
    flat, dist = nearest_flat(trail, float(pen_xy[0]), float(pen_xy[1]))
    return result_from_flat(trail, flat, dist)


def perimeter(trail: Trail) -> float:
    """Sum of exact inter-target distances (closing edge included when looping)."""
    if not trail.generated:
        raise InsufficientTargetsError("perimeter requires generated segments")
    return float(sum(s.length for s in trail.segments))


def next_target(trail: Trail, nearest: NearestPointResult) -> Target:
    """Target the forward pull aims at: the end of the active segment.

    On the closing segment of a looping trail this wraps to the first target.
    When the nearest point IS the shared corner target, the corner is treated
    as belonging to the later segment and the pull advances to that segment's
    end; otherwise a pen just past a corner would be pulled backward onto it,
    stalling forward motion.
    """
    seg = trail.segments[nearest.segment_index]
    end_t = trail.targets[seg.to_index]
    dx = nearest.point[0] - end_t.x
    dy = nearest.point[1] - end_t.y
    if dx * dx + dy * dy < 1e-18:  # nearest point is the corner itself
        follow = nearest.segment_index + 1
        if follow < len(trail.segments):
            return trail.targets[trail.segments[follow].to_index]
        if trail.looping:  # active segment is the closing one; wrap past start
            return trail.targets[trail.segments[0].to_index]
    return end_t


def point_along_flat(trail: Trail, flat: int, ahead_mm: float) -> tuple[float, float]:
    """Point on the candidate polyline ``ahead_mm`` past flat candidate ``flat``.

    Walks candidate points in trail order, wrapping on looping trails and
    clamping at the final target otherwise.
    """
    pts = trail._cand_pt
    n = len(pts)
    remaining = float(ahead_mm)
    cur = flat
    cx, cy = pts[cur]
    while remaining > 0:
        nxt = cur + 1
        if nxt >= n:
            if trail.looping:
                nxt = 0
            else:
                return (cx, cy)
        nx, ny = pts[nxt]
        step = math.hypot(nx - cx, ny - cy)
        if step >= remaining and step > 0:
            f = remaining / step
            return (cx + f * (nx - cx), cy + f * (ny - cy))
        remaining -= step
        cur, cx, cy = nxt, nx, ny
        if cur == flat:  # degenerate loop shorter than ahead_mm
            break
    return (cx, cy)


def point_along(trail: Trail, nearest: NearestPointResult, ahead_mm: float) -> tuple[float, float]:
    """Point on the candidate polyline ``ahead_mm`` past the nearest point."""
    if not trail.generated:
        raise InsufficientTargetsError("point_along requires generated segments")
    flat = int(trail._seg_first[nearest.segment_index]) + nearest.candidate_index
    return point_along_flat(trail, flat, ahead_mm)


def segment_direction(trail: Trail, segment_index: int) -> tuple[float, float]:
    """Unit travel direction of a segment; zero-length segments raise."""
    ux, uy = trail._seg_dir[segment_index]
    if math.isnan(ux):
        raise ValidationError(f"segment {segment_index} has zero length")
    return (float(ux), float(uy))


def _letter_b_points(size: float) -> list[tuple[float, float]]:
    # Spine up the left side, top bump, mid junction, lower bump, return.
    unit = [
        (0.00, 0.00), (0.00, 0.50), (0.00, 1.00),
        (0.30, 1.00), (0.48, 0.90), (0.48, 0.62), (0.30, 0.52),
        (0.02, 0.50),
        (0.34, 0.48), (0.55, 0.36), (0.55, 0.12), (0.34, 0.00),
        (0.12, 0.00), (0.02, 0.00),
    ]
    return [((x - 0.275) * size, (y - 0.5) * size) for x, y in unit]


def builtin_shape(name: str, size: float, spacing_s: float = DEFAULT_SPACING_MM) -> Trail:
    """Looping reference trail for one of the five built-in shapes.

    ``size`` is the side length for polygons, the radius for the circle, the
    half-width for the infinity symbol, and the glyph height for letter_B.
    """
    if name == "triangle":
        r = size / math.sqrt(3.0)  # circumradius of an equilateral triangle
        pts = [
            (r * math.cos(math.pi / 2 + 2 * math.pi * k / 3),
             r * math.sin(math.pi / 2 + 2 * math.pi * k / 3))
            for k in range(3)
        ]
    elif name == "hexagon":
        pts = [
            (size * math.cos(2 * math.pi * k / 6), size * math.sin(2 * math.pi * k / 6))
            for k in range(6)
        ]
    elif name == "circle":
        pts = [
            (size * math.cos(2 * math.pi * k / 24), size * math.sin(2 * math.pi * k / 24))
            for k in range(24)
        ]
    elif name == "infinity":
        pts = []
        for k in range(32):
            t = 2 * math.pi * k / 32
            den = 1.0 + math.sin(t) ** 2
            pts.append((size * math.cos(t) / den, size * math.sin(t) * math.cos(t) / den))
    elif name == "letter_B":
        pts = _letter_b_points(size)
    else:
        raise ValidationError(f"unknown shape {name!r}; expected one of {BUILTIN_SHAPES}")

    trail = Trail(looping=True, spacing_s=spacing_s, name=name)
    for p in pts:
        trail = add_target(trail, p)
    return generate_segments(trail)
