"""Assistive force components and their composition.

Three forces act on the simulated stylus: a plane-retaining spring that pulls
it back to the trail plane (z = 0), a path-leading pull toward the trail and
the next target, and a compensation term cancelling gravity's component along
the active segment. Forces are in newtons, positions in millimeters, spring
constants in N/mm.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import geometry
from .errors import ValidationError
from .geometry import NearestPointResult, Trail

_DEGENERATE_EPS = 1e-9


@dataclass(frozen=True)
class AssistConfig:
    scale: float = 1.0               # therapist slider, 0..1 (1 = continuous assistance)
    k_lead: float = 0.2              # N/mm, path-leading spring
    k_plane: float = 0.5             # N/mm, plane-retaining spring
    admissible_cap: float = 2.0      # N, planar assist limit
    device_cap: float = 3.3          # N, device force rendering limit
    effective_weight: float = 0.30   # N, stylus gravity load along segments

    def __post_init__(self):
        if not 0.0 <= self.scale <= 1.0:
            raise ValidationError(f"assist scale must lie in [0, 1], got {self.scale}")
        for name in ("k_lead", "k_plane", "admissible_cap", "device_cap", "effective_weight"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if self.admissible_cap > self.device_cap:
            raise ValidationError("admissible_cap must not exceed device_cap")


@dataclass(frozen=True)
class ForceBreakdown:
    plane: tuple[float, float, float]
    lead: tuple[float, float, float]
    gravity_comp: tuple[float, float, float]
    total: tuple[float, float, float]
    assist_active: bool

    @property
    def total_magnitude(self) -> float:
        return math.hypot(*self.total)


ZERO_BREAKDOWN = ForceBreakdown(
    plane=(0.0, 0.0, 0.0),
    lead=(0.0, 0.0, 0.0),
    gravity_comp=(0.0, 0.0, 0.0),
    total=(0.0, 0.0, 0.0),
    assist_active=False,
)


def plane_retaining(pen_pos, config: AssistConfig) -> tuple[float, float, float]:
    """Spring force dragging the pen back into the z = 0 trail plane.

    Always active, regardless of the commanded assistance level.
    """
    return (0.0, 0.0, -config.k_plane * float(pen_pos[2]))


def path_leading(
    pen_xy,
    trail: Trail,
    config: AssistConfig,
    assist_on: bool,
    nearest: NearestPointResult | None = None,
) -> tuple[float, float]:
    """Deviation-proportional pull toward the nearest trail point and next target.

    The two pull directions are combined as unit vectors and the sum is
    re-normalized, so only the deviation sets the magnitude (no impulsive
    jumps when one pull rotates). Magnitude is clamped to the admissible cap.
    """
    if not assist_on:
        return (0.0, 0.0)
    if nearest is None:
        nearest = geometry.nearest_point(trail, pen_xy)
    d_s = nearest.distance_ds
    if d_s == 0.0:
        return (0.0, 0.0)
    px, py = float(pen_xy[0]), float(pen_xy[1])

    ux_np = (nearest.point[0] - px) / d_s
    uy_np = (nearest.point[1] - py) / d_s

    nt = geometry.next_target(trail, nearest)
    dx, dy = nt.x - px, nt.y - py
    dist_next = math.hypot(dx, dy)
    if dist_next > 0:
        ux_nt, uy_nt = dx / dist_next, dy / dist_next
    else:
        ux_nt, uy_nt = 0.0, 0.0

    sx, sy = ux_np + ux_nt, uy_np + uy_nt
    norm = math.hypot(sx, sy)
    if norm < _DEGENERATE_EPS:  # anti-parallel pulls: no defined direction
        return (0.0, 0.0)
    magnitude = min(config.scale * config.k_lead * d_s, config.admissible_cap)
    return (magnitude * sx / norm, magnitude * sy / norm)


def gravity_compensation(direction, config: AssistConfig) -> tuple[float, float]:
    """Force cancelling gravity's projection onto the segment travel direction.

    ``direction`` is the segment's travel direction in the vertical trail
    plane, where -y is the gravity direction. Non-unit inputs are normalized.
    """
    ux, uy = float(direction[0]), float(direction[1])
    norm = math.hypot(ux, uy)
    if norm < _DEGENERATE_EPS:
        raise ValidationError("gravity compensation needs a nonzero direction")
    ux, uy = ux / norm, uy / norm
    along = config.effective_weight * uy  # (ĵ . û) scaled by the load
    return (along * ux, along * uy)


def _clamp_planar(fx: float, fy: float, cap: float) -> tuple[float, float, float]:
    """Return (fx, fy, applied_scale) with the vector clamped to |f| <= cap."""
    mag = math.hypot(fx, fy)
    if mag <= cap or mag == 0.0:
        return fx, fy, 1.0
    s = cap / mag
    return fx * s, fy * s, s


def compose(
    pen_pos,
    trail: Trail,
    config: AssistConfig,
    assist_on: bool,
    nearest: NearestPointResult | None = None,
) -> ForceBreakdown:
    """Evaluate and cap all three force components for the current pen position.

    The planar assist (lead + gravity compensation) is clamped to the
    admissible cap, the perpendicular plane force independently to the device
    cap, and the composed total to the device cap by scaling only the planar
    part. The returned breakdown is post-cap, so its fields always sum to the
    total.
    """
    if nearest is None:
        nearest = geometry.nearest_point(trail, pen_pos[:2])

    pz = float(pen_pos[2])
    plane_z = -config.k_plane * pz
    if abs(plane_z) > config.device_cap:
        plane_z = math.copysign(config.device_cap, plane_z)

    lead_x, lead_y = path_leading(pen_pos[:2], trail, config, assist_on, nearest=nearest)

    seg = trail.segments[nearest.segment_index]
    if seg.length > 0:
        grav_x, grav_y = gravity_compensation(
            geometry.segment_direction(trail, nearest.segment_index), config
        )
    else:  # degenerate zero-length segment: no travel direction to compensate
        grav_x, grav_y = 0.0, 0.0

    planar_x, planar_y = lead_x + grav_x, lead_y + grav_y
    _, _, s_adm = _clamp_planar(planar_x, planar_y, config.admissible_cap)

    # total cap: shrink the planar part until the composed vector fits
    px_c, py_c = planar_x * s_adm, planar_y * s_adm
    planar_mag = math.hypot(px_c, py_c)
    budget = math.sqrt(max(config.device_cap**2 - plane_z**2, 0.0))
    if planar_mag > budget:
        s_dev = budget / planar_mag if planar_mag > 0 else 0.0
    else:
        s_dev = 1.0

    s = s_adm * s_dev
    lead = (lead_x * s, lead_y * s, 0.0)
    grav = (grav_x * s, grav_y * s, 0.0)
    plane = (0.0, 0.0, plane_z)
    total = (lead[0] + grav[0], lead[1] + grav[1], plane_z)
    return ForceBreakdown(
        plane=plane, lead=lead, gravity_comp=grav, total=total, assist_active=assist_on
    )
