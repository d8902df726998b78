"""Virtual pen dynamics, synthetic subjects, loop counting, and the session engine.

The plant is a damped point mass driven by three inputs: the subject's intent
force, the assistive force field, and viscous damping. Positions are in mm,
velocities in mm/s, forces in N, mass in kg; the integrator converts through
1 N = 1 kg.m/s^2 explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import forcefield, geometry
from .errors import IntegrationError, ValidationError
from .forcefield import AssistConfig, ForceBreakdown
from .geometry import Trail
from .records import SafetyState, SessionRecord, Tick

MM_PER_M = 1000.0
OVERSPEED_LIMIT_MM_S = 400.0  # 40 cm/s shutdown threshold

MODE_NO_ASSIST = "no_assist"
MODE_CONTINUOUS = "continuous_assist"
MODES = (MODE_NO_ASSIST, MODE_CONTINUOUS)


@dataclass(frozen=True)
class PenState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mass: float = 0.1       # kg
    damping: float = 0.02   # N.s/mm

    def __post_init__(self):
        if self.mass <= 0:
            raise ValidationError("pen mass must be positive")
        if self.damping < 0:
            raise ValidationError("pen damping must be nonnegative")
        # finite-sum guard: any NaN/inf component poisons the sums
        if not (math.isfinite(sum(self.position)) and math.isfinite(sum(self.velocity))):
            raise ValidationError("pen state must be finite")

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class SubjectModel:
    kind: str  # healthy | patient
    pursuit_gain: float = 0.10      # N/mm toward the pursued point
    lookahead: float = 9.0          # mm ahead along the trail
    tremor_amplitude: float = 0.0   # N
    tremor_frequency: float = 4.5   # Hz
    bias_offset: tuple[float, float] = (0.0, 0.0)  # mm, displaces the pursued point
    noise_sigma: float = 0.0        # N per planar axis (z uses half)
    jerk_rate: float = 0.0          # Poisson events/s of brief force spikes
    seed: int = 0

    def __post_init__(self):
        for name in ("pursuit_gain", "lookahead", "tremor_amplitude",
                     "tremor_frequency", "noise_sigma", "jerk_rate"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class SessionConfig:
    mode: str = MODE_NO_ASSIST
    target_loops: int = 10
    tick_hz: int = 30
    internal_substeps: int = 10
    timeout_s: float = 600.0
    loop_capture_radius: float = 6.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.target_loops < 1:
            raise ValidationError("target_loops must be >= 1")
        if self.tick_hz <= 0 or self.internal_substeps < 1:
            raise ValidationError("tick_hz and internal_substeps must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / (self.tick_hz * self.internal_substeps)


def step(pen: PenState, intent_force, field: ForceBreakdown, dt: float) -> PenState:
    """Advance the pen one semi-implicit Euler step under the net force."""
    if dt <= 0:
        raise IntegrationError(f"dt must be positive, got {dt}")
    px, py, pz = pen.position
    vx, vy, vz = pen.velocity
    ix, iy, iz = intent_force
    tx, ty, tz = field.total

    fx = ix + tx - pen.damping * vx
    fy = iy + ty - pen.damping * vy
    fz = iz + tz - pen.damping * vz
    scale = dt * MM_PER_M / pen.mass
    vx += fx * scale
    vy += fy * scale
    vz += fz * scale
    px += dt * vx
    py += dt * vy
    pz += dt * vz
    if not (math.isfinite(px + py + pz) and math.isfinite(vx + vy + vz)):
        raise IntegrationError("non-finite pen state after integration step")
    return PenState(position=(px, py, pz), velocity=(vx, vy, vz),
                    mass=pen.mass, damping=pen.damping)


class SubjectIntent:
    """Synthetic subject: pursuit of a look-ahead point plus tremor, noise, jerks.

    The intent includes the held stylus load (``held_weight`` pulling along -y
    in the vertical trail plane); the gravity-compensation component of the
    force field cancels its along-segment part, which is that feature's whole
    purpose. Deterministic for a given (model, trail) and RNG seed; the tremor
    direction and the Poisson jerk schedule are drawn once per session.
    """

    # index window for progress tracking; generous vs. per-substep motion
    TRACK_HALF_WIDTH = 6

    def __init__(self, model: SubjectModel, trail: Trail, rng: np.random.Generator,
                 held_weight: float = 0.30):
        self.model = model
        self.trail = trail
        self.rng = rng
        self.held_weight = held_weight
        self._track_flat: int | None = None
        theta = rng.uniform(0.0, 2.0 * math.pi)
        self._tremor_dir = (math.cos(theta), math.sin(theta))
        self._next_jerk_t = (
            rng.exponential(1.0 / model.jerk_rate) if model.jerk_rate > 0 else math.inf
        )
        self._jerk_until = -1.0
        self._jerk_force = (0.0, 0.0)

    def force(self, pen_xy, t: float, flat: int, d_s: float) -> tuple[float, float, float]:
        m = self.model
        # Track progress along the trail rather than trusting the global
        # nearest point: at self-crossings the global result can hop to the
        # other branch, which would make the pursuit shortcut a lobe.
        if self._track_flat is None:
            self._track_flat = flat
        self._track_flat, _ = geometry.nearest_flat_windowed(
            self.trail, pen_xy[0], pen_xy[1], self._track_flat, self.TRACK_HALF_WIDTH
        )
        lx, ly = geometry.point_along_flat(self.trail, self._track_flat, m.lookahead)
        fx = m.pursuit_gain * (lx + m.bias_offset[0] - pen_xy[0])
        fy = m.pursuit_gain * (ly + m.bias_offset[1] - pen_xy[1]) - self.held_weight

        if m.tremor_amplitude > 0:
            a = m.tremor_amplitude * math.sin(2.0 * math.pi * m.tremor_frequency * t)
            fx += a * self._tremor_dir[0]
            fy += a * self._tremor_dir[1]

        n = self.rng.standard_normal(3)
        fx += m.noise_sigma * n[0]
        fy += m.noise_sigma * n[1]
        fz = 0.5 * m.noise_sigma * n[2]

        if t >= self._next_jerk_t:
            phi = self.rng.uniform(0.0, 2.0 * math.pi)
            mag = 5.0 * m.noise_sigma
            self._jerk_force = (mag * math.cos(phi), mag * math.sin(phi))
            self._jerk_until = t + 0.1
            self._next_jerk_t = t + self.rng.exponential(1.0 / m.jerk_rate)
        if t < self._jerk_until:
            fx += self._jerk_force[0]
            fy += self._jerk_force[1]
        return (fx, fy, fz)


def subject_intent(model: SubjectModel, pen: PenState, trail: Trail, t: float,
                   rng: np.random.Generator,
                   held_weight: float = 0.30) -> tuple[float, float, float]:
    """One-shot intent evaluation (stateless wrapper around SubjectIntent)."""
    flat, d_s = geometry.nearest_flat(trail, pen.position[0], pen.position[1])
    return SubjectIntent(model, trail, rng, held_weight=held_weight).force(
        pen.position, t, flat, d_s
    )


def safety_check(pen: PenState, field: ForceBreakdown, t: float = 0.0,
                 device_cap: float = 3.3) -> SafetyState:
    """Velocity / force saturation watchdog; strict-inequality thresholds."""
    if pen.speed > OVERSPEED_LIMIT_MM_S:
        return SafetyState(tripped=True, cause="overspeed", trip_time=t)
    if field.total_magnitude > device_cap + 1e-9:
        return SafetyState(tripped=True, cause="overforce", trip_time=t)
    return SafetyState(tripped=False, cause="none", trip_time=0.0)


class LoopCounter:
    """Ordered target-capture chain: one loop per in-order pass closed at target 0."""

    def __init__(self, trail: Trail, capture_radius: float):
        self.targets = [(t.x, t.y) for t in trail.targets]
        self.r2 = capture_radius * capture_radius
        self.captures = 0

    @property
    def loops(self) -> int:
        n = len(self.targets)
        return max(0, (self.captures - 1) // n) if self.captures > 0 else 0

    def update(self, px: float, py: float) -> int:
        n = len(self.targets)
        for _ in range(n + 1):  # at most one full cycle per sample
            tx, ty = self.targets[self.captures % n]
            if (px - tx) ** 2 + (py - ty) ** 2 <= self.r2:
                self.captures += 1
            else:
                break
        return self.loops


def count_loops(positions, trail: Trail, capture_radius: float) -> int:
    """Offline pass over recorded positions with the capture-chain rule."""
    if not trail.looping:
        raise ValidationError("loop counting applies to looping trails")
    counter = LoopCounter(trail, capture_radius)
    for p in positions:
        counter.update(float(p[0]), float(p[1]))
    return counter.loops


class SessionEngine:
    """Owns one session's tick loop: compose -> intent -> integrate -> safety -> record.

    A single logical writer drives tick(); callers hand in an intent callback
    (synthetic subject or human-input tracker) and receive the recorded Tick.
    """

    def __init__(self, trail: Trail, config: SessionConfig,
                 assist: AssistConfig | None = None,
                 pen: PenState | None = None):
        if not trail.generated:
            raise ValidationError("engine needs a trail with generated segments")
        self.trail = trail
        self.config = config
        self.assist_cfg = assist or AssistConfig()
        self.assist_on = config.mode == MODE_CONTINUOUS
        start = trail.targets[0].position
        self.pen = pen or PenState(position=(start[0], start[1], 0.0))
        self.t = 0.0
        self.tick_index = 0
        self.safety = SafetyState()
        self.loop_counter = LoopCounter(trail, config.loop_capture_radius)
        self._flat, self._d_s = geometry.nearest_flat(
            trail, self.pen.position[0], self.pen.position[1]
        )

    def set_trail(self, trail: Trail) -> None:
        """Swap in an edited trail mid-session; restarts the capture chain."""
        if not trail.generated:
            raise ValidationError("edited trail must have generated segments")
        loops = self.loop_counter.loops
        self.trail = trail
        self.loop_counter = LoopCounter(trail, self.config.loop_capture_radius)
        self.loop_counter.captures = loops * len(trail.targets) + 1 if loops else 0
        self._flat, self._d_s = geometry.nearest_flat(
            trail, self.pen.position[0], self.pen.position[1]
        )

    def current_tick(self) -> Tick:
        """Record of the engine state at the current tick boundary."""
        nearest = geometry.result_from_flat(self.trail, self._flat, self._d_s)
        field = forcefield.compose(
            self.pen.position, self.trail, self.assist_cfg, self.assist_on, nearest=nearest
        )
        return Tick(
            t=self.t,
            pen_position=self.pen.position,
            assist_on=self.assist_on,
            assist_scale=self.assist_cfg.scale if self.assist_on else 0.0,
            d_s=self._d_s,
            force=field,
        )

    def nearest(self) -> geometry.NearestPointResult:
        return geometry.result_from_flat(self.trail, self._flat, self._d_s)

    def tick(self, intent_fn) -> Tick:
        """Advance one 30 Hz tick (all internal substeps) and record it."""
        if self.safety.tripped:
            raise ValidationError("engine is safety-tripped; no further motion")
        cfg = self.config
        dt = cfg.dt
        trail = self.trail
        acfg = self.assist_cfg
        pen = self.pen
        for j in range(cfg.internal_substeps):
            t_sub = self.t + j * dt
            nearest = geometry.result_from_flat(trail, self._flat, self._d_s)
            field = forcefield.compose(pen.position, trail, acfg, self.assist_on,
                                       nearest=nearest)
            intent = intent_fn(pen.position, t_sub, self._flat, self._d_s)
            pen = step(pen, intent, field, dt)
            self._flat, self._d_s = geometry.nearest_flat(
                trail, pen.position[0], pen.position[1]
            )
        self.pen = pen
        self.tick_index += 1
        self.t = self.tick_index / cfg.tick_hz
        self.loop_counter.update(pen.position[0], pen.position[1])
        tick = self.current_tick()
        self.safety = safety_check(pen, tick.force, t=self.t,
                                   device_cap=acfg.device_cap)
        return tick

    @property
    def loops(self) -> int:
        return self.loop_counter.loops

    def done(self) -> bool:
        return (
            self.safety.tripped
            or self.loops >= self.config.target_loops
            or self.t >= self.config.timeout_s
        )


def simulate_session(
    model: SubjectModel,
    trail: Trail,
    config: SessionConfig,
    seed: int,
    *,
    assist: AssistConfig | None = None,
    session_id: str = "",
    patient_id: str = "",
) -> SessionRecord:
    """Run a full synthetic session; deterministic for fixed inputs and seed."""
    rng = np.random.default_rng(seed)
    engine = SessionEngine(trail, config, assist=assist)
    subject = SubjectIntent(model, trail, rng,
                            held_weight=engine.assist_cfg.effective_weight)

    record = SessionRecord(
        session_id=session_id or f"{model.kind}-{trail.name or 'trail'}-{config.mode}-{seed}",
        patient_id=patient_id or f"{model.kind}-{seed}",
        shape_name=trail.name,
        mode=config.mode,
        trail=trail,
        tick_hz=config.tick_hz,
        loop_capture_radius=config.loop_capture_radius,
    )
    record.ticks.append(engine.current_tick())
    engine.loop_counter.update(engine.pen.position[0], engine.pen.position[1])

    while not engine.done():
        record.ticks.append(engine.tick(subject.force))

    record.loops_completed = engine.loops
    record.safety = engine.safety
    end_s = record.ticks[-1].t
    record.ended_at = f"1970-01-01T00:{int(end_s // 60):02d}:{end_s % 60:09.6f}Z"
    return record


# Calibrated subject presets. Parameter values are modeling choices tuned so
# cohort metrics land near the reference healthy/patient deviation and speed
# figures; see tools/calibrate.py for the sweep that produced them.
HEALTHY_PRESET = SubjectModel(
    kind="healthy",
    pursuit_gain=0.13,
    lookahead=7.2,
    tremor_amplitude=0.7,
    tremor_frequency=4.5,
    bias_offset=(0.0, 0.0),
    noise_sigma=0.35,
    jerk_rate=0.0,
)

PATIENT_PRESET = SubjectModel(
    kind="patient",
    pursuit_gain=0.11,
    lookahead=4.8,
    tremor_amplitude=1.7,
    tremor_frequency=4.5,
    bias_offset=(1.0, 0.0),
    noise_sigma=0.40,
    jerk_rate=0.3,
)

PRESETS = {"healthy": HEALTHY_PRESET, "patient": PATIENT_PRESET}


def subject_from_preset(name: str, subject_seed: int) -> SubjectModel:
    """Per-subject variability: jitter the preset deterministically from a seed."""
    if name not in PRESETS:
        raise ValidationError(f"unknown subject preset {name!r}")
    base = PRESETS[name]
    rng = np.random.default_rng(subject_seed)
    if name == "healthy":
        return replace(
            base,
            pursuit_gain=base.pursuit_gain * rng.uniform(0.92, 1.08),
            lookahead=base.lookahead * rng.uniform(0.9, 1.1),
            tremor_amplitude=base.tremor_amplitude * rng.uniform(0.7, 1.3),
            tremor_frequency=rng.uniform(4.0, 5.5),
            noise_sigma=base.noise_sigma * rng.uniform(0.8, 1.2),
            seed=subject_seed,
        )
    severity = rng.uniform(0.75, 1.35)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    bias_mag = math.hypot(*base.bias_offset) * severity
    return replace(
        base,
        pursuit_gain=base.pursuit_gain * rng.uniform(0.92, 1.08) / math.sqrt(severity),
        lookahead=base.lookahead * rng.uniform(0.9, 1.1),
        tremor_amplitude=base.tremor_amplitude * severity,
        tremor_frequency=rng.uniform(3.8, 5.5),
        bias_offset=(bias_mag * math.cos(angle), bias_mag * math.sin(angle)),
        noise_sigma=base.noise_sigma * rng.uniform(0.9, 1.1),
        jerk_rate=base.jerk_rate * severity,
        seed=subject_seed,
    )
