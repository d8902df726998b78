"""Record dataclasses shared by the engine, persistence, and analytics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .forcefield import ForceBreakdown
from .geometry import Trail

FM_SCORE_MAX = 66  # upper-extremity motor scale maximum


@dataclass(frozen=True)
class SafetyState:
    tripped: bool = False
    cause: str = "none"  # none | overspeed | overforce
    trip_time: float = 0.0


@dataclass(frozen=True)
class Tick:
    t: float
    pen_position: tuple[float, float, float]
    assist_on: bool
    assist_scale: float
    d_s: float
    force: ForceBreakdown


@dataclass
class SessionRecord:
    session_id: str
    patient_id: str
    shape_name: str
    mode: str  # no_assist | continuous_assist
    trail: Trail
    tick_hz: int = 30
    loop_capture_radius: float = 6.0
    ticks: list[Tick] = field(default_factory=list)
    loops_completed: int = 0
    safety: SafetyState = SafetyState()
    started_at: str = "1970-01-01T00:00:00Z"
    ended_at: str = ""

    @property
    def duration_s(self) -> float:
        return self.ticks[-1].t if self.ticks else 0.0

    def positions(self) -> np.ndarray:
        """(n, 3) array of recorded pen positions."""
        return np.array([t.pen_position for t in self.ticks], dtype=np.float64)


@dataclass
class PatientProfile:
    patient_id: str
    cohort_label: str  # healthy | patient
    fm_scores: list[dict] = field(default_factory=list)  # {date, score}, insertion order
    notes: str = ""


@dataclass
class TrajectorySeries:
    subject_id: str
    label: str  # healthy | patient
    shape_name: str
    series: np.ndarray  # 3 x L stylus coordinates, mm

    def __post_init__(self):
        self.series = np.asarray(self.series, dtype=np.float64)
        if self.series.ndim != 2 or self.series.shape[0] != 3:
            raise ValidationError(f"series must be 3 x L, got {self.series.shape}")
