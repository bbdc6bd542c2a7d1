"""Machine parameters: servo, paper axes, encoder, page layout, cams.

Every default lives here. The hardware figures are the 2.54 mm pin pitch,
the servo rate of 0.11 s per 60 degrees and the 3.5 kg-cm stall torque; the
rest are adjustable assumptions.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any

from .mechanism import KGCM_TO_NM, CamAssembly, CamGeometryError, CamProfile

INDUSTRIAL_CPS = 800.0
HOME_USE_CPS = 10.0
STEP_TOLERANCE = 1e-9


class ConfigError(ValueError):
    pass


class NonIntegralMove(ValueError):
    def __init__(self, distance: float, step: float):
        self.distance = distance
        super().__init__(f"move of {distance} mm is not a whole number of {step} mm steps")


def _positive(obj, *names):
    for name in names:
        value = getattr(obj, name)
        if not value > 0:
            raise ConfigError(f"{type(obj).__name__}.{name} must be > 0, got {value}")


@dataclass(frozen=True)
class ServoSpec:
    # rate is kept as the datasheet figure so 60 deg maps to exactly 0.11 s
    seconds_per_60deg: float = 0.11
    torque_nm: float = 3.5 * KGCM_TO_NM
    gear_ratio: float = 1.0

    def __post_init__(self):
        _positive(self, "seconds_per_60deg", "torque_nm", "gear_ratio")

    @property
    def sweep_rate(self) -> float:
        """Servo output rate in deg/s."""
        return 60.0 / self.seconds_per_60deg

    @property
    def shaft_rate(self) -> float:
        return self.sweep_rate / self.gear_ratio

    @property
    def shaft_torque(self) -> float:
        return self.torque_nm * self.gear_ratio


@dataclass(frozen=True)
class AxisSpec:
    speed_mm_s: float = 20.0
    step_mm: float = 0.0254

    def __post_init__(self):
        _positive(self, "speed_mm_s", "step_mm")

    def steps(self, distance: float) -> int:
        n = distance / self.step_mm
        k = round(n)
        if abs(n - k) * self.step_mm > STEP_TOLERANCE:
            raise NonIntegralMove(distance, self.step_mm)
        return k


@dataclass(frozen=True)
class EncoderSpec:
    counts_per_rev: int = 512

    def __post_init__(self):
        if not isinstance(self.counts_per_rev, int) or self.counts_per_rev <= 0:
            raise ConfigError(f"counts_per_rev must be a positive integer, got {self.counts_per_rev!r}")

    @property
    def resolution(self) -> float:
        return 360.0 / self.counts_per_rev

    def quantize(self, angle: float) -> float:
        """Nearest encoder count to ``angle`` (deg), keeping the winding."""
        return round(angle / self.resolution) * self.resolution


@dataclass(frozen=True)
class LayoutSpec:
    column_pitch_mm: float = 2.54
    row_pitch_mm: float = 2.54
    cell_pitch_mm: float = 6.35
    line_pitch_mm: float = 10.16
    paper_width_mm: float = 210.0
    paper_height_mm: float = 297.0
    margin_mm: float = 10.0
    emboss_threshold_mm: float = 0.4
    emboss_force_n: float = 15.0

    def __post_init__(self):
        _positive(self, "column_pitch_mm", "row_pitch_mm", "cell_pitch_mm", "line_pitch_mm",
                  "paper_width_mm", "paper_height_mm", "emboss_threshold_mm", "emboss_force_n")
        if self.margin_mm < 0:
            raise ConfigError(f"margin_mm must be >= 0, got {self.margin_mm}")
        if self.cell_pitch_mm <= self.column_pitch_mm:
            raise ConfigError("cell_pitch_mm must exceed column_pitch_mm")
        if self.line_pitch_mm <= 2 * self.row_pitch_mm:
            raise ConfigError("line_pitch_mm must exceed the cell height (2 * row_pitch_mm)")

    @property
    def cells_per_line(self) -> int:
        usable = self.paper_width_mm - 2 * self.margin_mm - self.column_pitch_mm
        return math.floor(usable / self.cell_pitch_mm + 1e-9) + 1 if usable >= 0 else 0

    @property
    def lines_per_page(self) -> int:
        usable = self.paper_height_mm - 2 * self.margin_mm - 2 * self.row_pitch_mm
        return math.floor(usable / self.line_pitch_mm + 1e-9) + 1 if usable >= 0 else 0

    def cell_origin(self, line: int, slot: int) -> tuple[float, float]:
        return (self.margin_mm + slot * self.cell_pitch_mm,
                self.margin_mm + line * self.line_pitch_mm)


@dataclass(frozen=True)
class CamSpec:
    base_radius_mm: float = 5.0
    lift_mm: float = 0.5
    rise_deg: float = 45.0
    top_dwell_deg: float = 0.0
    return_deg: float = 45.0
    motion_law: str = "cycloidal"
    pressure_angle_limit_deg: float = 30.0

    def profile(self) -> CamProfile:
        return CamProfile(self.base_radius_mm, self.lift_mm, self.rise_deg,
                          self.top_dwell_deg, self.return_deg, self.motion_law)


@dataclass(frozen=True)
class PlannerSpec:
    crossing_margin_deg: float = 1.0
    forward_only: bool = False


@dataclass(frozen=True)
class MachineConfig:
    servo: ServoSpec = field(default_factory=ServoSpec)
    axis_x: AxisSpec = field(default_factory=AxisSpec)
    axis_y: AxisSpec = field(default_factory=lambda: AxisSpec(speed_mm_s=10.0))
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    layout: LayoutSpec = field(default_factory=LayoutSpec)
    cam: CamSpec = field(default_factory=CamSpec)
    planner: PlannerSpec = field(default_factory=PlannerSpec)

    def __post_init__(self):
        profile = self.cam.profile()
        assembly = CamAssembly.uniform(profile)
        gap = assembly.gap_width()
        if self.layout.emboss_threshold_mm >= profile.lift:
            raise ConfigError("emboss_threshold_mm must be below the cam lift")
        if self.encoder.counts_per_rev < 3 * 360.0 / gap:
            raise ConfigError(
                f"encoder needs >= {math.ceil(3 * 360.0 / gap)} counts/rev to resolve {gap} deg parking arcs"
            )
        margin = self.planner.crossing_margin_deg
        if not 0 < margin < gap / 2:
            raise ConfigError(f"crossing_margin_deg must lie in (0, {gap / 2})")

    @property
    def assembly(self) -> CamAssembly:
        return CamAssembly.uniform(self.cam.profile())

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MachineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        sections = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
        kwargs = {}
        defaults = cls()
        for name, value in data.items():
            spec_type = type(getattr(defaults, name))
            if not isinstance(value, dict):
                raise ConfigError(f"section {name!r} must be an object")
            known = {f.name: f for f in dataclasses.fields(spec_type)}
            bad = set(value) - set(known)
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {', '.join(sorted(bad))}")
            merged = dataclasses.asdict(getattr(defaults, name)) | value
            for key, v in merged.items():
                expected = type(getattr(getattr(defaults, name), key))
                if expected is float and isinstance(v, int) and not isinstance(v, bool):
                    merged[key] = float(v)
                elif not isinstance(v, expected) or (expected is int and isinstance(v, bool)):
                    raise ConfigError(f"{name}.{key} must be {expected.__name__}, got {v!r}")
            try:
                kwargs[name] = spec_type(**merged)
            except CamGeometryError:
                raise
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "MachineConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def servo_time(delta: float, spec: ServoSpec) -> float:
    """Seconds for the shaft to turn ``delta`` degrees at constant rate."""
    if delta < 0:
        raise ValueError(f"sweep angle must be >= 0, got {delta}")
    return delta / 60.0 * spec.seconds_per_60deg * spec.gear_ratio


def axis_time(distance: float, spec: AxisSpec) -> float:
    if distance < 0:
        raise ValueError(f"distance must be >= 0, got {distance}")
    spec.steps(distance)
    return distance / spec.speed_mm_s
