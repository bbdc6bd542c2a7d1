"""Deterministic execution of a :class:`JobPlan` on a virtual machine.

The head is fixed and the paper moves, so positions are tracked as the head's
location in page coordinates. Sweeps run at the constant shaft rate; a dot is
recorded whenever a follower rises through the emboss threshold while the
paper dwells. Time is exact: every event's duration comes from the servo or
axis model and the clock is their running sum.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

from .braille import DEFAULT, TranslationTable, cells_to_text, text_to_cells
from .machine import (HOME_USE_CPS, INDUSTRIAL_CPS, LayoutSpec, MachineConfig,
                      axis_time, servo_time)
from .mechanism import (CamAssembly, follower_displacement, max_pressure_angle,
                        strike_force_envelope, threshold_phases)
from .planner import (AxisMove, ColumnPlan, JobPlan, Violation, engaged_peaks, plan_job,
                      verify_plan)

GRID_TOLERANCE = 0.1
_SAME_DOT = 1e-6


class SimulationError(Exception):
    pass


class PlanViolation(SimulationError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        first = self.violations[0]
        super().__init__(f"{len(self.violations)} plan violation(s), first: "
                         f"{first.kind} at action {first.index}: {first.detail}")


class EncoderAmbiguity(SimulationError):
    def __init__(self, index: int, angle: float, quantized: float, detail: str):
        self.index = index
        self.angle = angle
        self.quantized = quantized
        super().__init__(f"action {index}: angle {angle:.4f} reads as {quantized:.4f} deg; {detail}")


class OffGridDot(ValueError):
    def __init__(self, x: float, y: float):
        self.x = x
        self.y = y
        super().__init__(f"dot at ({x:.4f}, {y:.4f}) mm is not on the Braille grid")


def _key(x: float, y: float) -> tuple[int, int]:
    return round(x * 1e5), round(y * 1e5)


@dataclass(frozen=True)
class Dot:
    x: float
    y: float
    peak_mm: float


@dataclass
class VirtualPaper:
    width_mm: float = 210.0
    height_mm: float = 297.0
    dots: list[Dot] = field(default_factory=list)

    def __post_init__(self):
        self._index = {_key(d.x, d.y): i for i, d in enumerate(self.dots)}

    def find(self, x: float, y: float, tol: float = _SAME_DOT) -> int | None:
        i = self._index.get(_key(x, y))
        if i is not None:
            return i
        for i, d in enumerate(self.dots):
            if math.hypot(d.x - x, d.y - y) <= tol:
                return i
        return None

    def emboss(self, x: float, y: float, peak_mm: float) -> bool:
        """Record a dot; returns False when one already exists there."""
        i = self.find(x, y)
        if i is not None:
            if peak_mm > self.dots[i].peak_mm:
                self.dots[i] = Dot(self.dots[i].x, self.dots[i].y, peak_mm)
            return False
        self._index[_key(x, y)] = len(self.dots)
        self.dots.append(Dot(x, y, peak_mm))
        return True

    def sorted_dots(self) -> list[Dot]:
        return sorted(self.dots, key=lambda d: (round(d.y, 6), round(d.x, 6)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x_mm,y_mm,peak_mm\n")
        for d in self.sorted_dots():
            buf.write(f"{d.x:.6f},{d.y:.6f},{d.peak_mm:.6f}\n")
        return buf.getvalue()

    def to_svg(self, px_per_mm: float = 10.0, dot_radius_mm: float = 0.75) -> str:
        w, h = self.width_mm * px_per_mm, self.height_mm * px_per_mm
        lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
            f'viewBox="0 0 {w:.0f} {h:.0f}">',
            f'<rect x="0" y="0" width="{w:.0f}" height="{h:.0f}" fill="#ffffff" stroke="#999999"/>',
        ]
        for d in self.sorted_dots():
            lines.append(f'<circle cx="{d.x * px_per_mm:.2f}" cy="{d.y * px_per_mm:.2f}" '
                         f'r="{dot_radius_mm * px_per_mm:.2f}" fill="#000000"/>')
        lines.append("</svg>")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    duration: float = 0.0
    data: tuple[tuple[str, Any], ...] = ()


@dataclass
class SimReport:
    events: list[Event]
    total_time: float
    char_count: int
    strike_count: int
    dot_count: int
    spurious_dot_count: int
    missing_dot_count: int
    min_available_force: float
    emboss_force_required: float
    max_pressure_angle: float
    pressure_angle_limit: float

    @property
    def force_ok(self) -> bool:
        return self.min_available_force >= self.emboss_force_required

    @property
    def pressure_angle_ok(self) -> bool:
        return self.max_pressure_angle < self.pressure_angle_limit

    @property
    def rate(self) -> tuple[float, float, bool] | None:
        if self.total_time <= 0:
            return None
        return throughput(self.total_time, self.char_count)

    def to_dict(self) -> dict[str, Any]:
        rate = self.rate
        return {
            "total_time_s": self.total_time,
            "char_count": self.char_count,
            "chars_per_second": rate[0] if rate else None,
            "industrial_ratio": rate[1] if rate else None,
            "home_use": rate[2] if rate else None,
            "strike_count": self.strike_count,
            "dot_count": self.dot_count,
            "spurious_dot_count": self.spurious_dot_count,
            "missing_dot_count": self.missing_dot_count,
            "min_available_force_n": self.min_available_force,
            "emboss_force_required_n": self.emboss_force_required,
            "force_ok": self.force_ok,
            "force_model": "quasi-static work balance, friction ignored (lower bound)",
            "max_pressure_angle_deg": self.max_pressure_angle,
            "pressure_angle_ok": self.pressure_angle_ok,
            "events": [
                {"t": e.t, "kind": e.kind, "duration": e.duration, **dict(e.data)}
                for e in self.events
            ],
        }


def throughput(total_time: float, char_count: int) -> tuple[float, float, bool]:
    """(chars per second, slowdown against an 800 cps industrial embosser, home-use flag)."""
    if total_time <= 0:
        raise ValueError("throughput needs a positive total time")
    cps = char_count / total_time
    ratio = INDUSTRIAL_CPS / cps if cps > 0 else math.inf
    return cps, ratio, cps < HOME_USE_CPS


def dumps_fixed(obj: Any, places: int = 6, indent: int = 2) -> str:
    """JSON with every float written to ``places`` decimals (byte-stable output)."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            if not math.isfinite(o):
                return "null"
            s = f"{o:.{places}f}"
            return s[1:] if s.startswith("-") and float(s) == 0 else s
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            if level >= 2:
                return "{" + ", ".join(f"{enc(str(k), 0)}: {enc(v, level + 1)}" for k, v in o.items()) + "}"
            items = [f"{pad}{enc(str(k), 0)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            items = [pad + enc(v, level + 1) for v in o]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def estimate_time(plan: JobPlan, config: MachineConfig = MachineConfig()) -> float:
    total = 0.0
    for a in plan.actions:
        if isinstance(a, ColumnPlan):
            total += sum(servo_time(s.travel, config.servo) for s in a.sweeps)
        else:
            spec = config.axis_x if a.axis == "X" else config.axis_y
            total += axis_time(abs(a.mm), spec)
    return total


def _check_encoder(plan: JobPlan, assembly: CamAssembly, config: MachineConfig) -> None:
    enc = config.encoder
    q = enc.quantize(plan.initial_angle)
    if assembly.arc_of(q) != assembly.arc_of(plan.initial_angle):
        raise EncoderAmbiguity(-1, plan.initial_angle, q, "home position leaves its parking arc")
    for idx, a in enumerate(plan.actions):
        if not isinstance(a, ColumnPlan):
            continue
        for k, s in enumerate(a.sweeps):
            q = enc.quantize(s.end)
            if k == len(a.sweeps) - 1:
                want = a.exit_arc if a.exit_arc is not None else assembly.arc_of(s.end)
                if assembly.arc_of(q) != want:
                    raise EncoderAmbiguity(idx, s.end, q, f"cannot confirm parking arc {want}")
            for cam, peak in engaged_peaks(assembly, s.start, s.end):
                if (q - peak) * s.direction <= 0:
                    raise EncoderAmbiguity(idx, s.end, q, f"cannot confirm cam {cam} passed its peak")


class _Machine:
    """Mutable run state for one execution."""

    def __init__(self, config: MachineConfig):
        self.config = config
        self.assembly = config.assembly
        self.layout = config.layout
        self.profile = config.cam.profile()
        self.thr = threshold_phases(self.profile, self.layout.emboss_threshold_mm)
        self.clock = 0.0
        self.x_steps = 0
        self.y_steps = 0
        self.events: list[Event] = []
        self.paper = VirtualPaper(self.layout.paper_width_mm, self.layout.paper_height_mm)
        self.strikes = 0
        self.expected: list[tuple[float, float]] = []

    @property
    def head(self) -> tuple[float, float]:
        return (self.layout.margin_mm + self.x_steps * self.config.axis_x.step_mm,
                self.layout.margin_mm + self.y_steps * self.config.axis_y.step_mm)

    def log(self, kind: str, duration: float = 0.0, at: float | None = None, **data):
        t = self.clock if at is None else at
        self.events.append(Event(t, kind, duration, tuple(data.items())))

    def move(self, m: AxisMove):
        spec = self.config.axis_x if m.axis == "X" else self.config.axis_y
        dt = axis_time(abs(m.mm), spec)
        steps = spec.steps(m.mm)
        self.log("move", dt, axis=m.axis, mm=m.mm)
        self.clock += dt
        if m.axis == "X":
            self.x_steps += steps
        else:
            self.y_steps += steps

    def _strike(self, cam: int, t: float, peak_mm: float):
        x, y = self.head
        y += cam * self.layout.row_pitch_mm
        self.strikes += 1
        self.log("strike", at=t, cam=cam, x_mm=x, y_mm=y)
        self.paper.emboss(x, y, peak_mm)

    def _lobe_peak(self, lobe_lo: float, a: float, b: float) -> float:
        lo, hi = max(min(a, b), lobe_lo), min(max(a, b), lobe_lo + self.profile.lobe_width)
        rise, dwell = self.profile.rise_angle, self.profile.top_dwell
        if lo <= lobe_lo + rise + dwell and hi >= lobe_lo + rise:
            return self.profile.lift
        return max(follower_displacement(self.profile, lo - lobe_lo),
                   follower_displacement(self.profile, hi - lobe_lo))

    def column(self, col: ColumnPlan):
        x, y = self.head
        for row in range(3):
            if col.pattern >> row & 1:
                self.expected.append((x, y + row * self.layout.row_pitch_mm))
        thr = self.layout.emboss_threshold_mm
        # a pin already past threshold when the paper stops marks it at once
        for cam in range(3):
            if self.assembly.displacement(cam, col.entry) >= thr:
                self._strike(cam, self.clock, self.assembly.displacement(cam, col.entry))
        rate = self.config.servo.shaft_rate
        up, down = self.thr
        for s in col.sweeps:
            dt = servo_time(s.travel, self.config.servo)
            t0 = self.clock
            self.log("sweep", dt, from_deg=s.start, to_deg=s.end)
            hits = []
            lo, hi = min(s.start, s.end), max(s.start, s.end)
            for cam in range(3):
                start = self.assembly.lobe_start(cam)
                k0 = math.floor((lo - start) / 360.0) - 1
                for k in range(k0, k0 + 4):
                    lobe = start + 360.0 * k
                    edge = lobe + up if s.direction > 0 else lobe + down
                    entered = (s.start < edge <= s.end) if s.direction > 0 else (s.end <= edge < s.start)
                    if entered:
                        hits.append((t0 + abs(edge - s.start) / rate, cam,
                                     self._lobe_peak(lobe, s.start, s.end)))
            for t, cam, peak in sorted(hits):
                self._strike(cam, t, peak)
            self.clock = t0 + dt


def execute(plan: JobPlan, config: MachineConfig = MachineConfig(),
            char_count: int | None = None) -> tuple[SimReport, VirtualPaper]:
    assembly = config.assembly
    violations = verify_plan(plan, assembly)
    if violations:
        raise PlanViolation(violations)
    _check_encoder(plan, assembly, config)
    m = _Machine(config)
    for action in plan.actions:
        if isinstance(action, ColumnPlan):
            m.column(action)
        else:
            m.move(action)

    expected = {_key(x, y) for x, y in m.expected}
    spurious = sum(1 for d in m.paper.dots if _key(d.x, d.y) not in expected)
    missing = sum(1 for x, y in m.expected if m.paper.find(x, y) is None)
    profile = config.cam.profile()
    report = SimReport(
        events=m.events,
        total_time=m.clock,
        char_count=len(plan.columns) // 2 if char_count is None else char_count,
        strike_count=m.strikes,
        dot_count=len(m.paper.dots),
        spurious_dot_count=spurious,
        missing_dot_count=missing,
        min_available_force=strike_force_envelope(profile, config.servo.shaft_torque),
        emboss_force_required=config.layout.emboss_force_n,
        max_pressure_angle=max_pressure_angle(profile)[1],
        pressure_angle_limit=config.cam.pressure_angle_limit_deg,
    )
    return report, m.paper


def _nearest(value: float, origin: float, pitch: float, offsets: Sequence[float]):
    best = None
    for j, off in enumerate(offsets):
        k = round((value - origin - off) / pitch)
        err = abs(origin + k * pitch + off - value)
        if best is None or err < best[0]:
            best = (err, k, j)
    return best


def read_back(paper: VirtualPaper, layout: LayoutSpec = LayoutSpec(),
              cell_count: int | None = None) -> list[int]:
    """Read cells off the page, row-major, one line after another.

    Blank cells carry no marks, so without ``cell_count`` the result ends at the
    last embossed cell.
    """
    per_line = layout.cells_per_line
    bits: dict[int, int] = {}
    m = layout.margin_mm
    for d in paper.dots:
        ex, slot, col = _nearest(d.x, m, layout.cell_pitch_mm, (0.0, layout.column_pitch_mm))
        ey, line, row = _nearest(d.y, m, layout.line_pitch_mm,
                                 tuple(r * layout.row_pitch_mm for r in range(3)))
        if math.hypot(ex, ey) > GRID_TOLERANCE or not 0 <= slot < per_line or line < 0:
            raise OffGridDot(d.x, d.y)
        idx = line * per_line + slot
        bits[idx] = bits.get(idx, 0) | 1 << (row + 3 * col)
    n = max(bits) + 1 if bits else 0
    if cell_count is not None:
        if n > cell_count:
            raise ValueError(f"page holds {n} cells, more than the expected {cell_count}")
        n = cell_count
    return [bits.get(i, 0) for i in range(n)]


@dataclass
class EmbossResult:
    text: str | None
    plan: JobPlan
    report: SimReport
    paper: VirtualPaper
    cells: list[int]
    readback_cells: list[int]
    readback_text: str | None

    @property
    def roundtrip_ok(self) -> bool:
        if self.readback_cells != self.cells:
            return False
        return self.text is None or self.readback_text == self.text

    def report_dict(self) -> dict[str, Any]:
        d = self.report.to_dict()
        events = d.pop("events")
        d["roundtrip"] = "ok" if self.roundtrip_ok else "fail"
        d["readback_text"] = self.readback_text
        d["total_travel_deg"] = self.plan.total_travel
        d["events"] = events
        return d


def simulate_plan(plan: JobPlan, config: MachineConfig = MachineConfig(), text: str | None = None,
                  table: TranslationTable = DEFAULT) -> EmbossResult:
    cells = plan.cells()
    report, paper = execute(plan, config, len(text) if text is not None else None)
    back = read_back(paper, config.layout, len(cells))
    try:
        decoded = cells_to_text(back, table)
    except ValueError:
        decoded = None
    return EmbossResult(text, plan, report, paper, cells, back, decoded)


def plan_text(text: str, config: MachineConfig = MachineConfig(),
              table: TranslationTable = DEFAULT) -> JobPlan:
    cells = text_to_cells(text, table)
    return plan_job(cells, config.layout, config.assembly, config.planner.crossing_margin_deg,
                    config.planner.forward_only)


def emboss_text(text: str, config: MachineConfig = MachineConfig(),
                table: TranslationTable = DEFAULT) -> EmbossResult:
    """Translate, plan, run and read back ``text`` in one go."""
    return simulate_plan(plan_text(text, config, table), config, text, table)
