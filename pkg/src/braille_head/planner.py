"""Servo sweep planning for column-wise embossing.

The three lobes cut the shaft circle into three parking arcs. While the paper
dwells under the head, the shaft sweeps back and forth; every cam whose
full-lift peak lies inside a sweep's angular range strikes its pin. A column
therefore needs a sweep sequence whose engaged peaks are exactly the rows to
emboss, ending parked in an arc so the paper can move.

Sweep ranges are closed: reversing exactly on a peak counts as striking it,
and every engaged peak must be overshot by the crossing margin before the
sweep ends. The minimal path covering a given angular hull is a zigzag with
at most two reversals, so :func:`plan_column` searches only those shapes,
with turning points just past a peak.
"""

from __future__ import annotations

import bisect
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

from .braille import cell_to_columns, check_cell, columns_to_cell
from .machine import LayoutSpec
from .mechanism import CamAssembly

EPS = 1e-6
DEFAULT_MARGIN = 1.0
# half-width of the unwrapped window searched around the entry angle; one-way
# paths may need nearly two turns to reach a far arc
_WINDOW = 480.0
_FORWARD_WINDOW = 840.0


class PlanningError(Exception):
    pass


class Infeasible(PlanningError):
    def __init__(self, pattern: int, entry_arc: int | None, exit_arc: int | None):
        self.pattern = pattern
        self.entry_arc = entry_arc
        self.exit_arc = exit_arc
        super().__init__(
            f"column pattern {pattern:03b} cannot be embossed from arc {entry_arc} "
            f"to arc {exit_arc} without a transit strike"
        )


class PlannerInfeasible(PlanningError):
    pass


class LayoutOverflow(PlanningError):
    pass


def required_cams(pattern: int) -> int:
    """Cam bitmask for a row mask; cam i drives row i, so this is the identity."""
    if not 0 <= pattern <= 7:
        raise ValueError(f"column pattern {pattern} outside 0..7")
    return pattern


def angle_diff(a: float, b: float) -> float:
    d = (a - b) % 360.0
    return min(d, 360.0 - d)


@dataclass(frozen=True)
class SweepSegment:
    start: float
    end: float
    strikes: tuple[int, ...] = ()

    @property
    def travel(self) -> float:
        return abs(self.end - self.start)

    @property
    def direction(self) -> int:
        return 1 if self.end > self.start else -1


@dataclass(frozen=True)
class ColumnPlan:
    pattern: int
    entry: float
    sweeps: tuple[SweepSegment, ...]
    exit_arc: int | None

    @property
    def travel(self) -> float:
        return sum(s.travel for s in self.sweeps)

    @property
    def exit_angle(self) -> float:
        return self.sweeps[-1].end if self.sweeps else self.entry


@dataclass(frozen=True)
class AxisMove:
    axis: str
    mm: float


Action = Union[ColumnPlan, AxisMove]


@dataclass(frozen=True)
class JobPlan:
    initial_angle: float
    actions: tuple[Action, ...] = ()
    crossing_margin: float = DEFAULT_MARGIN

    @property
    def total_travel(self) -> float:
        return sum(a.travel for a in self.actions if isinstance(a, ColumnPlan))

    @property
    def columns(self) -> list[ColumnPlan]:
        return [a for a in self.actions if isinstance(a, ColumnPlan)]

    def cells(self) -> list[int]:
        cols = self.columns
        if len(cols) % 2:
            raise ValueError("plan has an odd number of columns")
        return [columns_to_cell(cols[i].pattern, cols[i + 1].pattern) for i in range(0, len(cols), 2)]

    def cell_positions(self) -> list[tuple[int, int]]:
        """(line, slot) of every cell, recovered from the move sequence."""
        out = []
        line = slot = 0
        ncols = 0
        for a in self.actions:
            if isinstance(a, ColumnPlan):
                if ncols % 2 == 0:
                    out.append((line, slot))
                ncols += 1
            elif a.axis == "Y":
                line += 1
                slot = 0
            elif a.mm > 0 and ncols % 2 == 0:
                slot += 1
        return out

    def to_json(self) -> str:
        return plan_to_json(self)


# ---------------------------------------------------------------------------
# geometry of a sweep


def _peak_table(assembly: CamAssembly, center: float, window: float) -> tuple[list[float], list[int]]:
    copies = list(assembly.peak_copies(center - window - 360.0, center + window + 360.0))
    return [p for _, p in copies], [c for c, _ in copies]


def engaged_peaks(assembly: CamAssembly, start: float, end: float) -> list[tuple[int, float]]:
    """(cam, unwrapped peak angle) inside the closed range swept from start to end."""
    lo, hi = min(start, end), max(start, end)
    return list(assembly.peak_copies(lo - EPS, hi + EPS))


def shallow_crossings(engaged: Iterable[tuple[int, float]], start: float, end: float,
                      margin: float) -> list[tuple[int, float]]:
    """Engaged peaks the sweep does not carry ``margin`` degrees past."""
    if end > start:
        return [(c, p) for c, p in engaged if p > end - margin + EPS]
    return [(c, p) for c, p in engaged if p < end + margin - EPS]


def _strike_mask(positions: list[float], cams: list[int], path: Sequence[float],
                 margin: float) -> int | None:
    mask = 0
    for a, b in zip(path, path[1:]):
        lo, hi = (a, b) if a < b else (b, a)
        i = bisect.bisect_left(positions, lo - EPS)
        j = bisect.bisect_right(positions, hi + EPS)
        if i == j:
            continue
        if b > a:
            if positions[j - 1] > b - margin + EPS:
                return None
        elif positions[i] < b + margin - EPS:
            return None
        for k in range(i, j):
            mask |= 1 << cams[k]
    return mask


def parking_points(assembly: CamAssembly, margin: float) -> list[tuple[int, float]]:
    """The two extreme rest angles of each arc, ``margin`` inside its edges."""
    pts = []
    for k in range(3):
        lo, hi = assembly.arc_bounds(k)
        pts.append((k, (lo + margin) % 360.0))
        pts.append((k, (hi - margin) % 360.0))
    return pts


def _copies_near(angle: float, center: float, window: float = _WINDOW) -> list[float]:
    base = angle + 360.0 * math.floor((center - angle) / 360.0)
    return [base + 360.0 * k for k in range(-3, 5) if abs(base + 360.0 * k - center) <= window]


def _arc_targets(assembly: CamAssembly, arc: int, entry: float, margin: float,
                 window: float = _WINDOW) -> list[float]:
    lo, hi = assembly.arc_bounds(arc)
    out = _copies_near(lo + margin, entry, window) + _copies_near(hi - margin, entry, window)
    e = entry % 360.0
    for shift in (-360.0, 0.0, 360.0):
        if lo + margin - EPS <= e + shift <= hi - margin + EPS:
            out.append(entry)
    return sorted(set(out))


def _key(cost: float, path: Sequence[float], arc: int | None) -> tuple:
    first = 0 if len(path) < 2 or path[1] > path[0] else 1
    return (round(cost, 6), len(path) - 1, first, -1 if arc is None else arc, tuple(path))


@lru_cache(maxsize=8192)
def _search(assembly: CamAssembly, required: int, entry: float,
            targets: tuple[float, ...] | None, margin: float,
            forward_only: bool) -> tuple[float, tuple[float, ...]] | None:
    """Cheapest valid path from ``entry``; ends on one of ``targets`` if given."""
    window = _FORWARD_WINDOW if forward_only else _WINDOW
    positions, cams = _peak_table(assembly, entry, window)
    turns = sorted({p + d for p in positions if abs(p - entry) <= window
                    for d in (-margin, margin)})
    best = None
    best_key = None

    def consider(path: tuple[float, ...]):
        nonlocal best, best_key
        if forward_only and any(b < a for a, b in zip(path, path[1:])):
            return
        if _strike_mask(positions, cams, path, margin) != required:
            return
        cost = sum(abs(b - a) for a, b in zip(path, path[1:]))
        arc = assembly.arc_of(path[-1])
        key = _key(cost, path, arc)
        if best_key is None or key < best_key:
            best, best_key = (cost, path), key

    if targets is None:
        consider((entry,))
        for x in turns:
            consider((entry, x))
            for y in turns:
                if (x - entry) * (y - x) < 0:
                    consider((entry, x, y))
        return best

    for f in targets:
        consider((entry,) if f == entry else (entry, f))
    for x in turns:
        up = x > entry
        for f in targets:
            if (f < x) == up and f != x:
                consider((entry, x, f))
        for y in turns:
            if (y < x) != up or y == x:
                continue
            for f in targets:
                if (f > y) == up and f != y:
                    consider((entry, x, y, f))
    return best


def _build_column(assembly: CamAssembly, pattern: int, entry: float, path: Sequence[float],
                  exit_arc: int | None) -> ColumnPlan:
    sweeps = []
    for a, b in zip(path, path[1:]):
        strikes = tuple(sorted({c for c, _ in engaged_peaks(assembly, a, b)}))
        sweeps.append(SweepSegment(a, b, strikes))
    return ColumnPlan(pattern, entry, tuple(sweeps), exit_arc)


def reachable_arcs(current: int, allowed_peaks: Iterable[int]) -> set[int]:
    """Arcs reachable from ``current`` crossing only peaks in ``allowed_peaks``.

    Arc k sits between peak k and peak k+1 (mod 3), so peak p joins arcs
    p-1 and p.
    """
    allowed = set(allowed_peaks)
    seen = {current}
    frontier = [current]
    while frontier:
        arc = frontier.pop()
        for peak, nxt in ((arc, (arc - 1) % 3), ((arc + 1) % 3, (arc + 1) % 3)):
            if peak in allowed and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def plan_column(pattern: int, entry_angle: float, required_exit_arc: int | None = None,
                assembly: CamAssembly = CamAssembly(), crossing_margin: float = DEFAULT_MARGIN,
                forward_only: bool = False) -> ColumnPlan:
    """Minimal-travel sweeps that strike exactly the rows in ``pattern``.

    With ``required_exit_arc`` the shaft ends parked in that arc, at least
    ``crossing_margin`` inside its edges; otherwise it stops after the last
    overshoot. Raises :class:`Infeasible` when no sweep sequence works.
    """
    required = required_cams(pattern)
    targets = None
    if required_exit_arc is not None:
        if required_exit_arc not in (0, 1, 2):
            raise ValueError(f"parking arc must be 0, 1 or 2, got {required_exit_arc}")
        window = _FORWARD_WINDOW if forward_only else _WINDOW
        targets = tuple(_arc_targets(assembly, required_exit_arc, entry_angle, crossing_margin, window))
    found = _search(assembly, required, float(entry_angle), targets, float(crossing_margin),
                    forward_only)
    if found is None:
        raise Infeasible(pattern, assembly.arc_of(entry_angle), required_exit_arc)
    _, path = found
    exit_arc = required_exit_arc if required_exit_arc is not None else assembly.arc_of(path[-1])
    return _build_column(assembly, pattern, float(entry_angle), path, exit_arc)


def layout_cells(n: int, layout: LayoutSpec) -> list[list[int]]:
    """Split ``n`` cell indices into lines of at most ``cells_per_line``."""
    per_line = layout.cells_per_line
    if per_line < 1:
        raise LayoutOverflow("a single cell does not fit between the margins")
    lines = [list(range(i, min(i + per_line, n))) for i in range(0, n, per_line)]
    if len(lines) > layout.lines_per_page:
        raise LayoutOverflow(
            f"text needs {len(lines)} lines but the page holds {layout.lines_per_page}"
        )
    return lines


@lru_cache(maxsize=64)
def _transitions(assembly: CamAssembly, margin: float, forward_only: bool):
    """[pattern][from point][to point] -> cheapest (travel, path) or None."""
    points = parking_points(assembly, margin)
    window = _FORWARD_WINDOW if forward_only else _WINDOW
    table = []
    for pattern in range(8):
        rows = []
        for _, entry in points:
            rows.append([_search(assembly, required_cams(pattern), entry,
                                 tuple(_copies_near(target, entry, window)), margin, forward_only)
                         for _, target in points])
        table.append(rows)
    return table


def plan_job(cells: Sequence[int], layout: LayoutSpec = LayoutSpec(),
             assembly: CamAssembly = CamAssembly(), crossing_margin: float = DEFAULT_MARGIN,
             forward_only: bool = False) -> JobPlan:
    """Plan a whole page: dynamic program over columns x parking points."""
    cells = [check_cell(c) for c in cells]
    lines = layout_cells(len(cells), layout)
    patterns = [col for c in cells for col in cell_to_columns(c)]
    points = parking_points(assembly, crossing_margin)
    margin = float(crossing_margin)
    table = _transitions(assembly, margin, forward_only)

    # dp[t]: (travel, sweep count) of the best prefix ending parked at point t
    dp: list[tuple[float, int] | None] = [(0.0, 0)] * len(points)
    back: list[list[int]] = []
    for col, pattern in enumerate(patterns):
        new: list[tuple[float, int] | None] = [None] * len(points)
        ptr = [-1] * len(points)
        for t in range(len(points)):
            for s in range(len(points)):
                found = table[pattern][s][t]
                if dp[s] is None or found is None:
                    continue
                cost, path = found
                cand = (round(dp[s][0] + cost, 6), dp[s][1] + len(path) - 1)
                if new[t] is None or cand < new[t]:
                    new[t], ptr[t] = cand, s
        if all(v is None for v in new):
            raise PlannerInfeasible(f"no parking choice embosses column {col} (pattern {pattern:03b})")
        dp = new
        back.append(ptr)

    if not patterns:
        return JobPlan(points[0][1], (), margin)

    t = min((i for i, v in enumerate(dp) if v is not None), key=lambda i: (dp[i], i))
    chosen = []
    for col in range(len(patterns) - 1, -1, -1):
        s = back[col][t]
        chosen.append((t, table[patterns[col]][s][t][1]))
        t = s
    initial = points[t][1]
    chosen.reverse()

    columns = []
    entry = initial
    for pattern, (t, path) in zip(patterns, chosen):
        arc = points[t][0]
        column = _build_column(assembly, pattern, entry, path, arc)
        columns.append(column)
        entry = column.exit_angle % 360.0

    return JobPlan(initial, tuple(_interleave(columns, lines, layout)), margin)


def _interleave(columns: list[ColumnPlan], lines: list[list[int]], layout: LayoutSpec):
    inner = layout.column_pitch_mm
    between = layout.cell_pitch_mm - layout.column_pitch_mm
    for li, line in enumerate(lines):
        if li:
            yield AxisMove("Y", layout.line_pitch_mm)
        for pos, cell in enumerate(line):
            if pos:
                yield AxisMove("X", between)
            yield columns[2 * cell]
            yield AxisMove("X", inner)
            yield columns[2 * cell + 1]
        if li + 1 < len(lines):
            yield AxisMove("X", -((len(line) - 1) * layout.cell_pitch_mm + inner))


# ---------------------------------------------------------------------------
# static checking


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    detail: str = ""


def verify_plan(plan: JobPlan, assembly: CamAssembly = CamAssembly()) -> list[Violation]:
    """Check a plan without simulating it; an empty list means it is sound."""
    out: list[Violation] = []
    margin = plan.crossing_margin
    angle = plan.initial_angle
    if assembly.arc_of(angle) is None:
        out.append(Violation("EngagedDuringMove", -1, f"initial angle {angle} is not parked"))
    for idx, action in enumerate(plan.actions):
        if isinstance(action, AxisMove):
            if assembly.arc_of(angle) is None:
                out.append(Violation("EngagedDuringMove", idx,
                                     f"shaft at {angle:.4f} deg while the {action.axis} axis moves"))
            continue
        if angle_diff(action.entry, angle) > EPS:
            out.append(Violation("DiscontinuousShaft", idx,
                                 f"entry {action.entry:.4f} but shaft at {angle:.4f}"))
        cur = action.entry
        struck = 0
        for sweep in action.sweeps:
            if angle_diff(sweep.start, cur) > EPS:
                out.append(Violation("DiscontinuousShaft", idx,
                                     f"sweep starts at {sweep.start:.4f} but shaft at {cur:.4f}"))
            engaged = engaged_peaks(assembly, sweep.start, sweep.end)
            for cam, peak in shallow_crossings(engaged, sweep.start, sweep.end, margin):
                out.append(Violation("ShallowCrossing", idx,
                                     f"cam {cam} peak {peak:.4f} overshot by less than {margin}"))
            for cam, _ in engaged:
                struck |= 1 << cam
            cur = sweep.end
        need = required_cams(action.pattern)
        for cam in range(3):
            bit = 1 << cam
            if struck & bit and not need & bit:
                out.append(Violation("SpuriousStrike", idx, f"cam {cam} struck but not in pattern"))
            elif need & bit and not struck & bit:
                out.append(Violation("MissingStrike", idx, f"cam {cam} required but never struck"))
        if action.exit_arc is not None and assembly.arc_of(cur) != action.exit_arc:
            out.append(Violation("ExitOutsideArc", idx,
                                 f"column ends at {cur:.4f}, outside arc {action.exit_arc}"))
        angle = cur
    return out


# ---------------------------------------------------------------------------
# JSON


def _f(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def plan_to_json(plan: JobPlan) -> str:
    buf = io.StringIO()
    buf.write("{\n")
    buf.write(f'  "initial_angle_deg": {_f(plan.initial_angle)},\n')
    buf.write('  "actions": [')
    for i, a in enumerate(plan.actions):
        buf.write("," if i else "")
        buf.write("\n    ")
        if isinstance(a, ColumnPlan):
            sweeps = ", ".join(f'{{"from": {_f(s.start)}, "to": {_f(s.end)}}}' for s in a.sweeps)
            arc = "null" if a.exit_arc is None else str(a.exit_arc)
            buf.write(f'{{"type": "column", "entry": {_f(a.entry)}, "sweeps": [{sweeps}], '
                      f'"exit_arc": {arc}, "pattern": {a.pattern}}}')
        else:
            buf.write(f'{{"type": "move", "axis": "{a.axis}", "mm": {_f(a.mm)}}}')
    buf.write("\n  ],\n" if plan.actions else "],\n")
    buf.write(f'  "total_travel_deg": {_f(plan.total_travel)},\n')
    buf.write(f'  "crossing_margin_deg": {_f(plan.crossing_margin)}\n')
    buf.write("}\n")
    return buf.getvalue()


def plan_from_json(text: str, assembly: CamAssembly = CamAssembly()) -> JobPlan:
    data = json.loads(text)
    actions: list[Action] = []
    for raw in data["actions"]:
        if raw["type"] == "column":
            sweeps = tuple(
                SweepSegment(float(s["from"]), float(s["to"]),
                             tuple(sorted({c for c, _ in engaged_peaks(assembly, s["from"], s["to"])})))
                for s in raw["sweeps"]
            )
            actions.append(ColumnPlan(int(raw.get("pattern", 0)), float(raw["entry"]), sweeps,
                                      raw["exit_arc"]))
        elif raw["type"] == "move":
            if raw["axis"] not in ("X", "Y"):
                raise ValueError(f"unknown axis {raw['axis']!r}")
            actions.append(AxisMove(raw["axis"], float(raw["mm"])))
        else:
            raise ValueError(f"unknown action type {raw['type']!r}")
    return JobPlan(float(data["initial_angle_deg"]), tuple(actions),
                   float(data.get("crossing_margin_deg", DEFAULT_MARGIN)))
