"""Cam-follower kinematics for the three-cam strike shaft.

Angles are in degrees at the public surface and radians inside the motion
laws. A lobe is rise + top dwell + return; the follower sits on the base
circle everywhere else. Three identical-phase lobes start at 0, 120 and 240
degrees of shaft angle and drive the top, middle and bottom pins.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

CAM_SPACING = 120.0
KGCM_TO_NM = 0.0980665
MOTION_LAWS = ("cycloidal", "harmonic")


class CamGeometryError(ValueError):
    pass


class DegenerateProfile(CamGeometryError):
    pass


class InvalidPhase(ValueError):
    def __init__(self, phase: float, lobe_width: float):
        self.phase = phase
        super().__init__(f"phase {phase} outside lobe [0, {lobe_width}]")


@dataclass(frozen=True)
class CamProfile:
    base_radius: float = 5.0
    lift: float = 0.5
    rise_angle: float = 45.0
    top_dwell: float = 0.0
    return_angle: float = 45.0
    motion_law: str = "cycloidal"

    def __post_init__(self):
        if self.lift <= 0 or self.rise_angle <= 0 or self.return_angle <= 0:
            raise DegenerateProfile(
                f"lift, rise and return must be positive "
                f"(lift={self.lift}, rise={self.rise_angle}, return={self.return_angle})"
            )
        if self.base_radius <= 0:
            raise CamGeometryError(f"base radius must be positive, got {self.base_radius}")
        if self.top_dwell < 0:
            raise CamGeometryError(f"top dwell must be >= 0, got {self.top_dwell}")
        if self.motion_law not in MOTION_LAWS:
            raise CamGeometryError(f"unknown motion law {self.motion_law!r}")
        if self.lobe_width >= CAM_SPACING:
            raise CamGeometryError(
                f"lobe width {self.lobe_width} deg leaves no parking gap between cams at 120 deg"
            )

    @property
    def lobe_width(self) -> float:
        return self.rise_angle + self.top_dwell + self.return_angle

    @property
    def peak_phase(self) -> float:
        """Phase of the middle of the full-lift region."""
        return self.rise_angle + self.top_dwell / 2


def _rise(u: float, law: str) -> tuple[float, float]:
    # normalized displacement and d/du on u in [0, 1]
    if law == "cycloidal":
        return u - math.sin(2 * math.pi * u) / (2 * math.pi), 1 - math.cos(2 * math.pi * u)
    return 0.5 * (1 - math.cos(math.pi * u)), 0.5 * math.pi * math.sin(math.pi * u)


def _check_phase(profile: CamProfile, phase: float) -> None:
    if not 0 <= phase <= profile.lobe_width:
        raise InvalidPhase(phase, profile.lobe_width)


def follower_displacement(profile: CamProfile, phase: float) -> float:
    """Follower lift in mm at ``phase`` degrees into the lobe."""
    _check_phase(profile, phase)
    rise, dwell = profile.rise_angle, profile.top_dwell
    if phase <= rise:
        return profile.lift * _rise(phase / rise, profile.motion_law)[0]
    if phase <= rise + dwell:
        return profile.lift
    u = (phase - rise - dwell) / profile.return_angle
    return profile.lift * (1 - _rise(u, profile.motion_law)[0])


def follower_velocity(profile: CamProfile, phase: float) -> float:
    """ds/dphi in mm per radian."""
    _check_phase(profile, phase)
    rise, dwell = profile.rise_angle, profile.top_dwell
    if phase <= rise:
        beta = math.radians(rise)
        return profile.lift / beta * _rise(phase / rise, profile.motion_law)[1]
    if phase <= rise + dwell:
        return 0.0
    gamma = math.radians(profile.return_angle)
    u = (phase - rise - dwell) / profile.return_angle
    return -profile.lift / gamma * _rise(u, profile.motion_law)[1]


def pressure_angle(profile: CamProfile, phase: float) -> float:
    v = follower_velocity(profile, phase)
    s = follower_displacement(profile, phase)
    return math.degrees(math.atan(abs(v) / (profile.base_radius + s)))


@lru_cache(maxsize=32)
def max_pressure_angle(profile: CamProfile) -> tuple[float, float]:
    """Return (phase, angle) of the largest pressure angle over the lobe."""
    best = (0.0, 0.0)
    segments = [(0.0, profile.rise_angle),
                (profile.rise_angle + profile.top_dwell, profile.lobe_width)]
    for lo, hi in segments:
        res = minimize_scalar(lambda p: -pressure_angle(profile, p), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-9})
        # guard against a local optimum: compare with a coarse scan
        grid = np.linspace(lo, hi, 181)
        coarse = max(grid, key=lambda p: pressure_angle(profile, float(p)))
        for p in (float(res.x), float(coarse)):
            a = pressure_angle(profile, p)
            if a > best[1]:
                best = (p, a)
    return best


def max_rise_slope(profile: CamProfile) -> float:
    """Largest |ds/dphi| over the rise, mm/rad."""
    beta = math.radians(profile.rise_angle)
    if profile.motion_law == "cycloidal":
        return 2 * profile.lift / beta
    return math.pi * profile.lift / (2 * beta)


def strike_force_envelope(profile: CamProfile, shaft_torque: float) -> float:
    """Least follower force (N) available while the pin rises.

    Quasi-static work balance T dphi = F ds with friction ignored, so this is
    a lower-bound feasibility figure, not a contact-force prediction.
    """
    if shaft_torque <= 0:
        raise ValueError(f"shaft torque must be positive, got {shaft_torque}")
    slope = max_rise_slope(profile) * 1e-3
    if slope <= 0:
        raise DegenerateProfile("profile has no rise")
    return shaft_torque / slope


@lru_cache(maxsize=32)
def threshold_phases(profile: CamProfile, threshold: float) -> tuple[float, float]:
    """Phases at which the follower passes ``threshold`` mm on rise and return."""
    if not 0 < threshold < profile.lift:
        raise ValueError(f"threshold {threshold} must lie in (0, lift={profile.lift})")
    rise_end = profile.rise_angle
    ret_start = profile.rise_angle + profile.top_dwell
    up = brentq(lambda p: follower_displacement(profile, p) - threshold, 0.0, rise_end, xtol=1e-13)
    down = brentq(lambda p: follower_displacement(profile, p) - threshold,
                  ret_start, profile.lobe_width, xtol=1e-13)
    return up, down


def profile_points(profile: CamProfile, n: int = 360) -> list[tuple[float, float]]:
    """``n`` equally spaced (theta_deg, radius_mm) samples; the lobe starts at 0 deg."""
    if n < 8:
        raise ValueError(f"need at least 8 samples, got {n}")
    out = []
    for j in range(n):
        theta = 360.0 * j / n
        s = follower_displacement(profile, theta) if theta <= profile.lobe_width else 0.0
        out.append((theta, profile.base_radius + s))
    return out


def profile_csv(points: Sequence[tuple[float, float]]) -> str:
    buf = io.StringIO()
    buf.write("theta_deg,radius_mm\n")
    for theta, r in points:
        buf.write(f"{theta:.6f},{r:.6f}\n")
    return buf.getvalue()


def profile_svg(points: Sequence[tuple[float, float]], profile: CamProfile, size: int = 400) -> str:
    """Polar plot of the cam outline with the base circle for reference."""
    rmax = max(r for _, r in points)
    scale = 0.45 * size / rmax
    c = size / 2
    coords = []
    for theta, r in points:
        t = math.radians(theta)
        coords.append(f"{c + scale * r * math.cos(t):.3f},{c - scale * r * math.sin(t):.3f}")
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<circle cx="{c:.3f}" cy="{c:.3f}" r="{scale * profile.base_radius:.3f}" '
        'fill="none" stroke="#bbbbbb" stroke-dasharray="4 3"/>',
        f'<polygon points="{" ".join(coords)}" fill="none" stroke="#000000" stroke-width="1.5"/>',
        f'<line x1="{c:.3f}" y1="{c:.3f}" x2="{c + scale * rmax:.3f}" y2="{c:.3f}" stroke="#cc0000"/>',
        "</svg>",
        "",
    ]
    return "\n".join(lines)


@dataclass(frozen=True)
class CamAssembly:
    """Three cams on one shaft; cam ``i`` drives pin row ``i`` (0 = top)."""

    profiles: tuple[CamProfile, CamProfile, CamProfile] = (CamProfile(),) * 3

    def __post_init__(self):
        if len(self.profiles) != 3:
            raise CamGeometryError("the head has exactly three cams")

    @classmethod
    def uniform(cls, profile: CamProfile) -> "CamAssembly":
        return cls((profile, profile, profile))

    def lobe_start(self, cam: int) -> float:
        return cam * CAM_SPACING

    def lobe_end(self, cam: int) -> float:
        return cam * CAM_SPACING + self.profiles[cam].lobe_width

    def peak_angle(self, cam: int) -> float:
        return cam * CAM_SPACING + self.profiles[cam].peak_phase

    def arc_bounds(self, arc: int) -> tuple[float, float]:
        """Open parking arc ``arc``: from the end of lobe ``arc`` to the start of the next."""
        return self.lobe_end(arc), (arc + 1) * CAM_SPACING

    def gap_width(self) -> float:
        return min(hi - lo for lo, hi in map(self.arc_bounds, range(3)))

    def arc_of(self, angle: float) -> int | None:
        a = angle % 360.0
        for k in range(3):
            lo, hi = self.arc_bounds(k)
            if lo < a < hi:
                return k
        return None

    def arc_adjacent_peaks(self, arc: int) -> tuple[int, int]:
        return arc, (arc + 1) % 3

    def displacement(self, cam: int, shaft_angle: float) -> float:
        phase = (shaft_angle - self.lobe_start(cam)) % 360.0
        profile = self.profiles[cam]
        if phase > profile.lobe_width:
            return 0.0
        return follower_displacement(profile, phase)

    def peak_copies(self, lo: float, hi: float) -> Iterator[tuple[int, float]]:
        """Unwrapped peak positions in the closed range [lo, hi], ascending."""
        found = []
        for cam in range(3):
            p = self.peak_angle(cam)
            k = math.ceil((lo - p) / 360.0)
            while p + 360.0 * k <= hi:
                found.append((p + 360.0 * k, cam))
                k += 1
        for pos, cam in sorted(found):
            yield cam, pos
