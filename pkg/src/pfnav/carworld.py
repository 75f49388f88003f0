"""Top-down car on an occupancy-grid track with five noisy distance radars.

Occupancy arrays are indexed ``[y, x]`` with ``True`` marking wall cells.
Headings are in degrees with screen orientation (y grows downward), so a
positive turn rotates clockwise on screen.

Track file format (plain text)::

    <width> <height> <spawn_x> <spawn_y> <spawn_theta>
    <row 0>
    ...
    <row height-1>

Each row is a run-length encoding made of ``<count><symbol>`` tokens
separated by spaces, where symbol ``#`` is wall and ``.`` is free, e.g.
``1# 8. 1#``. Runs in a row must add up to ``width``. The outer border is
sealed on load regardless of what the file says.
"""

from __future__ import annotations

import enum
import functools
import math
import os
import re
from dataclasses import dataclass, field

import numba
import numpy as np
from numpy.typing import NDArray

from . import estimator

RADAR_ANGLES = (-90.0, -45.0, 0.0, 45.0, 90.0)
OVAL_SIZE = (2000, 2080)
OVAL_SPAWN = (830.0, 920.0, 0.0)


class TrackError(ValueError):
    """Malformed track file or invalid spawn."""


class CarAction(enum.IntEnum):
    TURN_LEFT = 0
    TURN_RIGHT = 1
    SLOW_DOWN = 2
    SPEED_UP = 3


@dataclass(frozen=True)
class CarConfig:
    sigma_theta: float = 0.0
    sigma_dist: float = 0.0
    max_steps: int = 500
    turn_deg: float = 5.0
    speed_step: float = 2.0
    speed_min: float = 10.0
    speed_max: float = 30.0
    start_speed: float = 20.0
    radar_range: float = 300.0
    car_size: float = 40.0
    particles: int = 30
    process_sigma: float = 2.0
    radar_angles: tuple[float, ...] = RADAR_ANGLES


@dataclass(frozen=True)
class CarState:
    x: float
    y: float
    theta: float
    v: float


@dataclass(frozen=True)
class RadarReading:
    relative_angle: float
    true_distance: float
    noisy_distance: float
    filtered_distance: float = math.nan


@dataclass(frozen=True, eq=False)
class Track:
    occupancy: NDArray[np.bool_]
    spawn: tuple[float, float, float]
    center: tuple[float, float] | None = field(default=None)

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @functools.cached_property
    def gate_center(self) -> tuple[float, float]:
        """Pivot for angular checkpoint gates (free-space centroid by default)."""
        if self.center is not None:
            return self.center
        ys, xs = np.nonzero(~self.occupancy)
        return float(xs.mean()), float(ys.mean())

    def spawn_state(self, speed: float = 20.0) -> CarState:
        x, y, th = self.spawn
        return CarState(x, y, th, speed)


# -- geometry kernels ---------------------------------------------------------


@numba.njit(cache=True)
def _ray_length(occ, x, y, angle_rad, max_range):
    h, w = occ.shape
    c = math.cos(angle_rad)
    s = math.sin(angle_rad)
    limit = int(max_range)
    for r in range(1, limit + 1):
        px = x + r * c
        py = y + r * s
        if px < 0.0 or py < 0.0:
            return float(r)
        ix = int(px)
        iy = int(py)
        if ix >= w or iy >= h or occ[iy, ix]:
            return float(r)
    return max_range


@numba.njit(cache=True)
def _corners_hit(occ, x, y, theta_rad, half):
    h, w = occ.shape
    c = math.cos(theta_rad)
    s = math.sin(theta_rad)
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            px = x + sx * half * c - sy * half * s
            py = y + sx * half * s + sy * half * c
            if px < 0.0 or py < 0.0:
                return True
            ix = int(px)
            iy = int(py)
            if ix >= w or iy >= h or occ[iy, ix]:
                return True
    return False


def _inside_free(track: Track, x: float, y: float) -> bool:
    if not (0 <= x < track.width and 0 <= y < track.height):
        return False
    return not track.occupancy[int(y), int(x)]


def ray_distance(track: Track, x: float, y: float, angle_deg: float, max_range: float = 300.0) -> float:
    """Distance in pixels to the first wall cell along a ray, capped at max_range."""
    return _ray_length(track.occupancy, float(x), float(y), math.radians(angle_deg), float(max_range))


def collision_check(track: Track, car: CarState, size: float = 40.0) -> bool:
    """True if any rotated footprint corner is on a wall or off the map."""
    return bool(_corners_hit(track.occupancy, float(car.x), float(car.y), math.radians(car.theta), size / 2))


# -- tracks -------------------------------------------------------------------


def seal_border(occ: NDArray[np.bool_]) -> NDArray[np.bool_]:
    occ = occ.copy()
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return occ


def _validate_spawn(track: Track, size: float = 40.0) -> Track:
    x, y, th = track.spawn
    if not _inside_free(track, x, y) or collision_check(track, CarState(x, y, th, 0.0), size):
        raise TrackError(f"spawn ({x}, {y}) lies in a wall or its footprint overlaps one")
    return track


@functools.lru_cache(maxsize=4)
def oval_track(
    width: int = OVAL_SIZE[0],
    height: int = OVAL_SIZE[1],
    center: tuple[float, float] = (1000.0, 1420.0),
    semi_axes: tuple[float, float] = (800.0, 500.0),
    half_width: float = 100.0,
    spawn: tuple[float, float, float] = OVAL_SPAWN,
) -> Track:
    """Elliptical ring course; the spawn sits on the top straight heading +x."""
    cx, cy = center
    a, b = semi_axes
    ys, xs = np.mgrid[0:height, 0:width]
    dx = xs + 0.5 - cx
    dy = ys + 0.5 - cy
    outer = (dx / (a + half_width)) ** 2 + (dy / (b + half_width)) ** 2 <= 1.0
    inner = (dx / (a - half_width)) ** 2 + (dy / (b - half_width)) ** 2 < 1.0
    occ = seal_border(~(outer & ~inner))
    occ.setflags(write=False)
    return _validate_spawn(Track(occ, spawn, center))


_RUN = re.compile(r"(\d+)([#.])")


def parse_track(text: str, source: str = "<string>", car_size: float = 40.0) -> Track:
    """Parse the run-length track format; the spawn must fit a ``car_size`` footprint."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise TrackError(f"{source}:1: empty track file")
    header = lines[0].split()
    if len(header) != 5:
        raise TrackError(f"{source}:1: header needs 'width height spawn_x spawn_y spawn_theta'")
    try:
        width, height = int(header[0]), int(header[1])
        spawn = (float(header[2]), float(header[3]), float(header[4]))
    except ValueError as exc:
        raise TrackError(f"{source}:1: bad header value ({exc})") from None
    if width < 3 or height < 3:
        raise TrackError(f"{source}:1: grid must be at least 3x3")
    body = lines[1:]
    if len(body) != height:
        raise TrackError(f"{source}:{len(lines) + 1}: expected {height} rows, found {len(body)}")
    occ = np.zeros((height, width), dtype=bool)
    for row, line in enumerate(body):
        lineno = row + 2
        col = 0
        for token in line.split():
            m = _RUN.fullmatch(token)
            if m is None:
                raise TrackError(f"{source}:{lineno}: bad run token {token!r}")
            n = int(m.group(1))
            if col + n > width:
                raise TrackError(f"{source}:{lineno}: row longer than width {width}")
            occ[row, col : col + n] = m.group(2) == "#"
            col += n
        if col != width:
            raise TrackError(f"{source}:{lineno}: row covers {col} cells, expected {width}")
    return _validate_spawn(Track(seal_border(occ), spawn), car_size)


def format_track(track: Track) -> str:
    x, y, th = track.spawn
    out = [f"{track.width} {track.height} {x:g} {y:g} {th:g}"]
    for row in track.occupancy:
        edges = np.flatnonzero(np.diff(row.astype(np.int8))) + 1
        bounds = np.concatenate([[0], edges, [row.size]])
        out.append(" ".join(f"{e - s}{'#' if row[s] else '.'}" for s, e in zip(bounds[:-1], bounds[1:])))
    return "\n".join(out) + "\n"


def load_track(source: str | os.PathLike, car_size: float = 40.0) -> Track:
    """Load a track file, or the builtin ``"oval"``."""
    if str(source) == "oval":
        return oval_track()
    with open(source) as fh:
        return parse_track(fh.read(), str(source), car_size)


# -- dynamics and sensing -------------------------------------------------------


def step(track: Track, car: CarState, action: CarAction | int, cfg: CarConfig = CarConfig()) -> tuple[CarState, bool]:
    theta, v = car.theta, car.v
    if action == CarAction.TURN_LEFT:
        theta -= cfg.turn_deg
    elif action == CarAction.TURN_RIGHT:
        theta += cfg.turn_deg
    elif action == CarAction.SLOW_DOWN:
        v -= cfg.speed_step
    elif action == CarAction.SPEED_UP:
        v += cfg.speed_step
    else:
        raise ValueError(f"unknown action {action!r}")
    v = min(max(v, cfg.speed_min), cfg.speed_max)
    theta %= 360.0
    rad = math.radians(theta)
    moved = CarState(car.x + v * math.cos(rad), car.y + v * math.sin(rad), theta, v)
    return moved, collision_check(track, moved, cfg.car_size)


def cast_radar(
    track: Track,
    car: CarState,
    relative_angle: float,
    rng: np.random.Generator,
    cfg: CarConfig = CarConfig(),
) -> RadarReading:
    """One noisy radar measurement.

    ``true_distance`` is measured along the nominal beam; the reported
    distance is taken along a beam jittered by ``sigma_theta`` degrees, then
    perturbed by ``sigma_dist`` pixels and clamped to [0, radar_range].
    """
    if not _inside_free(track, car.x, car.y):
        raise ValueError(f"car centre ({car.x:.1f}, {car.y:.1f}) is not in free space")
    nominal = car.theta + relative_angle
    true_d = ray_distance(track, car.x, car.y, nominal, cfg.radar_range)
    jitter = cfg.sigma_theta * rng.standard_normal()
    beam_d = ray_distance(track, car.x, car.y, nominal + jitter, cfg.radar_range) if jitter else true_d
    noisy = beam_d + cfg.sigma_dist * rng.standard_normal()
    return RadarReading(relative_angle, true_d, min(max(noisy, 0.0), cfg.radar_range))


def true_distances(track: Track, car: CarState, cfg: CarConfig = CarConfig()) -> NDArray[np.float64]:
    return np.array([ray_distance(track, car.x, car.y, car.theta + a, cfg.radar_range) for a in cfg.radar_angles])


class RadarFilter:
    """Scalar particle filter tracking one radar's wall distance.

    The motion model shifts every particle by the change in geometric beam
    length between the previous and current pose, i.e. the distance change
    the control would produce on a noise-free sensor.
    """

    def __init__(self, cfg: CarConfig, rng: np.random.Generator) -> None:
        self.cfg = cfg
        self.rng = rng
        self.exact = cfg.sigma_dist == 0
        r = cfg.radar_range
        self.pf = estimator.ParticleFilter(
            cfg.particles,
            lambda p, delta: np.clip(p + delta, 0.0, r),
            estimator.NoiseSpec(max(cfg.sigma_dist, 0.0), cfg.process_sigma),
            rng,
        )
        self.started = False

    def update(self, z: float, delta: float = 0.0) -> float:
        """Fold in measurement ``z`` after a motion that changed the beam length by ``delta``."""
        r = self.cfg.radar_range
        if self.exact:
            # a noise-free sensor leaves nothing to filter
            return min(max(z, 0.0), r)
        if not self.started:
            self.started = True
            est = self.pf.reset(estimator.gaussian_prior([z], self.cfg.sigma_dist))
        else:
            est = self.pf.step(delta, [z])
        return min(max(float(est[0]), 0.0), r)


class RadarArray:
    """The five radars of one car, optionally each with its own filter."""

    def __init__(self, track: Track, cfg: CarConfig, noise_rng: np.random.Generator, filter_rng=None) -> None:
        self.track = track
        self.cfg = cfg
        self.noise_rng = noise_rng
        self.filters = None
        if filter_rng is not None:
            self.filters = [RadarFilter(cfg, filter_rng) for _ in cfg.radar_angles]
        self._last_true: NDArray[np.float64] | None = None

    def sense(self, car: CarState) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """Return (true, noisy, filtered) distances; filtered equals noisy without filters."""
        readings = [cast_radar(self.track, car, a, self.noise_rng, self.cfg) for a in self.cfg.radar_angles]
        true_d = np.array([rd.true_distance for rd in readings])
        noisy = np.array([rd.noisy_distance for rd in readings])
        if self.filters is None:
            filtered = noisy
        else:
            deltas = np.zeros_like(true_d) if self._last_true is None else true_d - self._last_true
            filtered = np.array([f.update(z, d) for f, z, d in zip(self.filters, noisy, deltas)])
        self._last_true = true_d
        return true_d, noisy, filtered

    def readings(self, car: CarState) -> list[RadarReading]:
        true_d, noisy, filtered = self.sense(car)
        return [RadarReading(*row) for row in zip(self.cfg.radar_angles, true_d, noisy, filtered)]
