"""Synthetic arena of interacting agents with exact groundtruth.

Agents are oriented rectangles moving in a bounded box. Each frame an agent
advances along its heading by a draw from the speed distribution, with
Gaussian heading jitter. When another agent's center first comes within the
encounter radius the agent stops for that frame and, with the configured
probability, reverses its heading; while the pair stays inside the radius
no further stops fire, so encounters resolve instead of freezing both
agents in place. Walls reflect specularly with enough margin to keep the
whole rectangle visible.

Trajectories and pixel noise use two generators spawned from one seed, so
the same scenario yields the same trajectory whether or not frames are
rendered.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .csvio import expect_header, fmt_float, read_rows, write_rows
from .geometry import Frame, PatchDims, covered_pixel_centers

_PI = math.pi
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScenarioConfig:
    n_agents: int = 20
    width: int = 720
    height: int = 480
    dims: PatchDims = field(default_factory=PatchDims)
    speed_mean: float = 3.0
    speed_std: float = 0.5
    heading_jitter_std: float = 0.15
    encounter_radius: float = 24.0
    reverse_prob: float = 0.8
    agent_intensity: float = 0.15
    background_intensity: float = 0.85
    noise_std: float = 0.05
    n_frames: int = 100
    rng_seed: int = 0
    initial_poses: tuple | None = None

    def __post_init__(self):
        if self.n_agents < 0:
            raise ValueError(f"n_agents must be >= 0, got {self.n_agents}")
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {self.n_frames}")
        self.dims.validate()
        mrg = margin(self.dims)
        if self.width - 1 - 2 * mrg <= 0 or self.height - 1 - 2 * mrg <= 0:
            raise ValueError(f"agents of dims {self.dims} do not fit in a {self.width}x{self.height} arena")
        if not 0.0 <= self.reverse_prob <= 1.0:
            raise ValueError(f"reverse_prob must be in [0, 1], got {self.reverse_prob}")
        for name in ("agent_intensity", "background_intensity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("speed_std", "heading_jitter_std", "noise_std"):
            v = getattr(self, name)
            if v < 0.0 or not math.isfinite(v):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.speed_mean < 0.0 or not math.isfinite(self.speed_mean):
            raise ValueError(f"speed_mean must be finite and >= 0, got {self.speed_mean}")
        if self.encounter_radius <= 0.0:
            raise ValueError(f"encounter_radius must be positive, got {self.encounter_radius}")
        if self.initial_poses is not None:
            arr = np.asarray(self.initial_poses, dtype=np.float64)
            if arr.ndim != 2 or arr.shape != (self.n_agents, 3):
                raise ValueError(
                    f"initial_poses must be ({self.n_agents}, 3), got shape {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError("initial_poses contains non-finite values")
            inside_x = (arr[:, 0] >= 0.0) & (arr[:, 0] <= self.width - 1)
            inside_y = (arr[:, 1] >= 0.0) & (arr[:, 1] <= self.height - 1)
            if not np.all(inside_x & inside_y):
                raise ValueError("initial_poses centers must lie inside the arena")
            canon = tuple((float(x), float(y), float(t)) for x, y, t in arr)
            object.__setattr__(self, "initial_poses", canon)


def margin(dims: PatchDims) -> float:
    """Wall clearance that keeps the whole rectangle inside the arena."""
    return 0.5 * math.hypot(dims.length, dims.width) + 1.0


class WorldState:
    """Per-agent pose, the speed applied in the last step, and the
    already-near flag used for edge-triggered encounters."""

    __slots__ = ("poses", "speeds", "near_prev")

    def __init__(self, poses, speeds=None, near_prev=None):
        arr = np.array(poses, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (n, 3) pose array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("world poses contain non-finite values")
        arr[:, 2] = (arr[:, 2] + _PI) % _TWO_PI - _PI
        arr.setflags(write=False)
        n = arr.shape[0]
        self.poses = arr
        self.speeds = np.zeros(n) if speeds is None else np.asarray(speeds, dtype=np.float64)
        self.near_prev = (
            np.zeros(n, dtype=bool) if near_prev is None else np.asarray(near_prev, dtype=bool)
        )
        if self.speeds.shape != (n,) or self.near_prev.shape != (n,):
            raise ValueError("speeds and near_prev must have one entry per agent")

    @property
    def n_agents(self) -> int:
        return self.poses.shape[0]


def _near_mask(poses: np.ndarray, radius: float) -> np.ndarray:
    """True where some other agent's center is within radius."""
    n = poses.shape[0]
    if n < 2:
        return np.zeros(n, dtype=bool)
    d = poses[:, None, :2] - poses[None, :, :2]
    d2 = d[:, :, 0] ** 2 + d[:, :, 1] ** 2
    np.fill_diagonal(d2, np.inf)
    return (d2 <= radius * radius).any(axis=1)


def init_world(cfg: ScenarioConfig, rng: np.random.Generator) -> WorldState:
    """Initial agent placement: configured poses, or rejection-sampled
    positions at least 1.5 encounter radii apart."""
    if cfg.initial_poses is not None:
        return WorldState(np.asarray(cfg.initial_poses, dtype=np.float64))
    mrg = margin(cfg.dims)
    x_lo, x_hi = mrg, cfg.width - 1 - mrg
    y_lo, y_hi = mrg, cfg.height - 1 - mrg
    min_sep2 = (1.5 * cfg.encounter_radius) ** 2
    poses = np.empty((cfg.n_agents, 3))
    for k in range(cfg.n_agents):
        for _ in range(10_000):
            u = rng.random(3)
            x = x_lo + u[0] * (x_hi - x_lo)
            y = y_lo + u[1] * (y_hi - y_lo)
            d = poses[:k, :2] - (x, y)
            if k and (d[:, 0] ** 2 + d[:, 1] ** 2).min() < min_sep2:
                continue
            poses[k] = (x, y, -_PI + u[2] * _TWO_PI)
            break
        else:
            raise ValueError(f"could not place {cfg.n_agents} agents with separation in the arena")
    return WorldState(poses)


def step_world(world: WorldState, cfg: ScenarioConfig, rng: np.random.Generator) -> WorldState:
    """Advance every agent by one frame.

    Draw layout is fixed per step (speeds, jitters, reversal uniforms, each
    n draws) so the stream does not depend on encounter outcomes.
    """
    n = world.n_agents
    speed_draw = cfg.speed_mean + cfg.speed_std * rng.standard_normal(n)
    jitter = cfg.heading_jitter_std * rng.standard_normal(n)
    rev_u = rng.random(n)
    if n == 0:
        return WorldState(world.poses.copy())

    near_now = _near_mask(world.poses, cfg.encounter_radius)
    entering = near_now & ~world.near_prev
    speeds = np.where(entering, 0.0, speed_draw)
    flip = entering & (rev_u < cfg.reverse_prob)

    th = world.poses[:, 2] + jitter + np.where(flip, _PI, 0.0)
    th = (th + _PI) % _TWO_PI - _PI
    x = world.poses[:, 0] + speeds * np.cos(th)
    y = world.poses[:, 1] + speeds * np.sin(th)

    mrg = margin(cfg.dims)
    x, th = _reflect(x, th, mrg, cfg.width - 1 - mrg, flip_x=True)
    y, th = _reflect(y, th, mrg, cfg.height - 1 - mrg, flip_x=False)

    return WorldState(np.column_stack([x, y, th]), speeds, near_now)


def _reflect(p, th, lo, hi, flip_x):
    """Specular bounce of one coordinate off [lo, hi]; heading mirrored."""
    below = p < lo
    above = p > hi
    p = np.where(below, 2.0 * lo - p, p)
    p = np.where(above, 2.0 * hi - p, p)
    hit = below | above
    if flip_x:
        th = np.where(hit, _PI - th, th)
    else:
        th = np.where(hit, -th, th)
    th = (th + _PI) % _TWO_PI - _PI
    return np.clip(p, lo, hi), th


def render(world: WorldState, cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> Frame:
    """Draw the world: background, agent rectangles, optional pixel noise.

    Noise needs a generator; pass None (or set noise_std to 0) for a clean
    frame.
    """
    img = np.full((cfg.height, cfg.width), cfg.background_intensity, dtype=np.float64)
    for pose in world.poses:
        xs, ys = covered_pixel_centers(pose, cfg.dims, cfg.width, cfg.height)
        img[ys, xs] = cfg.agent_intensity
    if rng is not None and cfg.noise_std > 0.0:
        img += cfg.noise_std * rng.standard_normal(img.shape)
        np.clip(img, 0.0, 1.0, out=img)
    return Frame(img)


def make_crossing_scenario(**overrides) -> ScenarioConfig:
    """Two agents on perpendicular collision courses.

    Both reach the arena center roughly a quarter of the way into the run
    (always within the first third). n_agents and initial_poses are derived
    here; every other field accepts overrides.
    """
    overrides.pop("n_agents", None)
    overrides.pop("initial_poses", None)
    cfg = ScenarioConfig(n_agents=2, **overrides)
    cross = max(3, cfg.n_frames // 4)
    d = cfg.speed_mean * cross
    cx, cy = (cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0
    mrg = margin(cfg.dims)
    if d > min(cx, cy) - mrg:
        raise ValueError(
            f"crossing approach of {d:.0f}px does not fit; lower speed_mean or n_frames"
        )
    poses = ((cx - d, cy, 0.0), (cx, cy - d, _PI / 2.0))
    return replace(cfg, initial_poses=poses)


def simulate_sequence(cfg: ScenarioConfig, render_frames: bool = True):
    """Yield (frame_index, WorldState, Frame | None) for frames 1..n_frames.

    The world yielded at index t is the one the frame depicts; stepping
    happens between yields. Trajectory draws and pixel-noise draws come from
    independent generators spawned off cfg.rng_seed, so render_frames=False
    produces the identical trajectory.
    """
    traj_ss, noise_ss = np.random.SeedSequence(cfg.rng_seed).spawn(2)
    traj_rng = np.random.default_rng(traj_ss)
    noise_rng = np.random.default_rng(noise_ss)
    world = init_world(cfg, traj_rng)
    for t in range(1, cfg.n_frames + 1):
        frame = render(world, cfg, noise_rng) if render_frames else None
        yield t, world, frame
        if t < cfg.n_frames:
            world = step_world(world, cfg, traj_rng)


class GroundTruthTrack:
    """Exact per-frame, per-agent poses; frames 1-based, ids 0-based."""

    __slots__ = ("poses",)

    def __init__(self, poses):
        arr = np.array(poses, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (n_frames, n_agents, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("groundtruth needs at least one frame")
        if not np.all(np.isfinite(arr)):
            raise ValueError("groundtruth contains non-finite values")
        arr.setflags(write=False)
        self.poses = arr

    @property
    def n_frames(self) -> int:
        return self.poses.shape[0]

    @property
    def n_targets(self) -> int:
        return self.poses.shape[1]

    def frame_poses(self, t: int) -> np.ndarray:
        """Poses at 1-based frame index t."""
        if not 1 <= t <= self.n_frames:
            raise IndexError(f"frame {t} outside 1..{self.n_frames}")
        return self.poses[t - 1]

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig) -> "GroundTruthTrack":
        """Trajectory only, no rendering."""
        return cls(np.stack([w.poses for _, w, _ in simulate_sequence(cfg, render_frames=False)]))

    HEADER = ["frame", "id", "x", "y", "theta"]

    def write_csv(self, path: str | os.PathLike) -> None:
        rows = (
            [str(t + 1), str(k)] + [fmt_float(v) for v in self.poses[t, k]]
            for t in range(self.n_frames)
            for k in range(self.n_targets)
        )
        write_rows(path, self.HEADER, rows)

    @classmethod
    def read_csv(cls, path: str | os.PathLike) -> "GroundTruthTrack":
        header, rows = read_rows(path)
        expect_header(header, cls.HEADER, path)
        if not rows:
            raise ValueError(f"{path}: no groundtruth rows")
        frames = sorted({int(r[0]) for r in rows})
        ids = sorted({int(r[1]) for r in rows})
        n_frames, n = len(frames), len(ids)
        if frames != list(range(1, n_frames + 1)) or ids != list(range(n)):
            raise ValueError(f"{path}: frames must be 1..T and ids 0..n-1 with no gaps")
        poses = np.full((n_frames, n, 3), np.nan)
        for r in rows:
            if len(r) != 5:
                raise ValueError(f"{path}: malformed row {r!r}")
            poses[int(r[0]) - 1, int(r[1])] = (float(r[2]), float(r[3]), float(r[4]))
        if np.any(np.isnan(poses)):
            raise ValueError(f"{path}: missing frame x id combinations")
        return cls(poses)
